// bloch.cpp — Generating-function Bloch generator assembly and noise-free propagation.

#include "specdiff/bloch.hpp"

#include <stdexcept>

namespace specdiff {

Eigen::Matrix4d coefficient_matrix(const SystemParams& sys, double s, double xi) {
    const double g = sys.gamma_sp;
    const double delta = sys.delta0 + xi;
    const double omega = sys.omega0;
    Eigen::Matrix4d m;
    m << -0.5 * g,   -delta,      0.0,                 0.0,
          delta,     -0.5 * g,   -omega,               0.0,
          0.0,        omega,     -0.5 * g * (1 + s),  -0.5 * g * (1 + s),
          0.0,        0.0,       -0.5 * g * (1 - s),  -0.5 * g * (1 - s);
    return m;
}

Eigen::Matrix4d ds_coefficient_matrix(const SystemParams& sys) {
    const double g = sys.gamma_sp;
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(2, 2) = -0.5 * g;
    m(2, 3) = -0.5 * g;
    m(3, 2) = 0.5 * g;
    m(3, 3) = 0.5 * g;
    return m;
}

Eigen::MatrixXd augmented_generator(const SystemParams& sys, double s, double xi, int n) {
    if (n < 0) throw std::invalid_argument("augmented_generator: derivative order must be >= 0");
    const Eigen::Matrix4d m = coefficient_matrix(sys, s, xi);
    const Eigen::Matrix4d dm = ds_coefficient_matrix(sys);
    const Eigen::Index dim = 4 * (n + 1);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 0; k <= n; ++k) {
        out.block<4, 4>(4 * k, 4 * k) = m;
        if (k > 0) out.block<4, 4>(4 * k, 4 * (k - 1)) = static_cast<double>(k) * dm;
    }
    return out;
}

GfState initial_state(int n) {
    if (n < 0) throw std::invalid_argument("initial_state: derivative order must be >= 0");
    GfState y = GfState::Zero(4 * (n + 1));
    y[kW] = 1.0;
    y[kP] = 1.0;
    return y;
}

std::vector<GfState> noise_free_propagate(const SystemParams& sys, const CountingPoint& cp,
                                          std::span<const double> t_grid,
                                          const PropagateOptions& opts) {
    sys.validate();
    cp.validate();
    const Eigen::MatrixXd gen = augmented_generator(sys, cp.s, 0.0, cp.n_derivs);
    return propagate_dense(gen, initial_state(cp.n_derivs), t_grid, opts);
}

}  // namespace specdiff
