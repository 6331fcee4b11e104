// sle.cpp — Joint generator assembly and marginal-average propagation.

#include "specdiff/sle.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace specdiff {

namespace {

constexpr Eigen::Index kMaxDim = 1'000'000;

void append_dense_block(std::vector<Eigen::Triplet<double>>& trip, const Eigen::MatrixXd& block,
                        Eigen::Index row0, Eigen::Index col0) {
    for (Eigen::Index c = 0; c < block.cols(); ++c)
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            if (block(r, c) != 0.0) trip.emplace_back(row0 + r, col0 + c, block(r, c));
}

}  // namespace

SleGenerator build_sle_generator_oun(const SystemParams& sys, const OunParams& oun,
                                     const XiGrid& grid, double s, int n) {
    grid.validate();
    if (n < 0) throw std::invalid_argument("build_sle_generator_oun: n must be >= 0");
    const Eigen::Index bd = 4 * (n + 1);
    const Eigen::Index dim = bd * grid.n_points;
    if (dim > kMaxDim) {
        std::ostringstream msg;
        msg << "SLE dimension " << dim << " exceeds " << kMaxDim
            << "; coarsen the xi grid or lower the derivative order";
        throw std::invalid_argument(msg.str());
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid.n_points) * (12 * (n + 1) + 3 * bd));
    for (int b = 0; b < grid.n_points; ++b)
        append_dense_block(trip, augmented_generator(sys, s, grid.point(b), n), b * bd, b * bd);

    const Eigen::SparseMatrix<double> z = ou_generator(grid, oun);
    for (int k = 0; k < z.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(z, k); it; ++it)
            for (Eigen::Index c = 0; c < bd; ++c)
                trip.emplace_back(it.row() * bd + c, it.col() * bd + c, it.value());

    SleGenerator gen;
    gen.matrix.resize(dim, dim);
    gen.matrix.setFromTriplets(trip.begin(), trip.end());
    gen.n_blocks = grid.n_points;
    gen.n_derivs = n;
    gen.noise_rate = oun.gamma_decay;
    return gen;
}

SleGenerator build_sle_generator_rtn(const SystemParams& sys, const RtnParams& rtn,
                                     double s, int n) {
    if (n < 0) throw std::invalid_argument("build_sle_generator_rtn: n must be >= 0");
    const Eigen::Index bd = 4 * (n + 1);
    const double l = rtn.lambda_switch;

    std::vector<Eigen::Triplet<double>> trip;
    append_dense_block(trip, augmented_generator(sys, s, rtn.nu, n), 0, 0);
    append_dense_block(trip, augmented_generator(sys, s, -rtn.nu, n), bd, bd);
    for (Eigen::Index c = 0; c < bd; ++c) {
        trip.emplace_back(c, c, -l);
        trip.emplace_back(bd + c, bd + c, -l);
        trip.emplace_back(c, bd + c, l);
        trip.emplace_back(bd + c, c, l);
    }

    SleGenerator gen;
    gen.matrix.resize(2 * bd, 2 * bd);
    gen.matrix.setFromTriplets(trip.begin(), trip.end());
    gen.n_blocks = 2;
    gen.n_derivs = n;
    gen.noise_rate = l;
    return gen;
}

SleGenerator build_sle_generator_free(const SystemParams& sys, double s, int n) {
    if (n < 0) throw std::invalid_argument("build_sle_generator_free: n must be >= 0");
    std::vector<Eigen::Triplet<double>> trip;
    append_dense_block(trip, augmented_generator(sys, s, 0.0, n), 0, 0);
    SleGenerator gen;
    const Eigen::Index bd = 4 * (n + 1);
    gen.matrix.resize(bd, bd);
    gen.matrix.setFromTriplets(trip.begin(), trip.end());
    gen.n_blocks = 1;
    gen.n_derivs = n;
    gen.noise_rate = 0.0;
    return gen;
}

SleGenerator build_sle_generator(const SystemParams& sys, const NoiseModel& noise,
                                 const XiGrid& grid, double s, int n) {
    return std::visit(
        [&](const auto& model) -> SleGenerator {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OunParams>)
                return build_sle_generator_oun(sys, model, grid, s, n);
            else if constexpr (std::is_same_v<T, RtnParams>)
                return build_sle_generator_rtn(sys, model, s, n);
            else
                return build_sle_generator_free(sys, s, n);
        },
        noise);
}

Eigen::VectorXd noise_initial_pmf(const NoiseModel& noise, const XiGrid& grid) {
    return std::visit(
        [&](const auto& model) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OunParams>) {
                return ou_initial_pmf(grid, model);
            } else if constexpr (std::is_same_v<T, RtnParams>) {
                const auto [p_plus, p_minus] = rtn_initial_pmf(model.a);
                Eigen::VectorXd pmf(2);
                pmf << p_plus, p_minus;
                return pmf;
            } else {
                return Eigen::VectorXd::Ones(1);
            }
        },
        noise);
}

Eigen::VectorXd sle_initial(const Eigen::VectorXd& pmf, int n) {
    if (n < 0) throw std::invalid_argument("sle_initial: n must be >= 0");
    if (std::abs(pmf.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("sle_initial: pmf must sum to 1 within 1e-9");
    const GfState base = initial_state(n);
    Eigen::VectorXd stacked(pmf.size() * base.size());
    for (Eigen::Index b = 0; b < pmf.size(); ++b)
        stacked.segment(b * base.size(), base.size()) = pmf[b] * base;
    return stacked;
}

PropagateOptions resolve_sle_options(const SleGenerator& gen, const PropagateOptions& opts) {
    PropagateOptions resolved = opts;
    if (resolved.method == Method::Auto && gen.noise_rate >= 100.0) {
        if (gen.dim() <= resolved.dense_expm_max_dim)
            resolved.method = Method::DenseExpm;
        // otherwise leave Auto: choose_method raises the stiffness diagnostic
    }
    return resolved;
}

MarginalTrajectory propagate(const SleGenerator& gen, const Eigen::VectorXd& init,
                             std::span<const double> t_grid, const PropagateOptions& opts) {
    if (init.size() != gen.dim())
        throw std::invalid_argument("propagate: initial state does not match generator layout");
    MarginalTrajectory traj;
    traj.times.assign(t_grid.begin(), t_grid.end());
    traj.states = propagate_sparse(gen.matrix, init, t_grid, resolve_sle_options(gen, opts));
    traj.n_blocks = gen.n_blocks;
    traj.n_derivs = gen.n_derivs;
    return traj;
}

GfState complete_average_state(const Eigen::VectorXd& stacked, int n_blocks, int block_dim,
                               std::span<const double> weights) {
    if (!weights.empty() && static_cast<int>(weights.size()) != n_blocks)
        throw std::invalid_argument("complete_average: weights length must equal block count");
    GfState avg = GfState::Zero(block_dim);
    for (int b = 0; b < n_blocks; ++b) {
        const double w = weights.empty() ? 1.0 : weights[b];
        avg += w * stacked.segment(static_cast<Eigen::Index>(b) * block_dim, block_dim);
    }
    return avg;
}

std::vector<GfState> complete_average(const MarginalTrajectory& traj,
                                      std::span<const double> weights) {
    std::vector<GfState> out;
    out.reserve(traj.states.size());
    for (const auto& stacked : traj.states)
        out.push_back(complete_average_state(stacked, traj.n_blocks, traj.block_dim(), weights));
    return out;
}

std::vector<Eigen::Index> base_block_indices(const SleGenerator& gen) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(gen.n_blocks) * 4);
    for (int b = 0; b < gen.n_blocks; ++b)
        for (int c = 0; c < 4; ++c)
            idx.push_back(static_cast<Eigen::Index>(b) * gen.block_dim() + c);
    return idx;
}

}  // namespace specdiff
