// noise.cpp — OU and telegraph noise generators, initial laws, samplers.

#include "specdiff/noise.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace specdiff {

Eigen::SparseMatrix<double> ou_generator(const XiGrid& grid, const OunParams& p) {
    grid.validate();
    const int n = grid.n_points;
    const double h = grid.spacing();
    const double sigma2 = p.sigma * p.sigma;
    const double g = p.gamma_decay;

    // (Z m)_i = (J_{i+1/2} - J_{i-1/2}) / h with
    // J_{i+1/2} = gamma [ xi_{i+1/2} (m_i + m_{i+1}) / 2 + sigma^2 (m_{i+1} - m_i) / h ]
    // and J = 0 at both boundaries. Each interior flux contributes with equal
    // and opposite sign to rows i and i+1, so column sums cancel exactly.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(4 * n));
    for (int i = 0; i + 1 < n; ++i) {
        const double xi_half = 0.5 * (grid.point(i) + grid.point(i + 1));
        const double to_lower = g * (0.5 * xi_half - sigma2 / h) / h;   // weight of m_i in J/h
        const double to_upper = g * (0.5 * xi_half + sigma2 / h) / h;   // weight of m_{i+1} in J/h
        trip.emplace_back(i, i, to_lower);
        trip.emplace_back(i, i + 1, to_upper);
        trip.emplace_back(i + 1, i, -to_lower);
        trip.emplace_back(i + 1, i + 1, -to_upper);
    }
    Eigen::SparseMatrix<double> z(n, n);
    z.setFromTriplets(trip.begin(), trip.end());
    return z;
}

Eigen::VectorXd ou_initial_pmf(const XiGrid& grid, const OunParams& p) {
    grid.validate();
    const double mean = p.initial_mean();
    const double var = p.initial_variance();
    if (!(var > 0.0))
        throw std::invalid_argument("ou_initial_pmf: initial variance must be positive (|a| < 1)");
    const double stddev = std::sqrt(var);
    if (!grid.covers(mean - 5.0 * stddev, mean + 5.0 * stddev))
        throw std::invalid_argument(
            "ou_initial_pmf: grid must cover at least +-5 initial standard deviations around a*chi");

    Eigen::VectorXd mass(grid.n_points);
    const double h = grid.spacing();
    const double norm = h / std::sqrt(2.0 * M_PI * var);
    for (int i = 0; i < grid.n_points; ++i) {
        const double d = grid.point(i) - mean;
        mass[i] = norm * std::exp(-0.5 * d * d / var);
    }
    const double total = mass.sum();
    if (1.0 - total > 1e-6) {
        std::ostringstream msg;
        msg << "ou_initial_pmf: grid truncates " << 1.0 - total
            << " of the initial mass (> 1e-6); widen the grid";
        throw std::invalid_argument(msg.str());
    }
    return mass / total;
}

Eigen::VectorXd ou_stationary_pmf(const XiGrid& grid, const OunParams& p) {
    grid.validate();
    // Zero flux at every interface gives the two-term recurrence
    // m_{i+1}/m_i = (sigma^2/h - xi_{i+1/2}/2) / (sigma^2/h + xi_{i+1/2}/2).
    const double h = grid.spacing();
    const double sigma2 = p.sigma * p.sigma;
    Eigen::VectorXd m(grid.n_points);
    // Anchor at the grid point closest to 0 to avoid under/overflow in the tails.
    int anchor = 0;
    for (int i = 1; i < grid.n_points; ++i)
        if (std::abs(grid.point(i)) < std::abs(grid.point(anchor))) anchor = i;
    m[anchor] = 1.0;
    for (int i = anchor; i + 1 < grid.n_points; ++i) {
        const double xi_half = 0.5 * (grid.point(i) + grid.point(i + 1));
        m[i + 1] = m[i] * (sigma2 / h - 0.5 * xi_half) / (sigma2 / h + 0.5 * xi_half);
    }
    for (int i = anchor; i > 0; --i) {
        const double xi_half = 0.5 * (grid.point(i - 1) + grid.point(i));
        m[i - 1] = m[i] * (sigma2 / h + 0.5 * xi_half) / (sigma2 / h - 0.5 * xi_half);
    }
    return m / m.sum();
}

Eigen::Matrix2d rtn_generator(const RtnParams& p) {
    const double l = p.lambda_switch;
    Eigen::Matrix2d z;
    z << -l, l,
          l, -l;
    return z;
}

std::pair<double, double> rtn_initial_pmf(double a) {
    if (!(std::abs(a) <= 1.0))
        throw std::invalid_argument("rtn_initial_pmf: |a| must not exceed 1");
    return {0.5 * (1.0 + a), 0.5 * (1.0 - a)};
}

namespace {

void check_path_grid(std::span<const double> t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("noise path grid must not be empty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("noise path grid must be strictly ascending");
}

}  // namespace

NoisePath sample_ou_path(const OunParams& p, std::span<const double> t_grid, RngStream& rng) {
    check_path_grid(t_grid);
    NoisePath path;
    path.times.assign(t_grid.begin(), t_grid.end());
    path.values.resize(t_grid.size());

    const double sigma2 = p.sigma * p.sigma;
    double xi = rng.normal(p.initial_mean(), std::sqrt(p.initial_variance()));
    path.values[0] = xi;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double dt = t_grid[i] - t_grid[i - 1];
        const double decay = std::exp(-p.gamma_decay * dt);
        xi = xi * decay + rng.normal(0.0, std::sqrt(sigma2 * (1.0 - decay * decay)));
        path.values[i] = xi;
    }
    return path;
}

NoisePath sample_rtn_path(const RtnParams& p, std::span<const double> t_grid, RngStream& rng) {
    check_path_grid(t_grid);
    NoisePath path;
    path.times.assign(t_grid.begin(), t_grid.end());
    path.values.resize(t_grid.size());

    const auto [p_plus, p_minus] = rtn_initial_pmf(p.a);
    (void)p_minus;
    double sign = rng.bernoulli(p_plus) ? 1.0 : -1.0;
    double t_flip = rng.exponential(p.lambda_switch);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        while (t_flip <= t_grid[i]) {
            sign = -sign;
            t_flip += rng.exponential(p.lambda_switch);
        }
        path.values[i] = sign * p.nu;
    }
    return path;
}

}  // namespace specdiff
