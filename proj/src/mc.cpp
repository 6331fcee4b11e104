// mc.cpp — Trajectory-averaged oracle with schedule-independent reduction.

#include "specdiff/mc.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>
#include <variant>

#include "specdiff/noise.hpp"
#include "specdiff/parallel.hpp"
#include "specdiff/rng.hpp"

namespace specdiff {

namespace {

constexpr long kBlockSize = 64;  // trajectories per reduction block, fixed

struct PathGrid {
    std::vector<double> times;        // refined nodes, superset of the output grid
    std::vector<std::size_t> output;  // positions of the output times within `times`
};

// Refines the output grid so every interval is at most dt_max long.
PathGrid refine_grid(std::span<const double> t_grid, double dt_max) {
    PathGrid grid;
    grid.times.push_back(t_grid[0]);
    grid.output.push_back(0);
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        const int pieces =
            std::isfinite(dt_max) && dt_max > 0.0
                ? std::max(1, static_cast<int>(std::ceil(span / dt_max)))
                : 1;
        for (int k = 1; k <= pieces; ++k) {
            grid.times.push_back(k == pieces ? t_grid[i]
                                             : t_grid[i - 1] + span * k / pieces);
        }
        grid.output.push_back(grid.times.size() - 1);
    }
    return grid;
}

std::uint64_t bit_key(double x) {
    std::uint64_t k;
    std::memcpy(&k, &x, sizeof(k));
    return k;
}

// Running mean and centered second-moment matrix per output time (Welford
// within a block, Chan's formula across blocks). Centered accumulation keeps
// degenerate ensembles (identical trajectories) at exactly zero variance and
// merges deterministically in fixed block order.
struct BlockStats {
    long count = 0;
    Eigen::MatrixXd mean;              // n_times x dim
    std::vector<Eigen::MatrixXd> m2;   // per time: dim x dim

    static BlockStats zero(Eigen::Index n_times, Eigen::Index dim) {
        BlockStats b;
        b.mean = Eigen::MatrixXd::Zero(n_times, dim);
        b.m2.assign(n_times, Eigen::MatrixXd::Zero(dim, dim));
        return b;
    }

    void add(Eigen::Index t, const Eigen::VectorXd& y, long n_new) {
        const Eigen::VectorXd before = y - mean.row(t).transpose();
        mean.row(t) += before.transpose() / static_cast<double>(n_new);
        const Eigen::VectorXd after = y - mean.row(t).transpose();
        m2[t].noalias() += before * after.transpose();
    }

    void merge(const BlockStats& other) {
        if (other.count == 0) return;
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(other.count);
        const double n = na + nb;
        for (std::size_t t = 0; t < m2.size(); ++t) {
            const Eigen::VectorXd delta =
                (other.mean.row(static_cast<Eigen::Index>(t)) - mean.row(static_cast<Eigen::Index>(t)))
                    .transpose();
            m2[t] += other.m2[t] + (na * nb / n) * (delta * delta.transpose());
            mean.row(static_cast<Eigen::Index>(t)) += (nb / n) * delta.transpose();
        }
        count += other.count;
    }
};

}  // namespace

McEstimate mc_estimate(const SystemParams& sys, const NoiseModel& noise, const CountingPoint& cp,
                       std::span<const double> t_grid, long n_traj, std::uint64_t seed,
                       const McOptions& opts) {
    sys.validate();
    cp.validate();
    if (n_traj < 2) throw std::invalid_argument("mc_estimate: n_traj must be at least 2");
    if (t_grid.empty() || t_grid[0] != 0.0)
        throw std::invalid_argument("mc_estimate: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("mc_estimate: time grid must be strictly ascending");

    const double corr_rate = std::visit(
        [](const auto& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OunParams>) return model.gamma_decay;
            else if constexpr (std::is_same_v<T, RtnParams>) return model.lambda_switch;
            else return 0.0;
        },
        noise);
    const double dt_max = corr_rate > 0.0 ? opts.dt_fraction / corr_rate
                                          : std::numeric_limits<double>::infinity();
    const PathGrid grid = refine_grid(t_grid, dt_max);

    const Eigen::Index dim = 4 * (cp.n_derivs + 1);
    const Eigen::Index n_times = static_cast<Eigen::Index>(t_grid.size());
    const GfState y0 = initial_state(cp.n_derivs);

    const long n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
    std::vector<BlockStats> blocks(n_blocks);

    parallel_for(static_cast<std::size_t>(n_blocks), resolve_workers(opts.workers),
                 [&](std::size_t blk) {
        BlockStats stats = BlockStats::zero(n_times, dim);
        // Exponentials are cached per (xi, dt); telegraph paths revisit the
        // same few values, OU paths rarely hit the cache.
        std::map<std::pair<std::uint64_t, std::uint64_t>, Eigen::MatrixXd> cache;
        const long first = static_cast<long>(blk) * kBlockSize;
        const long last = std::min(n_traj, first + kBlockSize);
        for (long traj = first; traj < last; ++traj) {
            RngStream rng(seed, static_cast<std::uint64_t>(traj));
            NoisePath path;
            if (const auto* oun = std::get_if<OunParams>(&noise)) {
                path = sample_ou_path(*oun, grid.times, rng);
            } else if (const auto* rtn = std::get_if<RtnParams>(&noise)) {
                path = sample_rtn_path(*rtn, grid.times, rng);
            } else {
                path.times = grid.times;
                path.values.assign(grid.times.size(), 0.0);
            }

            Eigen::VectorXd y = y0;
            std::size_t out_pos = 0;
            ++stats.count;
            for (std::size_t k = 0; k < grid.times.size(); ++k) {
                if (k > 0) {
                    const double dt = grid.times[k] - grid.times[k - 1];
                    const double xi = path.values[k - 1];  // frozen on [t_{k-1}, t_k)
                    const auto key = std::make_pair(bit_key(xi), bit_key(dt));
                    auto it = cache.find(key);
                    if (it == cache.end()) {
                        Eigen::MatrixXd e =
                            (augmented_generator(sys, cp.s, xi, cp.n_derivs) * dt).exp();
                        it = cache.emplace(key, std::move(e)).first;
                        if (cache.size() > 4096) cache.clear();  // OU paths: bound memory
                    }
                    y = it->second * y;
                }
                if (out_pos < grid.output.size() && grid.output[out_pos] == k) {
                    stats.add(static_cast<Eigen::Index>(out_pos), y, stats.count);
                    ++out_pos;
                }
            }
        }
        blocks[blk] = std::move(stats);
    });

    // Pairwise merge in fixed block order.
    for (long stride = 1; stride < n_blocks; stride *= 2)
        for (long i = 0; i + stride < n_blocks; i += 2 * stride)
            blocks[i].merge(blocks[i + stride]);
    const BlockStats& total = blocks[0];

    McEstimate est;
    est.times.assign(t_grid.begin(), t_grid.end());
    est.n_traj = n_traj;
    const double n = static_cast<double>(n_traj);
    est.mean = total.mean;
    est.std_err.resize(n_times, dim);
    est.cov_mean.reserve(n_times);
    for (Eigen::Index t = 0; t < n_times; ++t) {
        // Symmetrize the Welford cross-moment before scaling.
        Eigen::MatrixXd cov_mean =
            (total.m2[t] + total.m2[t].transpose()) / (2.0 * (n - 1.0) * n);
        for (Eigen::Index c = 0; c < dim; ++c) {
            est.std_err(t, c) = std::sqrt(std::max(0.0, cov_mean(c, c)));
            if (est.std_err(t, c) > 0.1 * std::abs(est.mean(t, c)) &&
                std::abs(est.mean(t, c)) > 1e-12)
                est.large_se_warning = true;
        }
        est.cov_mean.push_back(std::move(cov_mean));
    }
    return est;
}

CompareReport compare(const std::vector<double>& sle_times, const std::vector<GfState>& sle_avg,
                      const McEstimate& mc, double k_sigma) {
    if (sle_times.size() != mc.times.size() || sle_avg.size() != mc.times.size())
        throw std::invalid_argument("compare: time grids have different lengths");
    for (std::size_t i = 0; i < sle_times.size(); ++i)
        if (std::abs(sle_times[i] - mc.times[i]) > 1e-12)
            throw std::invalid_argument("compare: time grids do not match");
    if (!sle_avg.empty() && sle_avg.front().size() != mc.mean.cols())
        throw std::invalid_argument("compare: component layouts do not match");

    CompareReport report;
    report.k_sigma = k_sigma;
    for (std::size_t t = 0; t < sle_avg.size(); ++t) {
        for (Eigen::Index c = 0; c < mc.mean.cols(); ++c) {
            const double diff = std::abs(sle_avg[t][c] - mc.mean(static_cast<Eigen::Index>(t), c));
            const double se = mc.std_err(static_cast<Eigen::Index>(t), c);
            double z;
            if (se > 0.0) {
                z = diff / se;
            } else {
                // Degenerate component (every trajectory identical): demand
                // agreement at integration accuracy.
                z = diff <= 1e-10 * std::max(1.0, std::abs(sle_avg[t][c])) ? 0.0
                    : std::numeric_limits<double>::infinity();
            }
            if (z > report.max_z) {
                report.max_z = z;
                report.worst_time = static_cast<Eigen::Index>(t);
                report.worst_component = c;
            }
        }
    }
    report.pass = report.max_z <= k_sigma;
    return report;
}

ScalarEstimate mc_mean_photons(const McEstimate& mc, Eigen::Index t_idx) {
    if (mc.mean.cols() < 8)
        throw std::invalid_argument("mc_mean_photons: estimate carries no derivative block");
    ScalarEstimate e;
    e.value = mc.mean(t_idx, p_index(1));
    e.std_err = mc.std_err(t_idx, p_index(1));
    return e;
}

ScalarEstimate mc_mandel_q(const McEstimate& mc, Eigen::Index t_idx) {
    if (mc.mean.cols() < 12)
        throw std::invalid_argument("mc_mandel_q: estimate carries fewer than two derivative blocks");
    const Eigen::Index i1 = p_index(1), i2 = p_index(2);
    const double m1 = mc.mean(t_idx, i1);
    const double m2 = mc.mean(t_idx, i2);
    if (!(m1 > 1e-12))
        throw std::invalid_argument("mc_mandel_q: <N> is too small for Q to be defined");
    ScalarEstimate e;
    e.value = (m2 - m1 * m1) / m1;
    // Delta method: Q = m2/m1 - m1, grad = (-m2/m1^2 - 1, 1/m1).
    const double g1 = -m2 / (m1 * m1) - 1.0;
    const double g2 = 1.0 / m1;
    const Eigen::MatrixXd& cov = mc.cov_mean[static_cast<std::size_t>(t_idx)];
    const double var = g1 * g1 * cov(i1, i1) + 2.0 * g1 * g2 * cov(i1, i2) + g2 * g2 * cov(i2, i2);
    e.std_err = std::sqrt(std::max(0.0, var));
    return e;
}

}  // namespace specdiff
