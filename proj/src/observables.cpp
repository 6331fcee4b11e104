// observables.cpp — Photon statistics from complete-average generating functions.

#include "specdiff/observables.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "specdiff/parallel.hpp"

namespace specdiff {

SolveContext SolveContext::make(const SystemParams& sys, const NoiseModel& noise,
                                int grid_points, double grid_sigmas) {
    SolveContext ctx;
    ctx.sys = sys;
    ctx.noise = noise;
    if (const auto* oun = std::get_if<OunParams>(&noise))
        ctx.grid = XiGrid::spanning(*oun, grid_points, grid_sigmas);
    return ctx;
}

namespace {

int derivative_order(const std::vector<GfState>& avg) {
    if (avg.empty()) throw std::invalid_argument("observables: empty series");
    return static_cast<int>(avg.front().size() / 4) - 1;
}

Eigen::VectorXd extract_p_derivative(const std::vector<GfState>& avg, int order) {
    if (derivative_order(avg) < order) {
        std::ostringstream msg;
        msg << "observables: series carries " << derivative_order(avg)
            << " s-derivative blocks but order " << order << " was requested";
        throw std::invalid_argument(msg.str());
    }
    Eigen::VectorXd out(avg.size());
    for (std::size_t i = 0; i < avg.size(); ++i) out[i] = avg[i][p_index(order)];
    return out;
}

}  // namespace

Eigen::VectorXd mean_photons(const std::vector<GfState>& avg) {
    return extract_p_derivative(avg, 1);
}

Eigen::VectorXd line_shape(const std::vector<GfState>& avg, double gamma_sp) {
    Eigen::VectorXd out(avg.size());
    for (std::size_t i = 0; i < avg.size(); ++i)
        out[i] = 0.5 * gamma_sp * (avg[i][kW] + avg[i][kP]);
    return out;
}

Eigen::VectorXd second_factorial_moment(const std::vector<GfState>& avg) {
    return extract_p_derivative(avg, 2);
}

MandelQ mandel_q(const Eigen::VectorXd& mean_n, const Eigen::VectorXd& second_fact) {
    if (mean_n.size() != second_fact.size())
        throw std::invalid_argument("mandel_q: moment series lengths differ");
    MandelQ q;
    q.values.resize(mean_n.size());
    q.defined.resize(mean_n.size());
    constexpr double eps = 1e-12;
    for (Eigen::Index i = 0; i < mean_n.size(); ++i) {
        if (mean_n[i] > eps) {
            q.values[i] = (second_fact[i] - mean_n[i] * mean_n[i]) / mean_n[i];
            q.defined[i] = 1;
        } else {
            q.values[i] = std::numeric_limits<double>::quiet_NaN();
            q.defined[i] = 0;
        }
    }
    return q;
}

ObservableSeries observable_series(const SolveContext& ctx, std::span<const double> times) {
    ctx.sys.validate();
    const SleGenerator gen = build_sle_generator(ctx.sys, ctx.noise, ctx.grid, 1.0, 2);
    const Eigen::VectorXd pmf = noise_initial_pmf(ctx.noise, ctx.grid);
    const MarginalTrajectory traj = propagate(gen, sle_initial(pmf, 2), times, ctx.prop);
    const std::vector<GfState> avg = complete_average(traj);

    ObservableSeries series;
    series.times.assign(times.begin(), times.end());
    series.mean_n = mean_photons(avg);
    series.second_fact = second_factorial_moment(avg);
    series.intensity = line_shape(avg, ctx.sys.gamma_sp);
    MandelQ q = mandel_q(series.mean_n, series.second_fact);
    series.mandel_q = std::move(q.values);
    series.q_defined = std::move(q.defined);
    return series;
}

Eigen::MatrixXd photon_pmf(const SolveContext& ctx, int n_max, std::span<const double> times) {
    if (n_max < 0 || n_max > 10)
        throw std::invalid_argument("photon_pmf: n_max must lie in [0, 10]");
    ctx.sys.validate();
    const SleGenerator gen = build_sle_generator(ctx.sys, ctx.noise, ctx.grid, 0.0, n_max);
    const Eigen::VectorXd pmf0 = noise_initial_pmf(ctx.noise, ctx.grid);
    const MarginalTrajectory traj = propagate(gen, sle_initial(pmf0, n_max), times, ctx.prop);
    const std::vector<GfState> avg = complete_average(traj);

    Eigen::MatrixXd p(times.size(), n_max + 1);
    for (std::size_t i = 0; i < avg.size(); ++i) {
        double factorial = 1.0;
        for (int n = 0; n <= n_max; ++n) {
            if (n > 0) factorial *= n;
            const double value = avg[i][p_index(n)] / factorial;
            if (value < -1e-9) {
                std::ostringstream msg;
                msg << "photon_pmf: p_" << n << "(t=" << times[i] << ") = " << value
                    << " is negative beyond tolerance; tighten the integrator";
                throw std::runtime_error(msg.str());
            }
            p(static_cast<Eigen::Index>(i), n) = value;
        }
    }
    return p;
}

WaitingTime waiting_time(const SolveContext& ctx, double t_max, double tol) {
    ctx.sys.validate();
    if (!(t_max > 0.0)) throw std::invalid_argument("waiting_time: t_max must be positive");

    const SleGenerator gen = build_sle_generator(ctx.sys, ctx.noise, ctx.grid, 0.0, 0);
    const Eigen::Index dim = gen.dim();

    // Augment with one quadrature row accumulating the complete-average P,
    // which at s = 0 is the no-emission probability p0.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(gen.matrix.nonZeros()) + gen.n_blocks);
    for (int k = 0; k < gen.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(gen.matrix, k); it; ++it)
            trip.emplace_back(it.row(), it.col(), it.value());
    for (int b = 0; b < gen.n_blocks; ++b)
        trip.emplace_back(dim, static_cast<Eigen::Index>(b) * gen.block_dim() + kP, 1.0);
    Eigen::SparseMatrix<double> aug(dim + 1, dim + 1);
    aug.setFromTriplets(trip.begin(), trip.end());

    Eigen::VectorXd init(dim + 1);
    init.head(dim) = sle_initial(noise_initial_pmf(ctx.noise, ctx.grid), 0);
    init[dim] = 0.0;

    // Log-spaced samples across three decades of [0, t_max].
    std::vector<double> times = {0.0};
    constexpr int kSamples = 41;
    for (int i = 0; i < kSamples; ++i)
        times.push_back(t_max * std::pow(1024.0, -1.0 + static_cast<double>(i) / (kSamples - 1)));

    const auto states = propagate_sparse(aug, init, times, resolve_sle_options(gen, ctx.prop));
    auto p0_of = [&](const Eigen::VectorXd& y) {
        double p0 = 0.0;
        for (int b = 0; b < gen.n_blocks; ++b)
            p0 += y[static_cast<Eigen::Index>(b) * gen.block_dim() + kP];
        return p0;
    };
    const double p0_start = p0_of(states.front());

    // Fit the slowest decay rate on samples between 1e-3 and 1e-7 of p0(0),
    // a band deep into the decay yet well above the integrator noise floor.
    const double band_hi = 1e-3 * p0_start;
    const double band_lo = std::max(1e-7 * p0_start, 1e3 * ctx.prop.atol);
    std::vector<std::size_t> band;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double p0 = p0_of(states[i]);
        if (p0 >= band_lo && p0 <= band_hi) band.push_back(i);
    }
    if (band.size() < 2) {
        std::ostringstream msg;
        msg << "waiting_time: p0 has not decayed below " << band_hi << " by t_max = " << t_max
            << "; increase t_max (or no emission occurs and the waiting time diverges)";
        throw std::runtime_error(msg.str());
    }

    double sum_t = 0.0, sum_l = 0.0, sum_tt = 0.0, sum_tl = 0.0;
    for (std::size_t i : band) {
        const double t = times[i];
        const double l = std::log(p0_of(states[i]));
        sum_t += t; sum_l += l; sum_tt += t * t; sum_tl += t * l;
    }
    const double n = static_cast<double>(band.size());
    const double slope = (n * sum_tl - sum_t * sum_l) / (n * sum_tt - sum_t * sum_t);
    if (!(slope < 0.0))
        throw std::runtime_error("waiting_time: p0 is not decaying; the mean waiting time diverges");

    WaitingTime wt;
    wt.t_max = t_max;
    wt.fitted_rate = -slope;
    const std::size_t last = band.back();
    const double p0_last = p0_of(states[last]);
    const double extrapolated = p0_last * std::exp(slope * (t_max - times[last]));
    if (!(extrapolated <= tol * p0_start)) {
        std::ostringstream msg;
        msg << "waiting_time: p0 extrapolates to " << extrapolated << " at t_max = " << t_max
            << ", above tol*p0(0) = " << tol * p0_start << "; increase t_max or loosen tol";
        throw std::runtime_error(msg.str());
    }
    wt.quadrature = states[last][dim];
    wt.tail = p0_last / wt.fitted_rate;
    wt.tau = wt.quadrature + wt.tail;
    return wt;
}

std::size_t SweepTable::failure_count() const {
    std::size_t n = 0;
    for (const auto& p : points)
        if (!p.ok) ++n;
    return n;
}

SweepTable detuning_sweep(const SolveContext& ctx, std::span<const double> delta_list,
                          std::span<const double> times, unsigned workers) {
    for (std::size_t i = 1; i < delta_list.size(); ++i)
        if (!(delta_list[i] > delta_list[i - 1]))
            throw std::invalid_argument("detuning_sweep: detuning list must be strictly ascending");

    SweepTable table;
    table.detunings.assign(delta_list.begin(), delta_list.end());
    table.times.assign(times.begin(), times.end());
    table.points.resize(delta_list.size());
    std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OunParams>) {
                table.noise_label = "oun";
                table.a = model.a;
            } else if constexpr (std::is_same_v<T, RtnParams>) {
                table.noise_label = "rtn";
                table.a = model.a;
            } else {
                table.noise_label = "none";
            }
        },
        ctx.noise);

    parallel_for(delta_list.size(), workers, [&](std::size_t i) {
        SweepPoint& point = table.points[i];
        point.delta0 = delta_list[i];
        try {
            SolveContext local = ctx;
            local.sys.delta0 = delta_list[i];
            point.series = observable_series(local, times);
            point.ok = true;
        } catch (const std::exception& e) {
            point.ok = false;
            point.error = e.what();
        }
    });
    return table;
}

}  // namespace specdiff
