// observables.hpp — Photon statistics extracted from complete-average series.
//
// A single propagation at s = 1 with two s-derivatives yields the mean count,
// the second factorial moment, the emission intensity, and Mandel's Q. The
// photon-number distribution comes from a separate run at s = 0 carrying
// n_max derivatives.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specdiff/params.hpp"
#include "specdiff/propagate.hpp"
#include "specdiff/sle.hpp"

namespace specdiff {

// Everything a solver run needs besides the time grid. `grid` is consulted
// only when the noise model is OU.
struct SolveContext {
    SystemParams sys;
    NoiseModel noise;
    XiGrid grid;
    PropagateOptions prop;

    static SolveContext make(const SystemParams& sys, const NoiseModel& noise,
                             int grid_points = 201, double grid_sigmas = 6.0);
};

// d/ds P at s = 1 per time; requires at least one derivative block.
Eigen::VectorXd mean_photons(const std::vector<GfState>& avg);

// Emission intensity (gamma/2)(W + P), the exact time derivative of the mean
// count at s = 1; no numerical differentiation is involved.
Eigen::VectorXd line_shape(const std::vector<GfState>& avg, double gamma_sp);

// d^2/ds^2 P at s = 1 per time; requires at least two derivative blocks.
Eigen::VectorXd second_factorial_moment(const std::vector<GfState>& avg);

// Q = (<N(N-1)> - <N>^2) / <N>. Times with <N> <= 1e-12 are flagged undefined
// and carry NaN in the value column.
struct MandelQ {
    Eigen::VectorXd values;
    std::vector<std::uint8_t> defined;
};
MandelQ mandel_q(const Eigen::VectorXd& mean_n, const Eigen::VectorXd& second_fact);

struct ObservableSeries {
    std::vector<double> times;
    Eigen::VectorXd mean_n;
    Eigen::VectorXd second_fact;
    Eigen::VectorXd intensity;
    Eigen::VectorXd mandel_q;             // NaN where undefined
    std::vector<std::uint8_t> q_defined;
    Eigen::MatrixXd p_n;                  // rows = times, cols = n; empty unless requested
};

// One s = 1, n = 2 solve producing <N>, <N(N-1)>, I and Q on `times`.
ObservableSeries observable_series(const SolveContext& ctx, std::span<const double> times);

// p_n(t) for n = 0..n_max from an s = 0 run; n_max is capped at 10. Negative
// probabilities beyond -1e-9 are reported as a numerical-accuracy failure.
Eigen::MatrixXd photon_pmf(const SolveContext& ctx, int n_max, std::span<const double> times);

// Mean waiting time for the first emission: the integral of p0 is carried as
// an extra quadrature row of the generator (exact within integrator
// tolerance), plus an exponential tail fitted on the last decade of p0.
struct WaitingTime {
    double tau = 0.0;
    double quadrature = 0.0;  // integral of p0 up to the tail-fit end
    double tail = 0.0;        // analytic exponential remainder
    double fitted_rate = 0.0;
    double t_max = 0.0;
};
WaitingTime waiting_time(const SolveContext& ctx, double t_max, double tol = 1e-10);

// Detuning sweep of the s = 1 observables; per-point failures are recorded
// without aborting the sweep.
struct SweepPoint {
    double delta0 = 0.0;
    bool ok = false;
    std::string error;
    ObservableSeries series;
};

struct SweepTable {
    std::vector<double> detunings;
    std::vector<double> times;
    std::vector<SweepPoint> points;
    std::string noise_label;
    double a = 0.0;
    std::string regime_label;

    std::size_t failure_count() const;
};

SweepTable detuning_sweep(const SolveContext& ctx, std::span<const double> delta_list,
                          std::span<const double> times, unsigned workers = 1);

}  // namespace specdiff
