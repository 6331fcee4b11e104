// mc.hpp — Monte Carlo noise-path oracle for the marginal-average solver.
//
// Each trajectory draws an explicit noise path from its own counter-based
// stream and propagates the augmented generating-function system with the
// detuning frozen piecewise between path nodes; the ensemble mean estimates
// the same complete average the joint solver computes. Accumulation is a
// fixed-block pairwise reduction, so estimates are bit-identical for any
// worker count.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "specdiff/bloch.hpp"
#include "specdiff/params.hpp"

namespace specdiff {

struct McEstimate {
    std::vector<double> times;
    Eigen::MatrixXd mean;                   // n_times x dim
    Eigen::MatrixXd std_err;                // n_times x dim, standard error of the mean
    std::vector<Eigen::MatrixXd> cov_mean;  // per time: dim x dim covariance of the mean
    long n_traj = 0;
    bool large_se_warning = false;  // some standard error exceeded 10% of its mean
};

struct McOptions {
    unsigned workers = 1;
    // Path-node spacing cap as a fraction of the noise correlation time.
    double dt_fraction = 0.1;
};

McEstimate mc_estimate(const SystemParams& sys, const NoiseModel& noise, const CountingPoint& cp,
                       std::span<const double> t_grid, long n_traj, std::uint64_t seed,
                       const McOptions& opts = {});

// Per-component z-test of a complete-average series against an MC estimate.
struct CompareReport {
    double max_z = 0.0;
    Eigen::Index worst_time = 0;
    Eigen::Index worst_component = 0;
    double k_sigma = 0.0;
    bool pass = false;
};

CompareReport compare(const std::vector<double>& sle_times, const std::vector<GfState>& sle_avg,
                      const McEstimate& mc, double k_sigma);

// Scalar estimates with delta-method errors for derived observables.
struct ScalarEstimate {
    double value = 0.0;
    double std_err = 0.0;
};

// <N> at one time index: the d/ds P component of the estimate.
ScalarEstimate mc_mean_photons(const McEstimate& mc, Eigen::Index t_idx);

// Mandel Q at one time index via the delta method on (<N>, <N(N-1)>).
ScalarEstimate mc_mandel_q(const McEstimate& mc, Eigen::Index t_idx);

}  // namespace specdiff
