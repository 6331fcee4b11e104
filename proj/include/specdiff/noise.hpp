// noise.hpp — Environmental noise generators, initial laws, and path samplers.
//
// The OU Fokker–Planck operator is discretized in conservative flux form on a
// uniform grid with zero-flux boundaries, so column sums of the generator
// vanish identically and total probability is conserved exactly. Marginal
// vectors carry probability mass per grid point (density times spacing); the
// complete average over the noise coordinate is then a plain sum.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <utility>
#include <vector>

#include "specdiff/params.hpp"
#include "specdiff/rng.hpp"

namespace specdiff {

// Flux-form discretization of gamma * d/dxi (xi + sigma^2 d/dxi) with
// reflecting boundaries. Off-diagonals are non-negative as long as
// spacing < 2 sigma^2 / |xi|_max; violations indicate too coarse a grid.
Eigen::SparseMatrix<double> ou_generator(const XiGrid& grid, const OunParams& p);

// Initial mass vector: Gaussian(a*chi, sigma^2 (1-a^2)) sampled on the grid
// and renormalized to sum exactly 1. Rejects grids that truncate more than
// 1e-6 of the mass or that fail to cover +-5 initial standard deviations.
Eigen::VectorXd ou_initial_pmf(const XiGrid& grid, const OunParams& p);

// Discrete stationary mass vector of ou_generator (zero-flux detailed
// balance); agrees with the sampled stationary Gaussian to O(h^2).
Eigen::VectorXd ou_stationary_pmf(const XiGrid& grid, const OunParams& p);

// Two-state jump generator in the state order (+nu, -nu).
Eigen::Matrix2d rtn_generator(const RtnParams& p);

// Initial occupation ((1+a)/2, (1-a)/2); rejects |a| > 1.
std::pair<double, double> rtn_initial_pmf(double a);

// One realization of the noise coordinate read on a time grid.
struct NoisePath {
    std::vector<double> times;
    std::vector<double> values;
};

// Exact OU transition kernel: no time-step bias at the grid nodes.
NoisePath sample_ou_path(const OunParams& p, std::span<const double> t_grid, RngStream& rng);

// Exact telegraph sampling: flips at exponential waiting times, values read
// on the grid.
NoisePath sample_rtn_path(const RtnParams& p, std::span<const double> t_grid, RngStream& rng);

}  // namespace specdiff
