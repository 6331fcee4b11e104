// sle.hpp — Assembly and propagation of the joint (Bloch x noise) generator.
//
// The stacked state is noise-coordinate-major: block b holds the augmented
// generating-function vector conditioned on the noise taking its b-th value,
// weighted by that value's probability mass. Summing the blocks gives the
// complete average.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <span>
#include <vector>

#include "specdiff/bloch.hpp"
#include "specdiff/noise.hpp"
#include "specdiff/params.hpp"
#include "specdiff/propagate.hpp"

namespace specdiff {

struct SleGenerator {
    Eigen::SparseMatrix<double> matrix;
    int n_blocks = 1;        // noise coordinates K (grid points, 2, or 1)
    int n_derivs = 0;
    double noise_rate = 0.0; // gamma or lambda; drives the stiff-path switch

    int block_dim() const { return 4 * (n_derivs + 1); }
    Eigen::Index dim() const { return matrix.rows(); }
};

// blockdiag(augmented M(xi_i, s)) + Z (x) I. Rejects assembled dimensions
// above 1e6 (coarsen the grid).
SleGenerator build_sle_generator_oun(const SystemParams& sys, const OunParams& oun,
                                     const XiGrid& grid, double s, int n);

// [[Maug(+nu,s) - lambda I, lambda I], [lambda I, Maug(-nu,s) - lambda I]].
SleGenerator build_sle_generator_rtn(const SystemParams& sys, const RtnParams& rtn,
                                     double s, int n);

// Single-block generator with no noise coupling; the complete average then
// equals the noise-free propagation.
SleGenerator build_sle_generator_free(const SystemParams& sys, double s, int n);

// Dispatch over the noise model; `grid` is consulted only for OU noise.
SleGenerator build_sle_generator(const SystemParams& sys, const NoiseModel& noise,
                                 const XiGrid& grid, double s, int n);

// Initial mass vector of the noise model on the generator's block layout.
Eigen::VectorXd noise_initial_pmf(const NoiseModel& noise, const XiGrid& grid);

// Stacked initial state: block b = pmf[b] * initial_state(n). Rejects
// unnormalized pmfs (|sum - 1| > 1e-9).
Eigen::VectorXd sle_initial(const Eigen::VectorXd& pmf, int n);

struct MarginalTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;  // stacked, dimension K * 4(n+1)
    int n_blocks = 1;
    int n_derivs = 0;

    int block_dim() const { return 4 * (n_derivs + 1); }
};

// Propagates the marginal-average system over t_grid (ascending from 0).
MarginalTrajectory propagate(const SleGenerator& gen, const Eigen::VectorXd& init,
                             std::span<const double> t_grid, const PropagateOptions& opts = {});

// Sum of one stacked state's noise blocks, optionally weighted.
GfState complete_average_state(const Eigen::VectorXd& stacked, int n_blocks, int block_dim,
                               std::span<const double> weights = {});

// Per-time complete averages of a trajectory. Weights default to the plain
// sum (the mass-per-grid-point convention already absorbs the quadrature).
std::vector<GfState> complete_average(const MarginalTrajectory& traj,
                                      std::span<const double> weights = {});

// Resolves Method::Auto with the stiff-path rule for SLE generators: rates
// at or above 100 gamma_sp (or a large generator norm) take the exponential
// route.
PropagateOptions resolve_sle_options(const SleGenerator& gen, const PropagateOptions& opts);

// Row indices of the underived (U,V,W,P) sub-blocks, the components that
// admit a steady state at s = 1; derivative blocks grow secularly and are
// excluded from steady-state detection.
std::vector<Eigen::Index> base_block_indices(const SleGenerator& gen);

}  // namespace specdiff
