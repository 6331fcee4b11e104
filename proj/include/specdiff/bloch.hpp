// bloch.hpp — Generating-function Bloch generator and its derivative-augmented form.
//
// The state of a run carrying n s-derivatives is a real vector of length
// 4 (n + 1), laid out as blocks of (U, V, W, P) by ascending derivative order:
//
//   [ U, V, W, P, dU/ds, ..., d^nP/ds^n ]
//
// P is the trace component of the generating function: at s = 0 its value is
// the no-emission probability, and at s = 1 its k-th s-derivative is the k-th
// factorial moment of the photon count.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "specdiff/params.hpp"
#include "specdiff/propagate.hpp"

namespace specdiff {

// Generating-function Bloch vector, possibly derivative-augmented.
using GfState = Eigen::VectorXd;

// Component offsets within one derivative block.
inline constexpr int kU = 0;
inline constexpr int kV = 1;
inline constexpr int kW = 2;
inline constexpr int kP = 3;

// Index of d^k P / ds^k in the augmented layout.
inline Eigen::Index p_index(int k) { return 4 * k + kP; }

// 4x4 generator of the generalized optical Bloch equations at counting
// variable s, with the detuning shifted to delta0 + xi by the noise value.
Eigen::Matrix4d coefficient_matrix(const SystemParams& sys, double s, double xi = 0.0);

// d/ds of the generator; independent of s (the generator is affine in s).
Eigen::Matrix4d ds_coefficient_matrix(const SystemParams& sys);

// Block lower-bidiagonal generator for (Y, dY/ds, ..., d^nY/ds^n): diagonal
// blocks M(xi, s), sub-diagonal block in block-row k equal to k * dM/ds.
Eigen::MatrixXd augmented_generator(const SystemParams& sys, double s, double xi, int n);

// Excited-state preparation: (U, V, W, P) = (0, 0, 1, 1), derivative blocks zero.
GfState initial_state(int n);

// Propagates the noise-free augmented system over t_grid (ascending, starting
// at 0). Exact s-independent trace conservation holds at s = 1.
std::vector<GfState> noise_free_propagate(const SystemParams& sys, const CountingPoint& cp,
                                          std::span<const double> t_grid,
                                          const PropagateOptions& opts = {});

}  // namespace specdiff
