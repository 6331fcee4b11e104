// propagate.hpp — Time propagation of constant-generator linear systems dy/dt = A y.
//
// Every generator in this library is time-independent, so exact
// matrix-exponential stepping is always admissible. Three engines are
// provided:
//   * adaptive embedded Runge–Kutta (Dormand–Prince via Boost.Odeint),
//     the default for small non-stiff generators;
//   * dense scaling-and-squaring exponential stepping, exact, the default
//     once the generator is stiff or the horizon is long;
//   * a Krylov (Arnoldi) exponential propagator for large sparse generators.
// Method::Auto selects between them from the generator's infinity norm,
// dimension, and time horizon.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <span>
#include <vector>

namespace specdiff {

enum class Method { Auto, AdaptiveRk, DenseExpm, KrylovExpm };

struct PropagateOptions {
    Method method = Method::Auto;
    double rtol = 1e-9;           // adaptive RK relative tolerance
    double atol = 1e-11;          // adaptive RK absolute tolerance
    int krylov_dim = 30;          // Arnoldi basis size
    double krylov_tol = 1e-12;    // per-run Krylov error budget
    std::size_t max_krylov_steps = 2'000'000;  // substep cap before diagnosing stiffness
    // Generators whose infinity norm exceeds this (in units of gamma_sp) are
    // treated as stiff and routed to exponential stepping.
    double stiff_norm_threshold = 1e3;
    // Dense-exponential cutoff: sparse generators at most this large are
    // densified when the exponential path is required.
    Eigen::Index dense_expm_max_dim = 1600;
};

double infinity_norm(const Eigen::SparseMatrix<double>& a);

// Resolved engine for a generator with the given norm bound over [0, t_end].
Method choose_method(double norm_bound, Eigen::Index dim, double t_end,
                     const PropagateOptions& opts);

// Propagates y' = A y from y0, reporting the state at every entry of `times`
// (ascending, times[0] == 0).
std::vector<Eigen::VectorXd> propagate_dense(const Eigen::MatrixXd& a,
                                             const Eigen::VectorXd& y0,
                                             std::span<const double> times,
                                             const PropagateOptions& opts = {});
std::vector<Eigen::VectorXd> propagate_sparse(const Eigen::SparseMatrix<double>& a,
                                              const Eigen::VectorXd& y0,
                                              std::span<const double> times,
                                              const PropagateOptions& opts = {});

// exp(A t) v with adaptive Arnoldi substepping.
Eigen::VectorXd krylov_expm_multiply(const Eigen::SparseMatrix<double>& a,
                                     const Eigen::VectorXd& v, double t,
                                     const PropagateOptions& opts = {});

// Advances y' = A y in chunks of `t_chunk` until the residual ||A y||_inf,
// restricted to `watch` (all rows when empty), drops below resid_tol, or
// until t_cap. Returns the stop time and state.
struct SteadyResult {
    double time = 0.0;
    Eigen::VectorXd state;
    double residual = 0.0;
    bool converged = false;
};
SteadyResult propagate_to_steady(const Eigen::SparseMatrix<double>& a,
                                 const Eigen::VectorXd& y0, double t_chunk,
                                 double resid_tol, double t_cap,
                                 std::span<const Eigen::Index> watch = {},
                                 const PropagateOptions& opts = {});

}  // namespace specdiff
