// propagate.cpp — RK, dense-exponential, and Krylov propagation engines.

#include "specdiff/propagate.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

namespace specdiff {

namespace ode = boost::numeric::odeint;

namespace {

void check_times(std::span<const double> times) {
    if (times.empty()) throw std::invalid_argument("time grid must not be empty");
    if (times[0] != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("time grid must be strictly ascending");
    }
}

// Exact bit key for caching exponentials of A*dt.
std::uint64_t bit_key(double x) {
    std::uint64_t k;
    std::memcpy(&k, &x, sizeof(k));
    return k;
}

template <typename Matrix>
std::vector<Eigen::VectorXd> run_adaptive_rk(const Matrix& a, const Eigen::VectorXd& y0,
                                             std::span<const double> times,
                                             const PropagateOptions& opts) {
    using Vec = Eigen::VectorXd;
    std::vector<Vec> out;
    out.reserve(times.size());
    auto rhs = [&a](const Vec& y, Vec& dydt, double) { dydt.noalias() = a * y; };
    auto stepper = ode::make_controlled(
        opts.atol, opts.rtol,
        ode::runge_kutta_dopri5<Vec, double, Vec, double, ode::vector_space_algebra>());
    Vec y = y0;
    double last_t = 0.0;
    try {
        ode::integrate_times(stepper, rhs, y, times.begin(), times.end(),
                             std::min(1e-3, times.back() > 0 ? times.back() : 1e-3),
                             [&](const Vec& state, double t) {
                                 out.push_back(state);
                                 last_t = t;
                             });
    } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "adaptive RK failed after t = " << last_t << ": " << e.what()
            << " (consider method=expm)";
        throw std::runtime_error(msg.str());
    }
    return out;
}

std::vector<Eigen::VectorXd> run_dense_expm(const Eigen::MatrixXd& a, const Eigen::VectorXd& y0,
                                            std::span<const double> times) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    std::map<std::uint64_t, Eigen::MatrixXd> cache;
    Eigen::VectorXd y = y0;
    out.push_back(y);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        auto it = cache.find(bit_key(dt));
        if (it == cache.end()) {
            Eigen::MatrixXd e = (a * dt).exp();
            it = cache.emplace(bit_key(dt), std::move(e)).first;
        }
        y = it->second * y;
        out.push_back(y);
    }
    return out;
}

struct KrylovWorkspace {
    Eigen::MatrixXd basis;       // n x (m+1)
    Eigen::MatrixXd hessenberg;  // (m+2) x (m+2), augmented
};

// One Arnoldi-projected exponential substep of length tau (possibly shortened
// by the error controller). Advances w in place and returns the step actually
// taken. Follows the classic corrected-scheme estimate of Sidje's Expokit.
double krylov_substep(const Eigen::SparseMatrix<double>& a, Eigen::VectorXd& w, double tau,
                      double tol_rate, int m, KrylovWorkspace& ws, std::size_t& matvecs) {
    const Eigen::Index n = a.rows();
    const int mmax = static_cast<int>(std::min<Eigen::Index>(m, n));
    const double beta = w.norm();
    if (beta == 0.0) return tau;  // zero state is a fixed point

    ws.basis.resize(n, mmax + 1);
    ws.hessenberg.setZero(mmax + 2, mmax + 2);
    ws.basis.col(0) = w / beta;

    int k_used = mmax;
    bool breakdown = false;
    for (int j = 0; j < mmax; ++j) {
        Eigen::VectorXd v = a * ws.basis.col(j);
        ++matvecs;
        for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
            const double hij = ws.basis.col(i).dot(v);
            ws.hessenberg(i, j) = hij;
            v.noalias() -= hij * ws.basis.col(i);
        }
        const double hnext = v.norm();
        if (hnext < 1e-14 * beta) {  // happy breakdown: subspace is invariant
            k_used = j + 1;
            breakdown = true;
            break;
        }
        ws.hessenberg(j + 1, j) = hnext;
        ws.basis.col(j + 1) = v / hnext;
    }

    if (breakdown) {
        const Eigen::MatrixXd h = ws.hessenberg.topLeftCorner(k_used, k_used);
        Eigen::MatrixXd f = (tau * h).exp();
        w = beta * (ws.basis.leftCols(k_used) * f.col(0));
        return tau;  // projection exact: take the full requested step
    }

    // Augmented Hessenberg (Expokit's corrected scheme): its exponential
    // yields the phi-corrected update coefficients plus two error terms.
    const double h_last = ws.hessenberg(k_used, k_used - 1);
    Eigen::MatrixXd hbar = Eigen::MatrixXd::Zero(k_used + 2, k_used + 2);
    hbar.topLeftCorner(k_used, k_used) = ws.hessenberg.topLeftCorner(k_used, k_used);
    hbar(k_used, k_used - 1) = h_last;
    hbar(k_used + 1, k_used) = 1.0;

    const Eigen::VectorXd av = a * ws.basis.col(k_used);
    ++matvecs;
    const double avnorm = av.norm();

    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::MatrixXd f = (tau * hbar).exp();
        const double err1 = beta * std::abs(f(k_used, 0));
        const double err2 = beta * std::abs(f(k_used + 1, 0)) * avnorm;
        double err_loc;
        if (err1 > 10.0 * err2)
            err_loc = err2;
        else if (err1 > err2)
            err_loc = err1 * err2 / (err1 - err2);
        else
            err_loc = err1;

        const double budget = tol_rate * tau;
        if (err_loc <= budget || tau <= 1e-15) {
            // F's first column already carries the h_last weight of the
            // (m+1)-th basis vector through hbar.
            w = ws.basis.leftCols(k_used + 1) * (beta * f.col(0).head(k_used + 1));
            return tau;
        }
        const double shrink = 0.9 * std::pow(budget / err_loc, 1.0 / k_used);
        tau *= std::clamp(shrink, 0.1, 0.9);
    }
    throw std::runtime_error("Krylov exponential step failed to satisfy tolerance");
}

}  // namespace

double infinity_norm(const Eigen::SparseMatrix<double>& a) {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
    for (int k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
            row_sums[it.row()] += std::abs(it.value());
    return a.rows() == 0 ? 0.0 : row_sums.maxCoeff();
}

Method choose_method(double norm_bound, Eigen::Index dim, double t_end,
                     const PropagateOptions& opts) {
    if (opts.method != Method::Auto) return opts.method;
    const bool stiff = norm_bound > opts.stiff_norm_threshold;
    const bool long_horizon = norm_bound * t_end > 1e4;
    if (dim <= 96) return (stiff || long_horizon) ? Method::DenseExpm : Method::AdaptiveRk;
    if (stiff) {
        if (dim <= opts.dense_expm_max_dim) return Method::DenseExpm;
        std::ostringstream msg;
        msg << "generator is stiff (norm " << norm_bound << " > " << opts.stiff_norm_threshold
            << ") and too large for dense exponential stepping (dim " << dim << " > "
            << opts.dense_expm_max_dim << "); coarsen the xi grid or force method=krylov";
        throw std::runtime_error(msg.str());
    }
    return Method::KrylovExpm;
}

std::vector<Eigen::VectorXd> propagate_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& y0,
                                             std::span<const double> times,
                                             const PropagateOptions& opts) {
    check_times(times);
    if (a.rows() != a.cols() || a.rows() != y0.size())
        throw std::invalid_argument("propagate_dense: dimension mismatch");
    const double norm_bound = a.cwiseAbs().rowwise().sum().maxCoeff();
    Method method = choose_method(norm_bound, a.rows(), times.back(), opts);
    if (method == Method::KrylovExpm) {
        Eigen::SparseMatrix<double> sp = a.sparseView();
        return propagate_sparse(sp, y0, times, opts);
    }
    if (method == Method::DenseExpm) return run_dense_expm(a, y0, times);
    return run_adaptive_rk(a, y0, times, opts);
}

std::vector<Eigen::VectorXd> propagate_sparse(const Eigen::SparseMatrix<double>& a,
                                              const Eigen::VectorXd& y0,
                                              std::span<const double> times,
                                              const PropagateOptions& opts) {
    check_times(times);
    if (a.rows() != a.cols() || a.rows() != y0.size())
        throw std::invalid_argument("propagate_sparse: dimension mismatch");
    const double norm_bound = infinity_norm(a);
    Method method = choose_method(norm_bound, a.rows(), times.back(), opts);
    if (method == Method::DenseExpm) return run_dense_expm(Eigen::MatrixXd(a), y0, times);
    if (method == Method::AdaptiveRk) return run_adaptive_rk(a, y0, times, opts);

    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    Eigen::VectorXd w = y0;
    out.push_back(w);
    KrylovWorkspace ws;
    std::size_t matvecs = 0;
    const double tol_rate = opts.krylov_tol * std::max(1.0, y0.norm()) /
                            std::max(times.back(), 1e-300);
    for (std::size_t i = 1; i < times.size(); ++i) {
        double remaining = times[i] - times[i - 1];
        double tau = std::min(remaining,
                              std::max(1.0 / std::max(norm_bound, 1e-300), remaining / 1024.0));
        while (remaining > 0.0) {
            if (matvecs > opts.max_krylov_steps) {
                std::ostringstream msg;
                msg << "Krylov propagation exceeded " << opts.max_krylov_steps
                    << " matrix-vector products near t = " << times[i] - remaining
                    << " (stiffness ratio ~" << norm_bound
                    << "); coarsen the xi grid or force the dense exponential";
                throw std::runtime_error(msg.str());
            }
            const double step = std::min(tau, remaining);
            const double taken = krylov_substep(a, w, step, tol_rate, opts.krylov_dim, ws, matvecs);
            remaining -= taken;
            tau = (taken == step) ? 1.4 * taken : taken;
        }
        out.push_back(w);
    }
    return out;
}

Eigen::VectorXd krylov_expm_multiply(const Eigen::SparseMatrix<double>& a,
                                     const Eigen::VectorXd& v, double t,
                                     const PropagateOptions& opts) {
    const double times[2] = {0.0, t};
    PropagateOptions forced = opts;
    forced.method = Method::KrylovExpm;
    if (t == 0.0) return v;
    return propagate_sparse(a, v, std::span<const double>(times, 2), forced).back();
}

SteadyResult propagate_to_steady(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& y0,
                                 double t_chunk, double resid_tol, double t_cap,
                                 std::span<const Eigen::Index> watch,
                                 const PropagateOptions& opts) {
    if (t_chunk <= 0.0) throw std::invalid_argument("propagate_to_steady: t_chunk must be positive");
    SteadyResult result;
    result.state = y0;
    auto residual = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd r = a * y;
        if (watch.empty()) return r.cwiseAbs().maxCoeff();
        double mx = 0.0;
        for (Eigen::Index idx : watch) mx = std::max(mx, std::abs(r[idx]));
        return mx;
    };
    result.residual = residual(result.state);
    if (result.residual < resid_tol) {
        result.converged = true;
        return result;
    }
    const double chunk_times[2] = {0.0, t_chunk};
    while (result.time < t_cap) {
        result.state =
            propagate_sparse(a, result.state, std::span<const double>(chunk_times, 2), opts).back();
        result.time += t_chunk;
        result.residual = residual(result.state);
        if (result.residual < resid_tol) {
            result.converged = true;
            return result;
        }
    }
    return result;
}

}  // namespace specdiff
