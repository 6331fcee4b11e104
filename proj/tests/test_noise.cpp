// test_noise.cpp — Fokker–Planck discretization, jump generator, initial laws,
// and exact-sampler statistics.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

#include "specdiff/noise.hpp"
#include "specdiff/rng.hpp"

using namespace specdiff;

namespace {

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return 0.5 * (p - q).cwiseAbs().sum();
}

double discrete_mean(const XiGrid& grid, const Eigen::VectorXd& pmf) {
    double m = 0.0;
    for (int i = 0; i < grid.n_points; ++i) m += grid.point(i) * pmf[i];
    return m;
}

double discrete_var(const XiGrid& grid, const Eigen::VectorXd& pmf) {
    const double m = discrete_mean(grid, pmf);
    double v = 0.0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double d = grid.point(i) - m;
        v += d * d * pmf[i];
    }
    return v;
}

std::vector<double> linspace(double stop, int num) {
    std::vector<double> t(num);
    for (int i = 0; i < num; ++i) t[i] = stop * i / (num - 1);
    return t;
}

}  // namespace

TEST_CASE("OU generator conserves probability exactly") {
    OunParams p{1.0, 1.0, 0.0, 0.0};
    XiGrid grid{-6.0, 6.0, 201};
    const Eigen::SparseMatrix<double> z = ou_generator(grid, p);
    const Eigen::VectorXd col_sums = Eigen::RowVectorXd::Ones(201) * z;
    CHECK(col_sums.cwiseAbs().maxCoeff() <= 1e-12);

    // Off-diagonal entries non-negative on a grid fine enough for the span.
    for (int k = 0; k < z.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(z, k); it; ++it)
            if (it.row() != it.col()) CHECK(it.value() >= 0.0);

    XiGrid tiny{-6.0, 6.0, 2};
    CHECK_THROWS_AS(ou_generator(tiny, p), std::invalid_argument);
}

TEST_CASE("sampled stationary Gaussian is a second-order residual") {
    OunParams p{1.0, 1.0, 0.0, 0.0};
    double previous = 0.0;
    std::vector<double> residuals;
    for (int n : {101, 201, 401}) {
        XiGrid grid{-6.0, 6.0, n};
        const Eigen::SparseMatrix<double> z = ou_generator(grid, p);
        // Density samples with a grid-independent normalization; the flux-form
        // residual on these is O(h^2).
        Eigen::VectorXd g(n);
        for (int i = 0; i < n; ++i) {
            const double x = grid.point(i);
            g[i] = std::exp(-0.5 * x * x);
        }
        residuals.push_back((z * g).cwiseAbs().maxCoeff());
        (void)previous;
    }
    // Halving h divides the residual by about four.
    CHECK(residuals[0] / residuals[1] == doctest::Approx(4.0).epsilon(0.3));
    CHECK(residuals[1] / residuals[2] == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("adjoint action on xi recovers the first-moment relaxation") {
    OunParams p{0.7, 1.3, 0.0, 0.0};
    XiGrid grid{-6.0, 6.0, 201};
    const Eigen::SparseMatrix<double> z = ou_generator(grid, p);
    Eigen::VectorXd xi(grid.n_points);
    for (int i = 0; i < grid.n_points; ++i) xi[i] = grid.point(i);
    const Eigen::VectorXd adjoint = z.transpose() * xi;
    for (int i = 1; i + 1 < grid.n_points; ++i)
        CHECK(adjoint[i] == doctest::Approx(-p.gamma_decay * xi[i]).epsilon(1e-9));

    // Same statement through a distribution: d<xi>/dt = -gamma <xi>.
    OunParams skewed{0.7, 1.3, 0.6, 1.0};
    XiGrid wide = XiGrid::spanning(skewed, 201);
    const Eigen::SparseMatrix<double> zs = ou_generator(wide, skewed);
    const Eigen::VectorXd pmf = ou_initial_pmf(wide, skewed);
    Eigen::VectorXd xs(wide.n_points);
    for (int i = 0; i < wide.n_points; ++i) xs[i] = wide.point(i);
    const double moment_rate = xs.dot(Eigen::VectorXd(zs * pmf));
    CHECK(moment_rate == doctest::Approx(-skewed.gamma_decay * discrete_mean(wide, pmf)).epsilon(1e-8));
}

TEST_CASE("initial OU law: moments, normalization, rejection") {
    OunParams eq{1.0, 1.0, 0.0, 0.0};
    XiGrid grid{-6.0, 6.0, 201};
    const Eigen::VectorXd p0 = ou_initial_pmf(grid, eq);
    CHECK(std::abs(p0.sum() - 1.0) <= 1e-12);
    CHECK(std::abs(discrete_mean(grid, p0)) <= 1e-12);
    CHECK(discrete_var(grid, p0) == doctest::Approx(1.0).epsilon(1e-4));

    OunParams skewed{1.0, 1.0, 0.6, 1.0};
    XiGrid wide = XiGrid::spanning(skewed, 201);
    const Eigen::VectorXd p1 = ou_initial_pmf(wide, skewed);
    CHECK(discrete_mean(wide, p1) == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(discrete_var(wide, p1) == doctest::Approx(0.64).epsilon(1e-4));

    XiGrid narrow{-1.0, 1.0, 51};
    CHECK_THROWS_AS(ou_initial_pmf(narrow, eq), std::invalid_argument);
}

TEST_CASE("mirror property of the initial laws") {
    OunParams plus{1.0, 1.0, 0.4, 1.3};
    OunParams minus = plus;
    minus.a = -plus.a;
    XiGrid grid_plus = XiGrid::spanning(plus, 101);
    XiGrid grid_minus = XiGrid::spanning(minus, 101);
    CHECK(grid_minus.xi_min == doctest::Approx(-grid_plus.xi_max).epsilon(1e-15));
    const Eigen::VectorXd pp = ou_initial_pmf(grid_plus, plus);
    const Eigen::VectorXd pm = ou_initial_pmf(grid_minus, minus);
    for (int i = 0; i < 101; ++i)
        CHECK(pp[i] == doctest::Approx(pm[100 - i]).epsilon(1e-12));

    const auto [fp, fm] = rtn_initial_pmf(-0.3);
    const auto [gp, gm] = rtn_initial_pmf(0.3);
    CHECK(fp == gm);
    CHECK(fm == gp);
}

TEST_CASE("telegraph generator and initial law") {
    RtnParams p{1.0, 1.0, 0.0};
    const Eigen::Matrix2d z = rtn_generator(p);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(0, 1) == 1.0);
    CHECK(z(1, 0) == 1.0);
    CHECK(z(1, 1) == -1.0);
    CHECK(std::abs(z.col(0).sum()) == 0.0);
    CHECK(std::abs(z.col(1).sum()) == 0.0);

    RtnParams q{0.7, 1.0, 0.0};
    Eigen::EigenSolver<Eigen::Matrix2d> eig(rtn_generator(q));
    std::vector<double> ev = {eig.eigenvalues()[0].real(), eig.eigenvalues()[1].real()};
    std::sort(ev.begin(), ev.end());
    CHECK(ev[0] == doctest::Approx(-1.4).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(0.0).epsilon(1e-12));

    CHECK(rtn_initial_pmf(0.0) == std::pair{0.5, 0.5});
    CHECK(rtn_initial_pmf(1.0) == std::pair{1.0, 0.0});
    CHECK(rtn_initial_pmf(-0.5) == std::pair{0.25, 0.75});
    CHECK_THROWS_AS(rtn_initial_pmf(1.5), std::invalid_argument);
}

TEST_CASE("equilibration under the noise generator alone") {
    OunParams oun{1.0, 1.0, 0.6, 1.0};
    XiGrid grid = XiGrid::spanning(oun, 201);
    const Eigen::MatrixXd z(ou_generator(grid, oun));
    const Eigen::VectorXd relaxed = (z * (20.0 / oun.gamma_decay)).exp() * ou_initial_pmf(grid, oun);
    CHECK(tv_distance(relaxed, ou_stationary_pmf(grid, oun)) <= 1e-6);
    // The discrete stationary law tracks the sampled Gaussian at O(h^2).
    OunParams eq = oun;
    eq.a = 0.0;
    eq.chi = 0.0;
    CHECK(tv_distance(ou_stationary_pmf(grid, eq), ou_initial_pmf(grid, eq)) <= 2e-3);

    RtnParams rtn{1.0, 1.0, 1.0};
    const Eigen::Matrix2d zr = rtn_generator(rtn);
    Eigen::Vector2d pr{1.0, 0.0};
    const Eigen::Vector2d relaxed_r = (zr * (20.0 / rtn.lambda_switch)).exp() * pr;
    CHECK(std::abs(relaxed_r[0] - 0.5) <= 1e-6);
}

TEST_CASE("OU sampler: first-moment relaxation and stationary autocovariance") {
    OunParams p{1.0, 1.0, 0.6, 1.0};
    const auto t = linspace(3.0, 31);
    const int n_paths = 100000;

    std::vector<double> sum_at(t.size(), 0.0);
    for (int traj = 0; traj < n_paths; ++traj) {
        RngStream rng(42, static_cast<std::uint64_t>(traj));
        const NoisePath path = sample_ou_path(p, t, rng);
        for (std::size_t i = 0; i < t.size(); ++i) sum_at[i] += path.values[i];
    }
    const double se = p.sigma / std::sqrt(static_cast<double>(n_paths));
    for (std::size_t i = 0; i < t.size(); i += 10) {
        const double want = p.initial_mean() * std::exp(-p.gamma_decay * t[i]);
        CHECK(std::abs(sum_at[i] / n_paths - want) <= 4.0 * se);
    }

    // a = 0: lag-k autocovariance of the stationary process.
    OunParams eq{1.0, 1.0, 0.0, 0.0};
    const auto tg = linspace(2.0, 21);  // dt = 0.1
    const int m_paths = 100000;
    double sum0 = 0.0, sumk = 0.0, cross = 0.0;
    const std::size_t i0 = 5, lag = 10;
    for (int traj = 0; traj < m_paths; ++traj) {
        RngStream rng(43, static_cast<std::uint64_t>(traj));
        const NoisePath path = sample_ou_path(eq, tg, rng);
        sum0 += path.values[i0];
        sumk += path.values[i0 + lag];
        cross += path.values[i0] * path.values[i0 + lag];
    }
    const double cov = cross / m_paths - (sum0 / m_paths) * (sumk / m_paths);
    const double want_cov = std::exp(-eq.gamma_decay * 0.1 * lag);
    CHECK(std::abs(cov - want_cov) <= 0.02);

    // Large gamma*dt: successive values decorrelate completely.
    const std::vector<double> coarse = {0.0, 100.0, 200.0};
    double c00 = 0.0, c01 = 0.0, m0 = 0.0, m1 = 0.0;
    for (int traj = 0; traj < m_paths; ++traj) {
        RngStream rng(44, static_cast<std::uint64_t>(traj));
        const NoisePath path = sample_ou_path(eq, coarse, rng);
        m0 += path.values[1];
        m1 += path.values[2];
        c00 += path.values[1] * path.values[1];
        c01 += path.values[1] * path.values[2];
    }
    const double corr = (c01 / m_paths - (m0 / m_paths) * (m1 / m_paths)) /
                        (c00 / m_paths - (m0 / m_paths) * (m0 / m_paths));
    CHECK(std::abs(corr) <= 4.0 / std::sqrt(static_cast<double>(m_paths)));
}

TEST_CASE("telegraph sampler: occupation relaxation and limits") {
    RtnParams p{1.0, 2.0, 0.8};
    const auto t = linspace(2.0, 21);
    const int n_paths = 100000;
    std::vector<int> plus_count(t.size(), 0);
    for (int traj = 0; traj < n_paths; ++traj) {
        RngStream rng(7, static_cast<std::uint64_t>(traj));
        const NoisePath path = sample_rtn_path(p, t, rng);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (path.values[i] > 0) ++plus_count[i];
    }
    for (std::size_t i = 0; i < t.size(); i += 5) {
        const double want = 0.5 + 0.5 * p.a * std::exp(-2.0 * p.lambda_switch * t[i]);
        const double se = std::sqrt(want * (1.0 - want) / n_paths + 1e-12);
        CHECK(std::abs(static_cast<double>(plus_count[i]) / n_paths - want) <= 4.0 * se + 1e-9);
    }

    // a = 1 with negligible switching: the path never leaves +nu.
    RtnParams frozen{1e-12, 3.0, 1.0};
    RngStream rng(9, 0);
    const NoisePath path = sample_rtn_path(frozen, t, rng);
    for (double v : path.values) CHECK(v == 3.0);

    // a = 0: symmetric occupation.
    RtnParams sym{1.0, 1.0, 0.0};
    double mean = 0.0;
    for (int traj = 0; traj < n_paths; ++traj) {
        RngStream r2(11, static_cast<std::uint64_t>(traj));
        mean += sample_rtn_path(sym, t, r2).values[10];
    }
    CHECK(std::abs(mean / n_paths) <= 4.0 / std::sqrt(static_cast<double>(n_paths)));
}

TEST_CASE("paths reproduce bit-exactly from their stream key") {
    OunParams p{1.0, 1.0, 0.3, 0.5};
    const auto t = linspace(1.0, 11);
    RngStream a(123, 5), b(123, 5), c(123, 6);
    const NoisePath pa = sample_ou_path(p, t, a);
    const NoisePath pb = sample_ou_path(p, t, b);
    const NoisePath pc = sample_ou_path(p, t, c);
    CHECK(pa.values == pb.values);
    CHECK(pa.values != pc.values);
}
