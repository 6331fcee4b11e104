// test_bloch.cpp — Generator entries, augmented layout, and noise-free closed forms.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "specdiff/bloch.hpp"

using namespace specdiff;

namespace {

std::vector<double> linspace(double stop, int num) {
    std::vector<double> t(num);
    for (int i = 0; i < num; ++i) t[i] = stop * i / (num - 1);
    return t;
}

}  // namespace

TEST_CASE("coefficient matrix entries at pinned parameter points") {
    SystemParams sys{0.0, 1.0, 1.0};
    Eigen::Matrix4d m = coefficient_matrix(sys, 1.0, 0.0);
    Eigen::Matrix4d want;
    want << -0.5, 0, 0, 0,
            0, -0.5, -1, 0,
            0, 1, -1, -1,
            0, 0, 0, 0;
    CHECK((m - want).cwiseAbs().maxCoeff() == 0.0);

    SystemParams detuned{2.0, 1.0, 1.0};
    m = coefficient_matrix(detuned, 0.0, 0.0);
    want << -0.5, -2, 0, 0,
            2, -0.5, -1, 0,
            0, 1, -0.5, -0.5,
            0, 0, -0.5, -0.5;
    CHECK((m - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise enters as an additive detuning shift") {
    SystemParams a{1.0, 1.0, 1.0};
    SystemParams b{0.0, 1.0, 1.0};
    CHECK((coefficient_matrix(a, 0.3, -1.0) - coefficient_matrix(b, 0.3, 0.0))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("s-derivative matrix: nonzeros, s-independence, vanishing curvature") {
    SystemParams sys{0.7, 1.3, 1.0};
    const Eigen::Matrix4d dm = ds_coefficient_matrix(sys);
    Eigen::Matrix4d want = Eigen::Matrix4d::Zero();
    want(2, 2) = -0.5;
    want(2, 3) = -0.5;
    want(3, 2) = 0.5;
    want(3, 3) = 0.5;
    CHECK((dm - want).cwiseAbs().maxCoeff() == 0.0);

    // Affinity: M(s) - M(0) = s * dM for any s, to rounding.
    for (double s : {0.0, 0.3, 1.0}) {
        const Eigen::Matrix4d lhs = coefficient_matrix(sys, s, 0.0) - coefficient_matrix(sys, 0.0, 0.0);
        CHECK((lhs - s * dm).cwiseAbs().maxCoeff() < 1e-14);
    }

    // Second s-difference is zero: the generator is affine in s.
    const Eigen::Matrix4d second = coefficient_matrix(sys, 0.8, 0.0) -
                                   2.0 * coefficient_matrix(sys, 0.5, 0.0) +
                                   coefficient_matrix(sys, 0.2, 0.0);
    CHECK(second.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("augmented generator block structure") {
    SystemParams sys{0.5, 1.0, 1.0};
    const double s = 0.4, xi = 0.2;

    CHECK((augmented_generator(sys, s, xi, 0) - coefficient_matrix(sys, s, xi))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const Eigen::MatrixXd g1 = augmented_generator(sys, s, xi, 1);
    CHECK(g1.rows() == 8);
    CHECK((g1.block<4, 4>(4, 0) - ds_coefficient_matrix(sys)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g1.block<4, 4>(4, 4) - coefficient_matrix(sys, s, xi)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g1.block<4, 4>(0, 4).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::MatrixXd g2 = augmented_generator(sys, s, xi, 2);
    CHECK((g2.block<4, 4>(8, 4) - 2.0 * ds_coefficient_matrix(sys)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g2.block<4, 4>(8, 0).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(augmented_generator(sys, s, xi, -1), std::invalid_argument);
}

TEST_CASE("initial state: excited preparation, zero derivative blocks") {
    const GfState y0 = initial_state(0);
    CHECK(y0.size() == 4);
    CHECK(y0[kU] == 0.0);
    CHECK(y0[kV] == 0.0);
    CHECK(y0[kW] == 1.0);
    CHECK(y0[kP] == 1.0);

    const GfState y2 = initial_state(2);
    CHECK(y2.size() == 12);
    for (Eigen::Index i = 0; i < 12; ++i)
        CHECK(y2[i] == ((i == 2 || i == 3) ? 1.0 : 0.0));

    for (int n : {0, 1, 3}) CHECK(initial_state(n)[kP] == 1.0);
}

TEST_CASE("pure decay: p0(t) = exp(-Gamma t)") {
    SystemParams sys{0.0, 0.0, 1.0};
    const auto t = linspace(2.0, 5);
    const auto states = noise_free_propagate(sys, {0.0, 0}, t);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(states[i][kP] == doctest::Approx(std::exp(-t[i])).epsilon(1e-6));
    CHECK(states[2][kP] == doctest::Approx(0.36787944117144233).epsilon(1e-6));  // t = 1
}

TEST_CASE("trace conservation at s = 1 across parameter sets") {
    const auto t = linspace(20.0, 41);
    for (const SystemParams sys : {SystemParams{0.0, 1.0, 1.0}, SystemParams{3.0, 0.5, 1.0},
                                   SystemParams{-7.0, 2.0, 1.0}}) {
        for (int n : {0, 2}) {
            const auto states = noise_free_propagate(sys, {1.0, n}, t);
            for (const auto& y : states) CHECK(std::abs(y[kP] - 1.0) <= 1e-8);
        }
    }
}

TEST_CASE("resonant steady state: d<N>/dt approaches Gamma/3") {
    SystemParams sys{0.0, 1.0, 1.0};
    const std::vector<double> t = {0.0, 45.0, 50.0};
    const auto states = noise_free_propagate(sys, {1.0, 1}, t);
    const double intensity = 0.5 * (states[2][kW] + states[2][kP]);
    CHECK(intensity == doctest::Approx(1.0 / 3.0).epsilon(3e-4));
    const double rate = (states[2][p_index(1)] - states[1][p_index(1)]) / 5.0;
    CHECK(rate == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("detuning-sign symmetry: P and W are even, U is odd") {
    const auto t = linspace(10.0, 11);
    for (double total : {0.8, 3.7}) {
        SystemParams plus{total, 1.0, 1.0};
        SystemParams minus{-total, 1.0, 1.0};
        for (double s : {0.4, 1.0}) {
            const auto yp = noise_free_propagate(plus, {s, 1}, t);
            const auto ym = noise_free_propagate(minus, {s, 1}, t);
            for (std::size_t i = 0; i < t.size(); ++i) {
                CHECK(std::abs(yp[i][kP] - ym[i][kP]) <= 1e-10);
                CHECK(std::abs(yp[i][kW] - ym[i][kW]) <= 1e-10);
                CHECK(std::abs(yp[i][kU] + ym[i][kU]) <= 1e-10);
                CHECK(std::abs(yp[i][p_index(1)] - ym[i][p_index(1)]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("augmented consistency: dP/ds matches a finite difference of plain runs") {
    SystemParams sys{0.5, 1.0, 1.0};
    const std::vector<double> t = {0.0, 5.0};
    const double h = 1e-4;
    const auto augmented = noise_free_propagate(sys, {1.0, 1}, t);
    const auto up = noise_free_propagate(sys, {1.0 + h, 0}, t);
    const auto down = noise_free_propagate(sys, {1.0 - h, 0}, t);
    const double fd = (up[1][kP] - down[1][kP]) / (2.0 * h);
    CHECK(augmented[1][p_index(1)] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("P stays within [0, 1] for s in [0, 1]") {
    const auto t = linspace(15.0, 31);
    for (double s : {0.0, 0.25, 0.75, 1.0}) {
        for (const SystemParams sys : {SystemParams{0.0, 1.0, 1.0}, SystemParams{2.0, 3.0, 1.0}}) {
            const auto states = noise_free_propagate(sys, {s, 0}, t);
            for (const auto& y : states) {
                CHECK(y[kP] >= -1e-9);
                CHECK(y[kP] <= 1.0 + 1e-9);
            }
        }
    }
}
