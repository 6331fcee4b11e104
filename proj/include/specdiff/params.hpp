// params.hpp — Parameter types for the driven two-level emitter and its environmental noise.
//
// All rates and frequencies are expressed in units of the spontaneous emission
// rate. gamma_sp is carried explicitly so matrix elements read like their
// algebraic form, but every shipped configuration fixes it to 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

namespace specdiff {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Emitter/laser constants.
struct SystemParams {
    double delta0 = 0.0;    // detuning between emitter and laser
    double omega0 = 1.0;    // Rabi frequency of the driven transition
    double gamma_sp = 1.0;  // spontaneous emission rate (the unit)

    void validate() const {
        require(std::isfinite(delta0), "system.delta0 must be finite");
        require(std::isfinite(omega0), "system.omega0 must be finite");
        require(std::isfinite(gamma_sp) && gamma_sp > 0.0, "system.gamma_sp must be positive");
    }
};

// Counting variable and the highest s-derivative order carried by a run.
struct CountingPoint {
    double s = 1.0;
    int n_derivs = 0;

    void validate() const {
        require(std::isfinite(s), "counting.s must be finite");
        require(n_derivs >= 0, "counting.n_derivs must be >= 0");
    }
};

// Ornstein–Uhlenbeck noise. The initial law is Normal(a*chi, sigma^2 (1-a^2));
// a = 0 is the equilibrium reference.
struct OunParams {
    double gamma_decay = 1.0;  // relaxation rate of the noise
    double sigma = 1.0;        // stationary standard deviation
    double a = 0.0;            // nonequilibrium parameter, |a| < 1
    double chi = 0.0;          // initial shift parameter

    double initial_mean() const { return a * chi; }
    double initial_variance() const { return sigma * sigma * (1.0 - a * a); }

    void validate() const {
        require(std::isfinite(gamma_decay) && gamma_decay > 0.0, "noise.gamma must be positive");
        require(std::isfinite(sigma) && sigma > 0.0, "noise.sigma must be positive");
        require(std::isfinite(a) && std::abs(a) < 1.0, "noise.a must satisfy |a| < 1 for OU noise");
        require(std::isfinite(chi), "noise.chi must be finite");
    }
};

// Random telegraph noise, two states ±nu with switching rate lambda. The
// initial law is P(+nu) = (1+a)/2.
struct RtnParams {
    double lambda_switch = 1.0;
    double nu = 1.0;
    double a = 0.0;

    void validate() const {
        require(std::isfinite(lambda_switch) && lambda_switch > 0.0, "noise.lambda must be positive");
        require(std::isfinite(nu) && nu > 0.0, "noise.nu must be positive");
        require(std::isfinite(a) && std::abs(a) <= 1.0, "noise.a must satisfy |a| <= 1 for telegraph noise");
    }
};

struct NoNoise {};

using NoiseModel = std::variant<NoNoise, OunParams, RtnParams>;

// Uniform grid discretizing the continuous OU noise coordinate.
struct XiGrid {
    double xi_min = -6.0;
    double xi_max = 6.0;
    int n_points = 201;

    double spacing() const { return (xi_max - xi_min) / (n_points - 1); }
    double point(int i) const { return xi_min + i * spacing(); }

    // Default grid: n_sigmas * sigma beyond the wider of {0, a*chi} on each side.
    static XiGrid spanning(const OunParams& p, int n_points = 201, double n_sigmas = 6.0) {
        XiGrid g;
        g.xi_min = std::min(0.0, p.initial_mean()) - n_sigmas * p.sigma;
        g.xi_max = std::max(0.0, p.initial_mean()) + n_sigmas * p.sigma;
        g.n_points = n_points;
        return g;
    }

    bool covers(double lo, double hi) const { return xi_min <= lo && xi_max >= hi; }

    void validate() const {
        require(n_points >= 3, "grid.n_points must be at least 3");
        require(std::isfinite(xi_min) && std::isfinite(xi_max) && xi_min < xi_max,
                "grid bounds must satisfy xi_min < xi_max");
    }
};

}  // namespace specdiff
