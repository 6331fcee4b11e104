// config.hpp — Run configuration: JSON parsing, presets, and CLI overrides.
//
// JSON is the canonical configuration format. A configuration resolves to a
// fully-validated RunConfig; the resolved document (defaults included) is
// echoed into every output file's metadata so a run can be reproduced from
// its own header.

#pragma once

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

#include "specdiff/observables.hpp"
#include "specdiff/params.hpp"
#include "specdiff/propagate.hpp"

namespace specdiff {

enum class RunMode { Timeseries, Sweep, Pmf, Tau, Validate };

struct RunConfig {
    SystemParams system;
    NoiseModel noise;
    XiGrid grid;              // meaningful only for OU noise
    bool explicit_grid = false;

    RunMode mode = RunMode::Timeseries;
    std::vector<double> times;
    std::vector<double> detunings;
    PropagateOptions prop;
    std::uint64_t seed = 12345;
    long n_traj = 20000;
    int pmf_n_max = 6;
    double tau_t_max = 60.0;
    double tau_tol = 1e-10;
    double mc_k_sigma = 4.0;
    unsigned workers = 0;     // 0 = resolve from environment / hardware
    std::string out_path;

    std::string resolved_json;  // canonical single-line echo of the full config

    SolveContext solve_context() const;
};

// Named parameter bundles matching the studied regimes. The fast-telegraph
// preset intentionally uses lambda = 1e4 (the fast-modulation condition
// lambda >> nu, Gamma, Omega0), not the 1e-4 that a literal reading of one
// figure caption would give.
std::vector<std::string> preset_names();
nlohmann::json preset_json(const std::string& name);

// Parses and validates a JSON config document. Unknown keys are rejected;
// syntax errors report line and column; semantic errors carry the field path.
RunConfig parse_config(const std::string& text);

// Convenience entry point used by the CLI: optional preset, optional config
// document, then dotted-path key=value overrides (e.g. "noise.a=0.6").
RunConfig resolve_config(const std::optional<std::string>& preset,
                         const std::optional<std::string>& config_text,
                         const std::vector<std::string>& overrides);

RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

}  // namespace specdiff
