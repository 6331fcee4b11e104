// simulate.cpp — Batch front end: timeseries, sweeps, photon distributions,
// waiting times, and solver-versus-Monte-Carlo validation.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "specdiff/config.hpp"
#include "specdiff/csv.hpp"
#include "specdiff/mc.hpp"
#include "specdiff/observables.hpp"
#include "specdiff/parallel.hpp"
#include "specdiff/version.hpp"

namespace {

using namespace specdiff;

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

std::vector<std::string> metadata(const RunConfig& cfg, double wall_seconds) {
    return {
        "specdiff " + std::string(kVersion),
        "config: " + cfg.resolved_json,
        "seed: " + std::to_string(cfg.seed),
        "wall_time_s: " + format_double(wall_seconds),
    };
}

int run_timeseries(const RunConfig& cfg, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const ObservableSeries series = observable_series(cfg.solve_context(), cfg.times);
    Table table;
    table.columns = {"time", "mean_n", "second_fact", "intensity", "mandel_q"};
    for (std::size_t i = 0; i < series.times.size(); ++i)
        table.rows.push_back({series.times[i], series.mean_n[i], series.second_fact[i],
                              series.intensity[i], series.mandel_q[i]});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.meta = metadata(cfg, wall);
    emit_csv(table, out_path);
    std::cout << "wrote " << out_path << " (" << table.rows.size() << " rows)\n";
    return 0;
}

int run_sweep(const RunConfig& cfg, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const SweepTable sweep = detuning_sweep(cfg.solve_context(), cfg.detunings, cfg.times,
                                            resolve_workers(cfg.workers));
    Table table;
    table.columns = {"delta0", "a", "time", "intensity", "mandel_q", "mean_n", "second_fact"};
    for (const auto& point : sweep.points) {
        if (!point.ok) continue;
        for (std::size_t i = 0; i < sweep.times.size(); ++i)
            table.rows.push_back({point.delta0, sweep.a, sweep.times[i], point.series.intensity[i],
                                  point.series.mandel_q[i], point.series.mean_n[i],
                                  point.series.second_fact[i]});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.meta = metadata(cfg, wall);
    table.meta.push_back("noise: " + sweep.noise_label);
    for (const auto& point : sweep.points)
        if (!point.ok)
            table.meta.push_back("failed: delta0=" + format_double(point.delta0) + " " + point.error);
    emit_csv(table, out_path);
    std::cout << "wrote " << out_path << " (" << table.rows.size() << " rows";
    if (sweep.failure_count() > 0) std::cout << ", " << sweep.failure_count() << " failed points";
    std::cout << ")\n";
    if (sweep.failure_count() > 0) {
        for (const auto& point : sweep.points)
            if (!point.ok)
                std::cerr << "sweep point delta0=" << point.delta0 << " failed: " << point.error << "\n";
        return 2;
    }
    return 0;
}

int run_pmf(const RunConfig& cfg, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd p = photon_pmf(cfg.solve_context(), cfg.pmf_n_max, cfg.times);
    Table table;
    table.columns = {"time"};
    for (int n = 0; n <= cfg.pmf_n_max; ++n) table.columns.push_back("p" + std::to_string(n));
    table.columns.push_back("sum");
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        std::vector<double> row = {cfg.times[i]};
        for (int n = 0; n <= cfg.pmf_n_max; ++n) row.push_back(p(static_cast<Eigen::Index>(i), n));
        row.push_back(p.row(static_cast<Eigen::Index>(i)).sum());
        table.rows.push_back(std::move(row));
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.meta = metadata(cfg, wall);
    emit_csv(table, out_path);
    std::cout << "wrote " << out_path << " (" << table.rows.size() << " rows)\n";
    return 0;
}

int run_tau(const RunConfig& cfg, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const WaitingTime wt = waiting_time(cfg.solve_context(), cfg.tau_t_max, cfg.tau_tol);
    Table table;
    table.columns = {"tau", "quadrature", "tail", "fitted_rate", "t_max"};
    table.rows.push_back({wt.tau, wt.quadrature, wt.tail, wt.fitted_rate, wt.t_max});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.meta = metadata(cfg, wall);
    emit_csv(table, out_path);
    std::cout << "tau = " << format_double(wt.tau) << " (tail " << format_double(wt.tail)
              << "); wrote " << out_path << "\n";
    return 0;
}

int run_validate(const RunConfig& cfg, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveContext ctx = cfg.solve_context();
    const CountingPoint cp{1.0, 2};

    const SleGenerator gen = build_sle_generator(ctx.sys, ctx.noise, ctx.grid, cp.s, cp.n_derivs);
    const Eigen::VectorXd pmf = noise_initial_pmf(ctx.noise, ctx.grid);
    const MarginalTrajectory traj =
        propagate(gen, sle_initial(pmf, cp.n_derivs), cfg.times, ctx.prop);
    const std::vector<GfState> avg = complete_average(traj);

    McOptions mc_opts;
    mc_opts.workers = resolve_workers(cfg.workers);
    const McEstimate mc =
        mc_estimate(ctx.sys, ctx.noise, cp, cfg.times, cfg.n_traj, cfg.seed, mc_opts);
    const CompareReport report = compare(cfg.times, avg, mc, cfg.mc_k_sigma);

    nlohmann::json out;
    out["version"] = kVersion;
    out["config"] = nlohmann::json::parse(cfg.resolved_json);
    out["n_traj"] = mc.n_traj;
    out["k_sigma"] = report.k_sigma;
    out["max_z"] = report.max_z;
    out["worst_time"] = cfg.times[static_cast<std::size_t>(report.worst_time)];
    out["worst_component"] = report.worst_component;
    out["pass"] = report.pass;
    out["large_se_warning"] = mc.large_se_warning;
    nlohmann::json per_time = nlohmann::json::array();
    for (std::size_t i = 1; i < cfg.times.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        nlohmann::json row;
        row["time"] = cfg.times[i];
        const ScalarEstimate n_mc = mc_mean_photons(mc, idx);
        row["mean_n_sle"] = avg[i][p_index(1)];
        row["mean_n_mc"] = n_mc.value;
        row["mean_n_se"] = n_mc.std_err;
        if (n_mc.value > 1e-12) {
            const ScalarEstimate q_mc = mc_mandel_q(mc, idx);
            const double q_sle =
                (avg[i][p_index(2)] - avg[i][p_index(1)] * avg[i][p_index(1)]) / avg[i][p_index(1)];
            row["mandel_q_sle"] = q_sle;
            row["mandel_q_mc"] = q_mc.value;
            row["mandel_q_se"] = q_mc.std_err;
        }
        per_time.push_back(std::move(row));
    }
    out["series"] = std::move(per_time);
    out["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    file << out.dump(2) << "\n";

    std::cout << (report.pass ? "PASS" : "FAIL") << ": max |z| = " << report.max_z << " at t = "
              << cfg.times[static_cast<std::size_t>(report.worst_time)] << " (k_sigma "
              << report.k_sigma << "); wrote " << out_path << "\n";
    if (mc.large_se_warning)
        std::cerr << "warning: some standard errors exceed 10% of their means; "
                     "increase n_traj for tighter validation\n";
    return report.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon counting statistics of a driven two-level emitter under spectral diffusion"};
    std::string mode_str;
    std::string config_path;
    std::string preset;
    std::string out_path;
    std::vector<std::string> overrides;

    app.add_option("--mode", mode_str, "timeseries|sweep|pmf|tau|validate")->required();
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--preset", preset,
                   "parameter preset: oun-slow|oun-fast|rtn-slow-strong|"
                   "rtn-slow-intermediate|rtn-slow-weak|rtn-fast");
    app.add_option("--out", out_path, "output file path");
    app.add_option("overrides", overrides, "dotted-path overrides, e.g. noise.a=0.6");

    CLI11_PARSE(app, argc, argv);

    try {
        std::optional<std::string> config_text;
        if (!config_path.empty()) config_text = read_file(config_path);
        std::optional<std::string> preset_opt;
        if (!preset.empty()) preset_opt = preset;

        std::vector<std::string> all_overrides = overrides;
        all_overrides.push_back("run.mode=" + mode_str);
        RunConfig cfg = resolve_config(preset_opt, config_text, all_overrides);

        std::string out = !out_path.empty() ? out_path
                         : !cfg.out_path.empty() ? cfg.out_path
                         : mode_name(cfg.mode) + (cfg.mode == RunMode::Validate ? ".json" : ".csv");

        switch (cfg.mode) {
            case RunMode::Timeseries: return run_timeseries(cfg, out);
            case RunMode::Sweep: return run_sweep(cfg, out);
            case RunMode::Pmf: return run_pmf(cfg, out);
            case RunMode::Tau: return run_tau(cfg, out);
            case RunMode::Validate: return run_validate(cfg, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
