// config.cpp — JSON configuration parsing, presets, and overrides.

#include "specdiff/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace specdiff {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const std::string& key, long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> parse_grid_spec(const json& spec, const std::string& path, bool from_zero) {
    std::vector<double> values;
    if (spec.is_array()) {
        for (const auto& v : spec) {
            if (!v.is_number()) fail(path, "expected an array of numbers");
            values.push_back(v.get<double>());
        }
        if (values.empty()) fail(path, "must not be empty");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1])) fail(path, "values must be strictly ascending");
        if (from_zero && values[0] != 0.0) fail(path, "must start at 0");
        return values;
    }
    if (!spec.is_object()) fail(path, "expected an array or a range object");
    if (from_zero) {
        check_keys(spec, path, {"stop", "num", "spacing", "first"});
        const double stop = get_number(spec, path, "stop", -1.0);
        const long num = get_integer(spec, path, "num", 0);
        if (!(stop > 0.0)) fail(path + ".stop", "must be positive");
        if (num < 2) fail(path + ".num", "must be at least 2");
        const std::string spacing = get_string(spec, path, "spacing", "linear");
        if (spacing == "linear") {
            for (long i = 0; i < num; ++i)
                values.push_back(stop * static_cast<double>(i) / (num - 1));
        } else if (spacing == "log") {
            if (num < 3) fail(path + ".num", "log spacing needs at least 3 points");
            const double first = get_number(spec, path, "first", stop * 1e-3);
            if (!(first > 0.0 && first < stop)) fail(path + ".first", "must lie in (0, stop)");
            values.push_back(0.0);
            for (long i = 0; i <= num - 2; ++i)
                values.push_back(first *
                                 std::pow(stop / first, static_cast<double>(i) / (num - 2)));
        } else {
            fail(path + ".spacing", "must be 'linear' or 'log'");
        }
        return values;
    }
    check_keys(spec, path, {"min", "max", "num"});
    const double lo = get_number(spec, path, "min", 0.0);
    const double hi = get_number(spec, path, "max", 0.0);
    const long num = get_integer(spec, path, "num", 0);
    if (!(hi > lo)) fail(path, "max must exceed min");
    if (num < 2) fail(path + ".num", "num must be at least 2");
    for (long i = 0; i < num; ++i)
        values.push_back(lo + (hi - lo) * static_cast<double>(i) / (num - 1));
    return values;
}

json default_config() {
    return json{
        {"system", {{"delta0", 0.0}, {"omega0", 1.0}}},
        {"run", json::object()},
    };
}

void merge_into(json& base, const json& overlay) {
    for (const auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object())
            merge_into(base[key], value);
        else
            base[key] = value;
    }
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"oun-slow", "oun-fast", "rtn-slow-strong", "rtn-slow-intermediate",
            "rtn-slow-weak", "rtn-fast"};
}

json preset_json(const std::string& name) {
    json noise;
    if (name == "oun-slow")
        noise = {{"kind", "oun"}, {"gamma", 1e-4}, {"sigma", 1.0}, {"chi", 1.0}, {"a", 0.0}};
    else if (name == "oun-fast")
        noise = {{"kind", "oun"}, {"gamma", 1e4}, {"sigma", 1.0}, {"chi", 1.0}, {"a", 0.0}};
    else if (name == "rtn-slow-strong")
        noise = {{"kind", "rtn"}, {"lambda", 1e-4}, {"nu", 5.0}, {"a", 0.0}};
    else if (name == "rtn-slow-intermediate")
        noise = {{"kind", "rtn"}, {"lambda", 1e-4}, {"nu", 1.0}, {"a", 0.0}};
    else if (name == "rtn-slow-weak")
        noise = {{"kind", "rtn"}, {"lambda", 1e-4}, {"nu", 0.2}, {"a", 0.0}};
    else if (name == "rtn-fast")
        noise = {{"kind", "rtn"}, {"lambda", 1e4}, {"nu", 5.0}, {"a", 0.0}};
    else
        throw std::invalid_argument("unknown preset '" + name + "'");
    return json{{"system", {{"delta0", 0.0}, {"omega0", 1.0}}}, {"noise", noise}};
}

RunMode parse_mode(const std::string& name) {
    if (name == "timeseries") return RunMode::Timeseries;
    if (name == "sweep") return RunMode::Sweep;
    if (name == "pmf") return RunMode::Pmf;
    if (name == "tau") return RunMode::Tau;
    if (name == "validate") return RunMode::Validate;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected timeseries|sweep|pmf|tau|validate)");
}

std::string mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Timeseries: return "timeseries";
        case RunMode::Sweep: return "sweep";
        case RunMode::Pmf: return "pmf";
        case RunMode::Tau: return "tau";
        case RunMode::Validate: return "validate";
    }
    return "?";
}

namespace {

RunConfig build_config(json doc) {
    check_keys(doc, "", {"system", "noise", "grid", "run"});
    RunConfig cfg;

    const json system = doc.value("system", json::object());
    if (!system.is_object()) fail("system", "expected an object");
    check_keys(system, "system", {"delta0", "omega0"});
    cfg.system.delta0 = get_number(system, "system", "delta0", 0.0);
    cfg.system.omega0 = get_number(system, "system", "omega0", 1.0);
    cfg.system.gamma_sp = 1.0;
    cfg.system.validate();

    const json noise = doc.value("noise", json{{"kind", "none"}});
    if (!noise.is_object()) fail("noise", "expected an object");
    const std::string kind = get_string(noise, "noise", "kind", "none");
    if (kind == "none") {
        check_keys(noise, "noise", {"kind"});
        cfg.noise = NoNoise{};
    } else if (kind == "oun") {
        check_keys(noise, "noise", {"kind", "gamma", "sigma", "a", "chi"});
        OunParams p;
        p.gamma_decay = get_number(noise, "noise", "gamma", 1.0);
        p.sigma = get_number(noise, "noise", "sigma", 1.0);
        p.a = get_number(noise, "noise", "a", 0.0);
        p.chi = get_number(noise, "noise", "chi", 0.0);
        p.validate();
        cfg.noise = p;
    } else if (kind == "rtn") {
        check_keys(noise, "noise", {"kind", "lambda", "nu", "a"});
        RtnParams p;
        p.lambda_switch = get_number(noise, "noise", "lambda", 1.0);
        p.nu = get_number(noise, "noise", "nu", 1.0);
        p.a = get_number(noise, "noise", "a", 0.0);
        p.validate();
        cfg.noise = p;
    } else {
        fail("noise.kind", "must be one of none|oun|rtn");
    }

    const json grid = doc.value("grid", json::object());
    if (!grid.is_object()) fail("grid", "expected an object");
    check_keys(grid, "grid", {"n_points", "n_sigmas", "xi_min", "xi_max"});
    if (const auto* oun = std::get_if<OunParams>(&cfg.noise)) {
        const int n_points = static_cast<int>(get_integer(grid, "grid", "n_points", 201));
        const double n_sigmas = get_number(grid, "grid", "n_sigmas", 6.0);
        cfg.grid = XiGrid::spanning(*oun, n_points, n_sigmas);
        if (grid.contains("xi_min") || grid.contains("xi_max")) {
            cfg.grid.xi_min = get_number(grid, "grid", "xi_min", cfg.grid.xi_min);
            cfg.grid.xi_max = get_number(grid, "grid", "xi_max", cfg.grid.xi_max);
            cfg.explicit_grid = true;
        }
        cfg.grid.validate();
        const XiGrid required = XiGrid::spanning(*oun, 3, 6.0);
        if (!cfg.grid.covers(required.xi_min, required.xi_max))
            fail("grid", "must cover 6 sigma beyond {0, a*chi} on both sides");
    } else if (!grid.empty()) {
        fail("grid", "only meaningful for OU noise");
    }

    const json run = doc.value("run", json::object());
    if (!run.is_object()) fail("run", "expected an object");
    check_keys(run, "run",
               {"mode", "times", "detunings", "n_traj", "seed", "rtol", "atol", "method",
                "pmf_n_max", "tau_t_max", "tau_tol", "k_sigma", "workers", "out"});
    cfg.mode = parse_mode(get_string(run, "run", "mode", "timeseries"));
    if (run.contains("times"))
        cfg.times = parse_grid_spec(run.at("times"), "run.times", /*from_zero=*/true);
    else
        cfg.times = parse_grid_spec(json{{"stop", 20.0}, {"num", 81}}, "run.times", true);
    if (run.contains("detunings"))
        cfg.detunings = parse_grid_spec(run.at("detunings"), "run.detunings", false);
    else
        cfg.detunings = parse_grid_spec(json{{"min", -10.0}, {"max", 10.0}, {"num", 41}},
                                        "run.detunings", false);

    cfg.prop.rtol = get_number(run, "run", "rtol", 1e-9);
    cfg.prop.atol = get_number(run, "run", "atol", 1e-11);
    const std::string method = get_string(run, "run", "method", "auto");
    if (method == "auto") cfg.prop.method = Method::Auto;
    else if (method == "rk") cfg.prop.method = Method::AdaptiveRk;
    else if (method == "expm") cfg.prop.method = Method::DenseExpm;
    else if (method == "krylov") cfg.prop.method = Method::KrylovExpm;
    else fail("run.method", "must be one of auto|rk|expm|krylov");

    const long seed = get_integer(run, "run", "seed", 12345);
    if (seed < 0) fail("run.seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.n_traj = get_integer(run, "run", "n_traj", 20000);
    if (cfg.n_traj < 2) fail("run.n_traj", "must be at least 2");
    cfg.pmf_n_max = static_cast<int>(get_integer(run, "run", "pmf_n_max", 6));
    if (cfg.pmf_n_max < 0 || cfg.pmf_n_max > 10) fail("run.pmf_n_max", "must lie in [0, 10]");
    cfg.tau_t_max = get_number(run, "run", "tau_t_max", 60.0);
    if (!(cfg.tau_t_max > 0)) fail("run.tau_t_max", "must be positive");
    cfg.tau_tol = get_number(run, "run", "tau_tol", 1e-10);
    cfg.mc_k_sigma = get_number(run, "run", "k_sigma", 4.0);
    const long workers = get_integer(run, "run", "workers", 0);
    if (workers < 0) fail("run.workers", "must be non-negative");
    cfg.workers = static_cast<unsigned>(workers);
    cfg.out_path = get_string(run, "run", "out", "");

    // Echo the resolved document (inputs plus applied defaults) for metadata.
    json resolved = doc;
    resolved["run"]["mode"] = mode_name(cfg.mode);
    resolved["run"]["times"] = cfg.times;
    resolved["run"]["detunings"] = cfg.detunings;
    resolved["run"]["seed"] = cfg.seed;
    resolved["run"]["n_traj"] = cfg.n_traj;
    resolved["run"]["rtol"] = cfg.prop.rtol;
    resolved["run"]["atol"] = cfg.prop.atol;
    resolved["run"]["method"] = method;
    resolved["run"]["pmf_n_max"] = cfg.pmf_n_max;
    resolved["run"]["tau_t_max"] = cfg.tau_t_max;
    resolved["run"]["tau_tol"] = cfg.tau_tol;
    resolved["run"]["k_sigma"] = cfg.mc_k_sigma;
    resolved["run"]["workers"] = cfg.workers;
    if (std::holds_alternative<OunParams>(cfg.noise)) {
        resolved["grid"]["n_points"] = cfg.grid.n_points;
        resolved["grid"]["xi_min"] = cfg.grid.xi_min;
        resolved["grid"]["xi_max"] = cfg.grid.xi_max;
    }
    cfg.resolved_json = resolved.dump();
    return cfg;
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line/column for the message.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
            if (text[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
        std::ostringstream msg;
        msg << "config: JSON syntax error at line " << line << ", column " << col << ": "
            << e.what();
        throw std::invalid_argument(msg.str());
    }
}

json parse_scalar_override(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);  // bare words become strings
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json doc = default_config();
    merge_into(doc, parse_json_text(text));
    return build_config(std::move(doc));
}

RunConfig resolve_config(const std::optional<std::string>& preset,
                         const std::optional<std::string>& config_text,
                         const std::vector<std::string>& overrides) {
    json doc = default_config();
    if (preset) merge_into(doc, preset_json(*preset));
    if (config_text) merge_into(doc, parse_json_text(*config_text));
    for (const auto& kv : overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("override '" + kv + "' is not of the form key.path=value");
        const std::string path = kv.substr(0, eq);
        json* node = &doc;
        std::size_t pos = 0;
        while (true) {
            const std::size_t dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
            if (key.empty())
                throw std::invalid_argument("override '" + kv + "' has an empty path segment");
            if (dot == std::string::npos) {
                (*node)[key] = parse_scalar_override(kv.substr(eq + 1));
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
    return build_config(std::move(doc));
}

SolveContext RunConfig::solve_context() const {
    SolveContext ctx;
    ctx.sys = system;
    ctx.noise = noise;
    ctx.grid = grid;
    ctx.prop = prop;
    return ctx;
}

}  // namespace specdiff
