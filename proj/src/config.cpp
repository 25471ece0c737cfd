#include "thinlimit/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace thinlimit {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known)
{
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void parse_scenario(const json& j, ScenarioParams& p)
{
    reject_unknown(j, "scenario", {"family", "chart", "radius", "curvature", "rod_curvature", "torsion", "length"});
    read(j, "family", p.family, "scenario");
    if (j.contains("chart")) {
        const json& c = j.at("chart");
        reject_unknown(c, "scenario.chart", {"lo", "hi"});
        read(c, "lo", p.lo, "scenario.chart");
        read(c, "hi", p.hi, "scenario.chart");
    }
    read(j, "radius", p.radius, "scenario");
    read(j, "curvature", p.curvature, "scenario");
    read(j, "rod_curvature", p.rod_curvature, "scenario");
    read(j, "torsion", p.torsion, "scenario");
    read(j, "length", p.length, "scenario");
}

void parse_optimize(const json& j, OptimizeOptions& o)
{
    reject_unknown(j, "optimize", {"max_iter", "grad_tol", "beta0", "beta_growth", "beta_max", "memory", "armijo",
                                   "max_backtracks", "precond_refresh", "violation_tol"});
    read(j, "max_iter", o.max_iter, "optimize");
    read(j, "grad_tol", o.grad_tol, "optimize");
    read(j, "beta0", o.beta0, "optimize");
    read(j, "beta_growth", o.beta_growth, "optimize");
    read(j, "beta_max", o.beta_max, "optimize");
    read(j, "memory", o.memory, "optimize");
    read(j, "armijo", o.armijo, "optimize");
    read(j, "max_backtracks", o.max_backtracks, "optimize");
    read(j, "precond_refresh", o.precond_refresh, "optimize");
    read(j, "violation_tol", o.violation_tol, "optimize");
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "config",
                   {"scenario", "mesh", "h", "h_list", "seed", "init", "optimize", "rod"});
    RunConfig c;
    if (j.contains("scenario")) parse_scenario(j.at("scenario"), c.scenario);
    if (j.contains("mesh")) {
        const json& m = j.at("mesh");
        reject_unknown(m, "mesh", {"resolution", "normal_resolution"});
        read(m, "resolution", c.resolution, "mesh");
        read(m, "normal_resolution", c.normal_resolution, "mesh");
    }
    read(j, "h", c.h, "config");
    read(j, "h_list", c.h_list, "config");
    read(j, "seed", c.seed, "config");
    if (j.contains("init")) {
        const json& i = j.at("init");
        reject_unknown(i, "init", {"kind", "sigma", "radius"});
        read(i, "kind", c.init.kind, "init");
        read(i, "sigma", c.init.sigma, "init");
        read(i, "radius", c.init.radius, "init");
    }
    if (j.contains("optimize")) parse_optimize(j.at("optimize"), c.optimize);
    if (j.contains("rod")) {
        const json& r = j.at("rod");
        reject_unknown(r, "rod", {"steps", "reorthonormalize", "initial_frame", "initial_point"});
        read(r, "steps", c.rod.steps, "rod");
        read(r, "reorthonormalize", c.rod.reorthonormalize, "rod");
        read(r, "initial_frame", c.rod.initial_frame, "rod");
        read(r, "initial_point", c.rod.initial_point, "rod");
    }
    validate_config(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const RunConfig& c)
{
    const auto& fams = scenario_families();
    if (std::find(fams.begin(), fams.end(), c.scenario.family) == fams.end())
        throw ConfigError("unknown scenario family '" + c.scenario.family + "'");
    if (c.resolution < 4) throw ConfigError("mesh.resolution must be at least 4");
    if (c.normal_resolution < 3 || c.normal_resolution % 2 == 0)
        throw ConfigError("mesh.normal_resolution must be odd and at least 3");
    if (!(c.h > 0.0)) throw ConfigError("h must be positive");
    for (std::size_t i = 0; i < c.h_list.size(); ++i) {
        if (!(c.h_list[i] > 0.0)) throw ConfigError("h_list entries must be positive");
        if (i > 0 && !(c.h_list[i] < c.h_list[i - 1])) throw ConfigError("h_list must be strictly decreasing");
    }
    static const std::set<std::string> kinds{"identity", "flat", "rolled", "embedded"};
    if (!kinds.count(c.init.kind)) throw ConfigError("init.kind '" + c.init.kind + "' is not recognized");
    if (!(c.init.sigma >= 0.0)) throw ConfigError("init.sigma must be non-negative");
    const OptimizeOptions& o = c.optimize;
    if (o.max_iter < 0 || o.memory < 1 || o.max_backtracks < 1 || o.precond_refresh < 0)
        throw ConfigError("optimize: iteration counts out of range");
    if (!(o.grad_tol >= 0.0) || !(o.violation_tol > 0.0) || !(o.armijo > 0.0 && o.armijo < 1.0))
        throw ConfigError("optimize: tolerances out of range");
    if (!(o.beta0 > 0.0) || !(o.beta_max >= o.beta0) || !(o.beta_growth > 1.0))
        throw ConfigError("optimize: invalid penalty schedule");
    if (c.rod.steps < 16) throw ConfigError("rod.steps must be at least 16");
    if (!c.rod.initial_frame.empty() && c.rod.initial_frame.size() != 9)
        throw ConfigError("rod.initial_frame must have 9 entries");
    if (!c.rod.initial_point.empty() && c.rod.initial_point.size() != 3)
        throw ConfigError("rod.initial_point must have 3 entries");
}

}  // namespace thinlimit
