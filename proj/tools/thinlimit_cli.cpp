// Command-line driver: check | reduce | full3d | rod | gamma.

#include "thinlimit/config.hpp"
#include "thinlimit/harness.hpp"
#include "thinlimit/io.hpp"
#include "thinlimit/recovery.hpp"
#include "thinlimit/rotations.hpp"
#include "thinlimit/states.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace thinlimit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Overrides {
    std::string scenario_file;
    std::optional<double> h;
    std::optional<int> resolution;
    std::optional<int> normal_resolution;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_iter;
    std::optional<double> tol;
    std::string out = "out";
};

RunConfig resolve_config(const Overrides& o)
{
    RunConfig c = o.scenario_file.empty() ? RunConfig{} : load_config(o.scenario_file);
    if (o.h) c.h = *o.h;
    if (o.resolution) c.resolution = *o.resolution;
    if (o.normal_resolution) c.normal_resolution = *o.normal_resolution;
    if (o.seed) c.seed = *o.seed;
    if (o.max_iter) c.optimize.max_iter = *o.max_iter;
    if (o.tol) c.optimize.grad_tol = *o.tol;
    validate_config(c);
    return c;
}

fs::path output_dir(const Overrides& o)
{
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

ReducedState initial_state(const RunConfig& c, const ScenarioSpec& s, std::shared_ptr<const SurfaceMesh> mesh)
{
    ReducedState st;
    if (c.init.kind == "identity")
        st = chart_identity_state(s, mesh);
    else if (c.init.kind == "flat")
        st = flat_cylinder_state(mesh);
    else if (c.init.kind == "rolled")
        st = rolled_cylinder_state(mesh, c.init.radius);
    else
        st = embedded_state(s, mesh);
    Rng rng(c.seed);
    if (c.init.sigma > 0.0) perturb(st, c.init.sigma, rng);
    return st;
}

std::string fmt(double v) { return format_double(v); }

int run_check(const Overrides& o)
{
    const RunConfig c = resolve_config(o);
    const fs::path dir = output_dir(o);
    const auto results = run_invariant_suite(c.seed);
    CsvWriter csv({"check", "passed", "value", "threshold", "detail"});
    bool all = true;
    for (const auto& r : results) {
        csv.add_row({r.name, r.passed ? "1" : "0", fmt(r.value), fmt(r.threshold), r.detail});
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << fmt(r.value)
                  << " threshold=" << fmt(r.threshold) << '\n';
        all = all && r.passed;
    }
    csv.write(dir / "check.csv");
    return all ? 0 : kExitValidation;
}

int run_reduce(const Overrides& o)
{
    const RunConfig c = resolve_config(o);
    const fs::path dir = output_dir(o);
    const ScenarioSpec s = make_scenario(c.scenario);
    auto mesh = build_surface_mesh(s, c.resolution);
    const ReducedResult r = minimize_reduced(s, initial_state(c, s, mesh), c.optimize);
    const EnergyReport& rep = r.report;
    CsvWriter csv({"family", "resolution", "seed", "status", "iterations", "limit", "strict_value", "violation",
                   "tangential", "normal", "grad_norm"});
    csv.add_row({s.family, std::to_string(c.resolution), std::to_string(c.seed), r.status,
                 std::to_string(r.iterations), fmt(rep.terms.at("limit")),
                 rep.value ? fmt(*rep.value) : "inf", fmt(rep.constraint_violation), fmt(rep.terms.at("tangential")),
                 fmt(rep.terms.at("normal")), fmt(rep.grad_norm)});
    csv.write(dir / "reduce.csv");
    write_trace(dir / "reduce_trace.jsonl", rep.trace);
    write_mesh(dir / "reduce_mesh.obj", *mesh, r.state.F);
    std::cout << "reduce " << s.family << ": status=" << r.status << " E_lim=" << fmt(rep.terms.at("limit"))
              << " violation=" << fmt(rep.constraint_violation) << '\n';
    return 0;
}

int run_full3d(const Overrides& o)
{
    const RunConfig c = resolve_config(o);
    const fs::path dir = output_dir(o);
    const ScenarioSpec s = make_scenario(c.scenario);
    auto mesh = build_surface_mesh(s, c.resolution);
    auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, c.h, c.normal_resolution));
    const BulkState init = build_recovery(initial_state(c, s, mesh), grid);
    const double e0 = *eval_Eh(init).value;
    const BulkResult r = minimize_bulk(init, c.optimize);
    const RigidityReport probe = rigidity_probe(r.state);
    CsvWriter csv({"family", "h", "resolution", "normal_resolution", "seed", "status", "iterations", "initial_Eh",
                   "Eh", "grad_norm", "rigidity_lhs", "rigidity_ratio", "grad_q", "grad_ratio",
                   "boundary_fraction"});
    csv.add_row({s.family, fmt(c.h), std::to_string(c.resolution), std::to_string(c.normal_resolution),
                 std::to_string(c.seed), r.status, std::to_string(r.iterations), fmt(e0), fmt(*r.report.value),
                 fmt(r.report.grad_norm), fmt(probe.lhs), fmt(probe.ratio), fmt(probe.grad_q),
                 fmt(probe.grad_ratio), fmt(probe.boundary_fraction)});
    csv.write(dir / "full3d.csv");
    write_trace(dir / "full3d_trace.jsonl", r.report.trace);
    Eigen::MatrixXd mid(r.state.dim(), mesh->size());
    const int zero = grid->zero_section();
    for (int i = 0; i < mesh->size(); ++i) mid.col(i) = r.state.values.col(grid->bulk_index(i, zero));
    write_mesh(dir / "full3d_mesh.obj", *mesh, mid);
    std::cout << "full3d " << s.family << " h=" << fmt(c.h) << ": status=" << r.status
              << " E_h=" << fmt(*r.report.value) << " rigidity_ratio=" << fmt(probe.ratio) << '\n';
    return 0;
}

int run_rod(const Overrides& o)
{
    const RunConfig c = resolve_config(o);
    if (c.scenario.family != "rod") throw ConfigError("rod: scenario family must be 'rod'");
    const fs::path dir = output_dir(o);
    const ScenarioSpec s = make_scenario(c.scenario);
    MatN q0 = MatN::Identity(3, 3);
    if (!c.rod.initial_frame.empty())
        for (int i = 0; i < 9; ++i) q0(i / 3, i % 3) = c.rod.initial_frame[i];
    VecN p0 = VecN::Zero(3);
    if (!c.rod.initial_point.empty())
        for (int i = 0; i < 3; ++i) p0(i) = c.rod.initial_point[i];
    const RodIntegration rod = integrate_frame(s, q0, p0, {c.rod.steps, c.rod.reorthonormalize});
    const SurfaceMesh& mesh = *rod.state.mesh;
    CsvWriter nodes({"s", "x", "y", "z", "t1", "t2", "t3", "n1_1", "n1_2", "n1_3", "n2_1", "n2_2", "n2_3"});
    for (int i = 0; i < mesh.size(); ++i) {
        std::vector<std::string> row{fmt(mesh.nodes[i](0))};
        for (int r = 0; r < 3; ++r) row.push_back(fmt(rod.state.F(r, i)));
        for (int col = 0; col < 3; ++col)
            for (int r = 0; r < 3; ++r) row.push_back(fmt(rod.frames[i](r, col)));
        nodes.add_row(std::move(row));
    }
    nodes.write(dir / "rod.csv");
    const EnergyReport e = eval_Elim(rod.state, s, LimitMode::strict(std::max(c.optimize.violation_tol, discretization_tolerance(mesh))));
    const double closure = (rod.state.F.col(mesh.size() - 1) - rod.state.F.col(0)).norm();
    CsvWriter summary({"steps", "closure", "E_lim", "violation", "orthogonality_defect"});
    summary.add_row({std::to_string(c.rod.steps), fmt(closure), e.value ? fmt(*e.value) : "inf",
                     fmt(e.constraint_violation), fmt(rod.max_orthogonality_defect)});
    summary.write(dir / "rod_summary.csv");
    write_mesh(dir / "rod_mesh.obj", mesh, rod.state.F);
    std::cout << "rod: closure=" << fmt(closure) << " E_lim=" << (e.value ? fmt(*e.value) : "inf") << '\n';
    return 0;
}

int run_gamma(const Overrides& o)
{
    const RunConfig c = resolve_config(o);
    const fs::path dir = output_dir(o);
    const ScenarioSpec s = make_scenario(c.scenario);
    auto mesh = build_surface_mesh(s, c.resolution);
    GammaOptions opt;
    opt.optimize = c.optimize;
    opt.normal_resolution = c.normal_resolution;
    const GammaSweep sweep = gamma_sweep(s, initial_state(c, s, mesh), c.h_list, opt);
    CsvWriter csv({"h", "min_Eh", "Elim_star", "gap", "recovery_Eh", "status", "failure"});
    for (const auto& r : sweep.rows) {
        csv.add_row({fmt(r.h), fmt(r.min_Eh), fmt(r.Elim_star), fmt(r.gap), fmt(r.recovery_Eh), r.status, r.failure});
        std::cout << "gamma h=" << fmt(r.h) << " min_Eh=" << fmt(r.min_Eh) << " gap=" << fmt(r.gap)
                  << " status=" << r.status << '\n';
        std::cerr << "  runtime h=" << fmt(r.h) << ": " << r.runtime << " s\n";
    }
    csv.write(dir / "gamma.csv");
    if (!sweep.reduced_failed) write_trace(dir / "gamma_reduced_trace.jsonl", sweep.reduced.report.trace);
    for (const auto& r : sweep.rows)
        if (r.failed()) return kExitRuntime;
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Thin-body elasticity: full energy, limit energy and convergence sweeps"};
    app.set_help_flag("--help", "Print help and exit");
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--scenario", o.scenario_file, "Scenario/config JSON file")->check(CLI::ExistingFile);
    app.add_option("--h", o.h, "Half-thickness");
    app.add_option("--resolution", o.resolution, "Surface intervals per axis");
    app.add_option("--normal-resolution", o.normal_resolution, "Normal nodes (odd)");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--max-iter", o.max_iter, "Optimizer iterations per stage");
    app.add_option("--tol", o.tol, "Gradient-norm tolerance");
    app.add_option("--out", o.out, "Output directory")->capture_default_str();

    int code = 0;
    auto add = [&](const char* name, const char* help, int (*fn)(const Overrides&)) {
        app.add_subcommand(name, help)->callback([&, fn] { code = fn(o); });
    };
    add("check", "Run the invariant suite", run_check);
    add("reduce", "Minimize the limit energy", run_reduce);
    add("full3d", "Minimize the bulk energy from a recovery sequence", run_full3d);
    add("rod", "Integrate the rod frame equations", run_rod);
    add("gamma", "Gamma-convergence sweep over h", run_gamma);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return code;
}
