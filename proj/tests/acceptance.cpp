// Acceptance run: one PASS/FAIL line per criterion AC1..AC9.
// Usage: acceptance [AC1 AC5 ...]   (no arguments = all)

#include "thinlimit/harness.hpp"
#include "thinlimit/io.hpp"
#include "thinlimit/recovery.hpp"
#include "thinlimit/rodsolver.hpp"
#include "thinlimit/scenarios.hpp"
#include "thinlimit/states.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#ifndef THINLIMIT_CLI_PATH
#define THINLIMIT_CLI_PATH "thinlimit"
#endif

using namespace thinlimit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << "[fail] ";
        }
        detail << what << "; ";
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string f(double v) { return format_double(v); }

ScenarioSpec scenario(const std::string& family)
{
    ScenarioParams p;
    p.family = family;
    return make_scenario(p);
}

double strict_limit(const ReducedState& st, const ScenarioSpec& s)
{
    const EnergyReport e = eval_Elim(st, s, LimitMode::strict(discretization_tolerance(*st.mesh)));
    return e.value ? *e.value : std::numeric_limits<double>::infinity();
}

ReducedResult reduce_from(const ScenarioSpec& s, ReducedState init, double sigma, std::uint64_t seed)
{
    Rng rng(seed);
    perturb(init, sigma, rng);
    return minimize_reduced(s, init);
}

std::pair<double, double> min_max(const std::vector<double>& v)
{
    return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
}

// ---------------------------------------------------------------------------

void ac1(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto results = run_invariant_suite(42);
    const double t = seconds_since(t0);
    for (const auto& r : results) o.require(r.passed, r.name + "=" + f(r.value) + " (thr " + f(r.threshold) + ")");
    o.require(t <= 120.0, "runtime " + f(t) + " s <= 120");
}

void ac2(Outcome& o)
{
    const auto t0 = Clock::now();
    const ScenarioSpec s = scenario("euclid_plate");
    auto mesh = build_surface_mesh(s, 16);
    const ReducedResult r = reduce_from(s, chart_identity_state(s, mesh), 1e-2, 7);
    const double elim = r.report.value ? *r.report.value : std::numeric_limits<double>::infinity();
    o.require(elim <= 1e-8, "min E_lim " + f(elim) + " <= 1e-8 (" + r.status + ")");

    auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, 0.1, 5));
    BulkState b = chart_identity_bulk(grid);
    Rng rng(8);
    perturb(b, 1e-2, rng);
    const BulkResult br = minimize_bulk(b);
    o.require(*br.report.value <= 1e-6, "min E_h " + f(*br.report.value) + " <= 1e-6 (" + br.status + ")");
    const double t = seconds_since(t0);
    o.require(t <= 60.0, "runtime " + f(t) + " s <= 60");
}

void ac3(Outcome& o)
{
    const ScenarioSpec cyl = scenario("cylinder_shell");
    auto mesh = build_surface_mesh(cyl, 32);
    const ReducedResult r = reduce_from(cyl, rolled_cylinder_state(mesh, 1.0), 1e-2, 11);
    const double elim = r.report.value ? *r.report.value : std::numeric_limits<double>::infinity();
    o.require(elim <= 1e-6, "rolled family min E_lim " + f(elim) + " <= 1e-6 (" + r.status + ")");

    // Rolled state measured against a flat target: only the bending term survives.
    ScenarioParams p;
    p.family = "euclid_plate";
    p.lo = {-0.5, -0.5};
    p.hi = {0.5, 0.5};
    const ScenarioSpec flat = make_scenario(p);
    auto fine = build_surface_mesh(flat, 64);
    const double e = strict_limit(rolled_cylinder_state(fine, 1.0), flat);
    o.require(std::abs(e - 1.0 / 3.0) <= 1e-3, "rolled vs flat target " + f(e) + " ~ 1/3 within 1e-3");
}

void ac4(Outcome& o)
{
    const auto t0 = Clock::now();
    const ScenarioSpec s = scenario("cylinder_shell");
    auto mesh = build_surface_mesh(s, 16);
    const ReducedState st = flat_cylinder_state(mesh);
    const double elim = strict_limit(st, s);
    std::vector<std::pair<double, double>> pts;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, h, 5));
        const double eh = *eval_Eh(build_recovery(st, grid)).value;
        pts.emplace_back(h, std::abs(eh - elim));
        o.detail << "h=" << f(h) << " gap=" << f(pts.back().second) << "; ";
    }
    const RateFit fit = rate_fit(pts);
    o.require(fit.slope >= 0.9, "slope " + f(fit.slope) + " >= 0.9 (E_lim " + f(elim) + ")");
    const double t = seconds_since(t0);
    o.require(t <= 300.0, "runtime " + f(t) + " s <= 300");
}

void ac5(Outcome& o)
{
    const auto t0 = Clock::now();
    {
        const ScenarioSpec s = scenario("cylinder_shell");
        auto mesh = build_surface_mesh(s, 32);
        ReducedState init = flat_cylinder_state(mesh);
        Rng rng(5);
        perturb(init, 1e-2, rng);
        const GammaSweep g = gamma_sweep(s, init, {0.2, 0.1, 0.05, 0.025, 0.0125}, {});
        o.require(!g.reduced_failed, "cylinder reduced " + (g.reduced_failed ? g.reduced_failure : g.reduced.status));
        bool decreasing = true;
        for (std::size_t i = 0; i < g.rows.size(); ++i) {
            o.detail << "cyl h=" << f(g.rows[i].h) << " gap=" << f(g.rows[i].gap) << " [" << g.rows[i].status << "]; ";
            o.require(!g.rows[i].failed(), "row ok");
            if (i > 0 && !(g.rows[i].gap < g.rows[i - 1].gap)) decreasing = false;
        }
        o.require(decreasing, "cylinder gap strictly decreasing");
        const double rel = g.rows.back().gap / g.rows.back().Elim_star;
        o.require(rel <= 0.1, "cylinder final relative gap " + f(rel) + " <= 0.1 (E_lim* " + f(g.rows.back().Elim_star) + ")");
    }
    {
        const ScenarioSpec s = scenario("hyperbolic_plate");
        auto mesh = build_surface_mesh(s, 16);
        ReducedState init = chart_identity_state(s, mesh);
        Rng rng(6);
        perturb(init, 1e-2, rng);
        const GammaSweep g = gamma_sweep(s, init, {0.2, 0.1, 0.05}, {});
        o.require(!g.reduced_failed, "hyperbolic reduced " + (g.reduced_failed ? g.reduced_failure : g.reduced.status));
        bool decreasing = true;
        for (std::size_t i = 0; i < g.rows.size(); ++i) {
            o.detail << "hyp h=" << f(g.rows[i].h) << " gap=" << f(g.rows[i].gap) << " [" << g.rows[i].status << "]; ";
            o.require(!g.rows[i].failed(), "row ok");
            if (i > 0 && !(g.rows[i].gap <= g.rows[i - 1].gap)) decreasing = false;
        }
        o.require(decreasing, "hyperbolic gap monotone");
    }
    const double t = seconds_since(t0);
    o.require(t <= 1200.0, "runtime " + f(t) + " s <= 1200");
}

void ac6(Outcome& o)
{
    {
        RodScenario circle;  // unit curvature over 2 pi
        const RodIntegration r = integrate_frame(circle, {6283, true});
        const int last = r.state.mesh->size() - 1;
        const double closure = (r.state.F.col(last) - r.state.F.col(0)).norm();
        o.require(closure <= 1e-6, "circle closure " + f(closure) + " <= 1e-6");
        const double e = strict_limit(r.state, rod_scenario_spec(circle));
        o.require(e <= 1e-10, "E_lim of integrated circle " + f(e) + " <= 1e-10");
    }
    {
        // Helix with curvature 1 and torsion 1: radius 1/2, pitch pi. The chord
        // |F(s) - F(0)|^2 = 2 R^2 (1 - cos(w s)) + v^2 s^2 gives both without
        // fixing orientation conventions.
        const double kap = 1.0, tau = 1.0, w = std::hypot(kap, tau);
        const double period = 2.0 * std::numbers::pi / w;
        RodScenario helix;
        helix.length = period;
        helix.curvature_fn = [kap](double) { return Eigen::Vector2d(kap, 0.0); };
        helix.torsion_fn = [tau](double) { return tau; };
        const int steps = 4000;
        const RodIntegration r = integrate_frame(helix, {steps, true});
        const double v = (r.state.F.col(steps) - r.state.F.col(0)).norm() / period;
        const double half = (r.state.F.col(steps / 2) - r.state.F.col(0)).squaredNorm();
        const double radius = 0.5 * std::sqrt(half - v * v * period * period / 4.0);
        const double pitch = v * period;
        const double r_exact = kap / (w * w), p_exact = 2.0 * std::numbers::pi * tau / (w * w);
        o.require(std::abs(radius - r_exact) <= 1e-5, "helix radius " + f(radius) + " vs " + f(r_exact));
        o.require(std::abs(pitch - p_exact) <= 1e-5, "helix pitch " + f(pitch) + " vs " + f(p_exact));
        const double e = strict_limit(r.state, rod_scenario_spec(helix));
        o.require(e <= 1e-10, "E_lim of integrated helix " + f(e) + " <= 1e-10");
    }
    {
        RodScenario rod;
        rod.length = 3.0;
        rod.curvature_fn = [](double s) { return Eigen::Vector2d(1.0 + 0.5 * std::sin(s), 0.3 * std::cos(2.0 * s)); };
        rod.torsion_fn = [](double s) { return 0.4 + 0.2 * s; };
        const RodIntegration ref = integrate_frame(rod, {12800, true});
        const VecN end = ref.state.F.col(12800);
        std::vector<std::pair<double, double>> pts;
        for (int n : {25, 50, 100, 200}) {
            const RodIntegration r = integrate_frame(rod, {n, true});
            pts.emplace_back(1.0 / n, (r.state.F.col(n) - end).norm());
        }
        const RateFit fit = rate_fit(pts);
        o.require(std::abs(fit.slope - 4.0) <= 0.3, "RK4 slope " + f(fit.slope) + " = 4 +- 0.3");
    }
}

void ac7(Outcome& o)
{
    auto judge = [&](const std::string& label, const std::vector<RigidityReport>& reps, const std::vector<double>& hs) {
        std::vector<double> ratio, grad;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            ratio.push_back(reps[i].ratio);
            grad.push_back(reps[i].grad_ratio);
            o.detail << label << " h=" << f(hs[i]) << " ratio=" << f(reps[i].ratio) << " grad=" << f(reps[i].grad_ratio)
                     << " bdry=" << f(reps[i].boundary_fraction) << "; ";
        }
        const auto [rlo, rhi] = min_max(ratio);
        const auto [glo, ghi] = min_max(grad);
        o.require(rlo > 0.0 && rhi / rlo <= 5.0, label + " ratio spread " + f(rhi / rlo) + " <= 5");
        o.require(glo > 0.0 && ghi / glo <= 5.0, label + " gradient spread " + f(ghi / glo) + " <= 5");
    };
    {
        // Rolled state against a flat target: q varies, E_h -> 1/3.
        ScenarioParams p;
        p.family = "euclid_plate";
        p.lo = {-0.5, -0.5};
        p.hi = {0.5, 0.5};
        const ScenarioSpec s = make_scenario(p);
        auto mesh = build_surface_mesh(s, 16);
        const ReducedState st = rolled_cylinder_state(mesh, 1.0);
        const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
        std::vector<RigidityReport> reps;
        for (double h : hs) {
            auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, h, 5));
            reps.push_back(rigidity_probe(build_recovery(st, grid)));
        }
        judge("recovery", reps, hs);
    }
    {
        const ScenarioSpec s = scenario("hyperbolic_plate");
        auto mesh = build_surface_mesh(s, 16);
        const ReducedResult red = reduce_from(s, chart_identity_state(s, mesh), 1e-2, 6);
        const std::vector<double> hs{0.02, 0.01, 0.005};
        std::vector<RigidityReport> reps;
        for (double h : hs) {
            auto grid = std::make_shared<const TubularGrid>(build_tubular_grid(s, mesh, h, 5));
            const BulkResult b = minimize_bulk(build_recovery(red.state, grid));
            o.detail << "bulk h=" << f(h) << " E_h=" << f(*b.report.value) << " [" << b.status << "]; ";
            reps.push_back(rigidity_probe(b.state));
        }
        judge("near-minimizer", reps, hs);
    }
}

// Feasible means violation <= violation_tol for optimizer output; analytic
// states only carry the FD truncation of dF and use the discretization tolerance.
void ac8(Outcome& o)
{
    struct Probe {
        std::string label;
        ReducedState state;
        ScenarioSpec s;
        bool analytic;
    };
    std::vector<Probe> probes;
    {
        const ScenarioSpec s = scenario("euclid_plate");
        auto mesh = build_surface_mesh(s, 16);
        probes.push_back({"euclid identity", chart_identity_state(s, mesh), s, true});
        probes.push_back({"euclid minimizer", reduce_from(s, chart_identity_state(s, mesh), 1e-2, 7).state, s, false});
    }
    {
        const ScenarioSpec s = scenario("cylinder_shell");
        auto mesh = build_surface_mesh(s, 16);
        probes.push_back({"cylinder rolled", rolled_cylinder_state(mesh, 1.0), s, true});
        probes.push_back({"cylinder flat", flat_cylinder_state(mesh), s, true});
        probes.push_back({"cylinder minimizer", reduce_from(s, flat_cylinder_state(mesh), 1e-2, 5).state, s, false});
    }
    {
        const ScenarioSpec s = scenario("hyperbolic_plate");
        auto mesh = build_surface_mesh(s, 16);
        probes.push_back({"hyperbolic minimizer", reduce_from(s, chart_identity_state(s, mesh), 1e-2, 6).state, s, false});
    }
    {
        const ScenarioSpec s = scenario("sphere_cap_shell");
        auto mesh = build_surface_mesh(s, 16);
        probes.push_back({"sphere embedded", embedded_state(s, mesh), s, true});
    }
    const double violation_tol = OptimizeOptions{}.violation_tol;
    int checked = 0;
    for (const Probe& p : probes) {
        const double tol = p.analytic ? discretization_tolerance(*p.state.mesh) : violation_tol;
        const EnergyReport e = eval_Elim(p.state, p.s, LimitMode::strict(tol));
        if (!e.value) {
            o.detail << p.label << " infeasible (violation " << f(e.constraint_violation) << " > " << f(tol)
                     << ", normal " << f(e.terms.at("normal")) << "); ";
            continue;
        }
        const SurfaceFields fields = sample_surface_fields(p.s, *p.state.mesh);
        const CovariantDerivative d = covariant_derivative_qperp(p.state, fields);
        double grad_sq = 0.0;
        for (std::size_t i = 0; i < d.values.size(); ++i) grad_sq += fields.weights[i] * d.values[i].squaredNorm();
        const double bound = 5e-7 * std::max(1.0, grad_sq);
        const double normal = e.terms.at("normal");
        o.require(normal <= bound, p.label + " normal " + f(normal) + " <= " + f(bound));
        ++checked;
    }
    o.require(checked >= 5, "feasible states checked: " + std::to_string(checked));
}

// Two identical CLI runs must write identical bytes.
void ac9(Outcome& o)
{
    const fs::path root = fs::temp_directory_path() / "thinlimit_acceptance_ac9";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "euclid.json";
    std::ofstream(cfg) << R"({"scenario":{"family":"euclid_plate"},"mesh":{"resolution":8,"normal_resolution":3},)"
                       << R"("h":0.1,"h_list":[0.2,0.1,0.05],"seed":3})";
    const fs::path rod = root / "rod.json";
    std::ofstream(rod) << R"({"scenario":{"family":"rod","rod_curvature":[1.0,0.5],"torsion":0.3},"rod":{"steps":400}})";

    const std::vector<std::pair<std::string, fs::path>> commands{
        {"check", cfg}, {"reduce", cfg}, {"full3d", cfg}, {"rod", rod}, {"gamma", cfg}};
    for (const auto& [cmd, file] : commands) {
        std::vector<fs::path> dirs;
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = root / (cmd + std::to_string(run));
            const std::string line = std::string("\"") + THINLIMIT_CLI_PATH + "\" " + cmd + " --scenario \"" +
                                     file.string() + "\" --out \"" + dir.string() + "\" > \"" +
                                     (root / (cmd + std::to_string(run) + ".stdout")).string() + "\" 2>/dev/null";
            const int rc = std::system(line.c_str());
            o.require(rc == 0, cmd + " run " + std::to_string(run) + " exit " + std::to_string(rc));
            dirs.push_back(dir);
        }
        int files = 0;
        bool same = true;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const fs::path other = dirs[1] / entry.path().filename();
            std::ifstream a(entry.path(), std::ios::binary), b(other, std::ios::binary);
            const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
            if (!b || sa != sb) same = false;
            ++files;
        }
        o.require(same && files > 0, cmd + ": " + std::to_string(files) + " files identical");
    }
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
    std::set<std::string> only(argv + 1, argv + argc);
    bool all = true;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && !only.count(name)) continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << "  (" << f(seconds_since(t0)) << " s) "
                  << o.detail.str() << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
