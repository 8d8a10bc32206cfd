#include "commands.hpp"

#include "eitlab/config.hpp"
#include "eitlab/dtn.hpp"
#include "eitlab/errors.hpp"
#include "eitlab/fem.hpp"
#include "eitlab/geometry.hpp"
#include "eitlab/green.hpp"
#include "eitlab/io.hpp"
#include "eitlab/mesh.hpp"
#include "eitlab/probes.hpp"
#include "eitlab/shape_deriv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>

namespace eitlab::cli {
namespace {

using nlohmann::json;

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> mesh_h;
    std::optional<int> levels;
};

// Thrown with a stage name so that failures can be reported as "stage: message".
struct StageError {
    std::string stage;
    std::string message;
    int code;
};

RunConfig load(const Overrides& o) {
    RunConfig cfg = load_config(o.config);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.mesh_h) {
        if (!(*o.mesh_h > 0.0)) throw ConfigError("--mesh-h must be positive");
        cfg.mesh.target_h = *o.mesh_h;
    }
    if (o.levels) {
        if (*o.levels < 1) throw ConfigError("--levels must be at least 1");
        cfg.mesh.levels = *o.levels;
    }
    return cfg;
}

const PiecewiseConductivity& require_base(const RunConfig& cfg) {
    if (!cfg.base) throw ConfigError("config has no [inclusion] section");
    return *cfg.base;
}

// Level 0 is meshed at target_h; each further level is a uniform refinement.
std::vector<TriMesh> mesh_ladder(const RunConfig& cfg, MeshReport* report = nullptr) {
    MeshOptions opts;
    opts.target_h = cfg.mesh.target_h;
    opts.grading = cfg.mesh.grading;
    std::vector<TriMesh> meshes;
    meshes.push_back(triangulate(cfg.omega, require_base(cfg).polygon, opts, report));
    for (int l = 1; l < cfg.mesh.levels; ++l) meshes.push_back(refine(meshes.back()));
    return meshes;
}

double level_h(const RunConfig& cfg, int level) { return std::ldexp(cfg.mesh.target_h, -level); }

PerturbationPath cli_path(const RunConfig& cfg, const TriMesh& mesh) {
    const PiecewiseConductivity& base = require_base(cfg);
    if (!cfg.path.vertex_shift.empty()) {
        if (cfg.path.vertex_shift.size() != base.polygon.size())
            throw ConfigError("path.vertex_shift needs one displacement per inclusion vertex");
        return make_path(base, cfg.path.vertex_shift, cfg.path.dk, mesh, cfg.path.taper);
    }
    if (cfg.target) return make_path(base, *cfg.target, mesh, cfg.path.taper);
    return make_path(base, std::vector<Vec2>(base.polygon.size(), Vec2{}), cfg.path.dk, mesh, cfg.path.taper);
}

std::string file_tag(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '/' || c == ' ') c = '_';
    return s;
}

json admissibility_json(const PiecewiseConductivity& c, const RunConfig& cfg) {
    const AdmissibilityReport rep = validate_polygon(c.polygon, cfg.omega, cfg.pi);
    json clauses = json::array();
    for (const AdmissibilityClause& cl : rep.clauses)
        clauses.push_back({{"name", cl.name}, {"passed", cl.passed}, {"value", cl.value}, {"bound", cl.bound}});
    const bool k_ok = validate_conductivity(c.k, cfg.pi);
    return {{"admissible", rep.admissible() && k_ok},
            {"polygon_admissible", rep.admissible()},
            {"conductivity_admissible", k_ok},
            {"failed", rep.failed()},
            {"clauses", clauses}};
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j, std::ostream& out) {
    auto f = open_output(cfg.out_dir, name);
    f << j.dump(2) << '\n';
    out << j.dump(2) << '\n';
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    json report;
    bool ok = true;
    report["inclusion"] = admissibility_json(require_base(cfg), cfg);
    ok = ok && report["inclusion"]["admissible"].get<bool>();
    if (cfg.target) {
        report["target"] = admissibility_json(*cfg.target, cfg);
        ok = ok && report["target"]["admissible"].get<bool>();
    }
    report["admissible"] = ok;
    report["prior"] = cfg.pi.to_map();
    write_json(cfg, "validate.json", report, out);
    if (!ok) {
        for (const char* which : {"inclusion", "target"}) {
            if (!report.contains(which)) continue;
            for (const auto& name : report[which]["failed"]) err << which << ": failed clause " << name.get<std::string>() << '\n';
            if (!report[which]["conductivity_admissible"].get<bool>()) err << which << ": failed clause conductivity\n";
        }
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_mesh(const RunConfig& cfg, std::ostream& out) {
    MeshReport rep;
    const auto meshes = mesh_ladder(cfg, &rep);
    json levels = json::array();
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = meshes[l];
        auto f = open_output(cfg.out_dir, "mesh_L" + std::to_string(l) + ".txt");
        write_mesh(f, m);
        levels.push_back({{"level", l},
                          {"target_h", level_h(cfg, static_cast<int>(l))},
                          {"nodes", m.num_nodes()},
                          {"triangles", m.num_triangles()},
                          {"boundary_nodes", m.boundary_nodes().size()},
                          {"h_max", m.h_max()},
                          {"min_angle_deg", m.min_angle_deg()}});
    }
    json j{{"levels", levels},
           {"steiner_points", rep.steiner_points},
           {"exempt_triangles", rep.exempt_triangles},
           {"bad_triangles", rep.bad_triangles}};
    write_json(cfg, "mesh.json", j, out);
    return kExitOk;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
    const auto meshes = mesh_ladder(cfg);
    const PiecewiseConductivity& base = require_base(cfg);
    json levels = json::array();
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = meshes[l];
        const DirichletSolver solver(m, base);
        json traces = json::array();
        for (const std::string& mode : cfg.traces) {
            const FemSolution sol = solve_dirichlet(solver, trace_mode(m, mode));
            auto f = open_output(cfg.out_dir, "solution_L" + std::to_string(l) + "_" + file_tag(mode) + ".csv");
            write_nodal_csv(f, m, sol.u);
            const InterfaceJumpReport jumps = interface_jumps(sol, base.k);
            traces.push_back({{"trace", mode},
                              {"energy", sol.energy()},
                              {"residual", sol.residual},
                              {"max_principle_defect", sol.max_principle_defect},
                              {"max_tangential_jump", jumps.max_tangential_jump},
                              {"l2_flux_defect", jumps.l2_flux_defect}});
        }
        levels.push_back({{"level", l}, {"target_h", level_h(cfg, static_cast<int>(l))}, {"traces", traces}});
    }
    write_json(cfg, "solve.json", {{"levels", levels}}, out);
    return kExitOk;
}

int cmd_dtn(const RunConfig& cfg, std::ostream& out) {
    const auto meshes = mesh_ladder(cfg);
    const PiecewiseConductivity& base = require_base(cfg);
    json levels = json::array();
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = meshes[l];
        const DirichletSolver solver(m, base);
        DtnMatrix L;
        try {
            L = assemble_dtn(solver);
        } catch (const Error& e) {
            throw StageError{"dtn assembly", e.what(), kExitFailure};
        }
        // The gamma = 1 map on the same mesh, written in the same format for comparison.
        const std::string tag = "level " + std::to_string(l);
        auto f = open_output(cfg.out_dir, "dtn_L" + std::to_string(l) + ".txt");
        write_dtn(f, L, tag);
        auto f0 = open_output(cfg.out_dir, "dtn_homogeneous_L" + std::to_string(l) + ".txt");
        write_dtn(f0, assemble_dtn_homogeneous(m), tag);
        const BoundaryTrace phi = trace_mode(m, cfg.traces.front());
        const double pair = pairing(L, phi, phi);
        const double energy = solve_dirichlet(solver, phi).energy();
        const double scale = std::max(std::abs(pair), std::abs(energy));
        const DtnStructure st = check_structure(L);
        levels.push_back({{"level", l},
                          {"target_h", level_h(cfg, static_cast<int>(l))},
                          {"k", base.k},
                          {"size", L.size()},
                          {"trace", cfg.traces.front()},
                          {"pairing", pair},
                          {"energy", energy},
                          {"energy_identity_defect", scale == 0.0 ? 0.0 : std::abs(pair - energy) / scale},
                          {"asymmetry", st.asymmetry},
                          {"max_row_sum", st.max_row_sum},
                          {"min_mean_zero_eig", st.min_mean_zero_eig}});
    }
    write_json(cfg, "dtn.json", {{"levels", levels}, {"half_norm", kHalfNormRealization}}, out);
    return kExitOk;
}

double relative_error(double a, double ref) {
    if (a == ref) return 0.0;
    if (ref == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(a - ref) / std::abs(ref);
}

int cmd_derivative_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto meshes = mesh_ladder(cfg);
    auto table = open_output(cfg.out_dir, "derivative_check.csv");
    table << "level,mesh_h,phi,psi,analytic,fd,rel_error\n";
    json levels = json::array();
    double final_error = 0.0;
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = meshes[l];
        const PerturbationPath path = cli_path(cfg, m);
        const DirichletSolver solver(m, path.base);
        std::vector<BoundaryTrace> traces;
        std::vector<FemSolution> sols;
        for (const std::string& mode : cfg.traces) {
            traces.push_back(trace_mode(m, mode));
            sols.push_back(solve_dirichlet(solver, traces.back()));
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < traces.size(); ++i) {
            for (std::size_t j = i; j < traces.size(); ++j) {
                const double a = dF_dt0_parts(path, sols[i], sols[j]).total();
                double fd = 0.0;
                try {
                    fd = dF_dt_fd(path, m, 0.0, traces[i], traces[j], cfg.path.dt);
                } catch (const FlowDegenerate& e) {
                    throw StageError{"finite differences", e.what(), kExitFailure};
                }
                const double e = relative_error(a, fd);
                worst = std::max(worst, e);
                table << l << ',' << level_h(cfg, static_cast<int>(l)) << ',' << cfg.traces[i] << ',' << cfg.traces[j]
                      << ',' << a << ',' << fd << ',' << e << '\n';
            }
        }
        levels.push_back({{"level", l}, {"target_h", level_h(cfg, static_cast<int>(l))}, {"max_rel_error", worst}});
        final_error = worst;
    }
    const bool pass = final_error <= cfg.path.threshold;
    write_json(cfg, "derivative_check.json",
               {{"levels", levels}, {"threshold", cfg.path.threshold}, {"dt", cfg.path.dt}, {"pass", pass}}, out);
    if (!pass) {
        err << "derivative-check: final-level relative error " << final_error << " exceeds threshold "
            << cfg.path.threshold << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_green_check(const RunConfig& cfg, std::ostream& out) {
    const PiecewiseConductivity& base = require_base(cfg);
    const Domain omega0 = green_domain(cfg.omega, cfg.pi);
    const bool with_path = !cfg.path.vertex_shift.empty() || cfg.target || cfg.path.dk != 0.0;
    std::vector<LocalBehavior> rows;
    json ladder = json::array();
    std::optional<GrowthTable> growth;
    for (int jexp : cfg.green.ladder) {
        const double r = std::ldexp(cfg.pi.d0, -jexp);
        const Vec2 y = ladder_source(base.polygon, cfg.green.side, r, cfg.pi);
        const TriMesh m = triangulate(omega0, base.polygon, ladder_mesh_options(y, r, cfg.green.target_h));
        const GreenSolution gs = GreenSolver(m, base, omega0).solve(y);
        rows.push_back(local_behavior_check(gs, cfg.green.side, r, cfg.pi));
        json entry{{"r", r}, {"ratio", rows.back().ratio}, {"defect", rows.back().defect},
                   {"source_flux", gs.source_flux()}};
        if (with_path) entry["S_yy"] = S_functional(gs, gs, cli_path(cfg, m));
        ladder.push_back(entry);
        if (!growth && !cfg.green.growth.empty()) growth = global_growth_probe(gs, cfg.green.growth);
    }
    {
        auto f = open_output(cfg.out_dir, "green_local.csv");
        write_local_csv(f, rows);
    }
    json j{{"coefficient", 2.0 / (base.k + 1.0)}, {"ladder", ladder}};
    if (growth) {
        auto f = open_output(cfg.out_dir, "green_growth.csv");
        write_growth_csv(f, *growth);
        j["growth_c"] = growth->c;
    }
    write_json(cfg, "green.json", j, out);
    return kExitOk;
}

int cmd_probe(const RunConfig& cfg, std::ostream& out) {
    const auto meshes = mesh_ladder(cfg);
    json levels = json::array();
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const TriMesh& m = meshes[l];
        const LowerBound lb = lower_bound_probe(cli_path(cfg, m), m);
        auto f = open_output(cfg.out_dir, "probe_traces_L" + std::to_string(l) + ".csv");
        f << "arclength,phi,psi\n";
        const auto s = m.boundary_arclength();
        for (Eigen::Index i = 0; i < lb.phi.size(); ++i)
            f << s[static_cast<std::size_t>(i)] << ',' << lb.phi(i) << ',' << lb.psi(i) << '\n';
        levels.push_back({{"level", l},
                          {"target_h", level_h(cfg, static_cast<int>(l))},
                          {"m0_hat", lb.m0_hat},
                          {"normalization", lb.normalization},
                          {"derivative", lb.derivative}});
    }
    write_json(cfg, "probe.json", {{"levels", levels}, {"half_norm", kHalfNormRealization}}, out);
    return kExitOk;
}

int cmd_campaign(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.seed) throw ConfigError("campaign needs a seed (campaign.seed or --seed)");
    CampaignConfig cc;
    cc.omega = cfg.omega;
    cc.base = require_base(cfg);
    cc.pi = cfg.pi;
    cc.eps_ladder = cfg.campaign.eps;
    cc.samples = cfg.campaign.samples;
    cc.mesh_ladder = cfg.campaign.mesh_ladder;
    cc.seed = *cfg.seed;
    cc.delta0 = cfg.campaign.delta0;
    const CampaignResult res = run_campaign(cc);
    {
        auto f = open_output(cfg.out_dir, "records.csv");
        write_records_csv(f, res.rows);
    }
    {
        auto f = open_output(cfg.out_dir, "summary.json");
        write_campaign_summary(f, res);
    }
    write_campaign_summary(out, res);
    return res.failures ? kExitFailure : kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Polygonal-inclusion conductivity experiments"};
    app.require_subcommand(1);
    Overrides o;
    std::uint64_t seed = 0;
    double mesh_h = 0.0;
    int levels = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "config file")->required();
        sub->add_option("--out", o.out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--mesh-h", mesh_h, "mesh size (overrides mesh.target_h)");
        sub->add_option("--levels", levels, "number of mesh levels (overrides mesh.levels)");
    };
    const std::vector<std::pair<std::string, std::string>> names{
        {"validate", "check admissibility of the configured inclusions"},
        {"mesh", "triangulate and write the mesh ladder"},
        {"solve", "solve the forward problem for the configured traces"},
        {"dtn", "assemble and write the discrete DtN map"},
        {"derivative-check", "compare the analytic derivative with finite differences"},
        {"green-check", "near-field and growth checks of the Green function"},
        {"probe", "lower-bound probe of the derivative operator"},
        {"campaign", "sampled stability campaign"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : names) {
        subs.push_back(app.add_subcommand(name, help));
        add_common(subs.back());
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }
    const CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--seed")) o.seed = seed;
    if (chosen->count("--mesh-h")) o.mesh_h = mesh_h;
    if (chosen->count("--levels")) o.levels = levels;
    const std::string name = chosen->get_name();

    try {
        const RunConfig cfg = load(o);
        if (name == "validate") return cmd_validate(cfg, out, err);
        if (name == "mesh") return cmd_mesh(cfg, out);
        if (name == "solve") return cmd_solve(cfg, out);
        if (name == "dtn") return cmd_dtn(cfg, out);
        if (name == "derivative-check") return cmd_derivative_check(cfg, out, err);
        if (name == "green-check") return cmd_green_check(cfg, out);
        if (name == "probe") return cmd_probe(cfg, out);
        if (name == "campaign") return cmd_campaign(cfg, out);
    } catch (const StageError& e) {
        err << name << ": " << e.stage << ": " << e.message << '\n';
        return e.code;
    } catch (const ConfigError& e) {
        err << name << ": config: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << name << ": " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << name << ": unexpected: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace eitlab::cli
