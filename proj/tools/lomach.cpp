#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lomach/constraint.hpp"
#include "lomach/engine.hpp"
#include "lomach/errors.hpp"
#include "lomach/field_io.hpp"
#include "lomach/lift.hpp"
#include "lomach/manifest.hpp"
#include "lomach/regularize.hpp"
#include "lomach/scenario.hpp"
#include "lomach/sweep.hpp"

using namespace lomach;
using json = nlohmann::ordered_json;

namespace {

struct GridOpts {
    int n = 2;
    int N = 64;
    double T = 1.0;
    int steps = 32;

    GridSpec grid() const {
        GridSpec g;
        g.n = n;
        g.modes_per_axis = N;
        g.T = T;
        g.time_steps = steps;
        return g;
    }
};

void add_grid_opts(CLI::App* cmd, GridOpts& go) {
    cmd->add_option("--dim", go.n, "spatial dimension (2 or 3)");
    cmd->add_option("--modes", go.N, "collocation points per axis");
    cmd->add_option("--T", go.T, "final time");
    cmd->add_option("--steps", go.steps, "time steps");
}

ScenarioParams parse_params(const std::vector<std::string>& kvs) {
    ScenarioParams p;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--param expects key=value, got " + kv);
        p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return p;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    f << j.dump(2) << '\n';
}

/// Relaxed state on the common window, assembled the same way the sweep does.
SubsolutionState window_state(const LiftResult& L, const RegularizationResult& reg,
                              double t_window) {
    ScalarField rho0(L.rho.restricted_to(t_window));
    VectorField V0(L.V.restricted_to(t_window));
    SymTensorField R_total = L.R_tilde;
    R_total.axpy(1.0, reg.R_eps);
    SymTensorField R0(R_total.restricted_to(t_window));
    double r_min = 1e300, r_max = 0.0;
    for (double v : rho0.raw()) {
        r_min = std::min(r_min, v);
        r_max = std::max(r_max, v);
    }
    double Lambda = std::sqrt(std::max(r_max, 1.0 / r_min)) * (1.0 + 1e-9);
    SubsolutionState st{rho0, V0, compute_U0(rho0, V0), R0,
                        std::max(Lambda, 1.0 + 1e-9)};
    validate_state(st);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-Mach convex-integration pipeline"};
    app.require_subcommand(1);
    app.footer("Set LOMACH_WORKERS to run sweep rows on multiple threads.");

    GridOpts go;
    std::string name = "taylor_green_2d";
    std::vector<std::string> param_kvs;
    std::string out_dir = "out";
    double eps = 0.2, delta = 0.04, gamma = 1.4, target = 0.5;
    int budget = 40, test_modes = 4;
    std::uint64_t seed = 1;
    std::string manifest_path, in_path;

    auto* scen = app.add_subcommand("scenario", "list or build analytic scenarios");
    auto* scen_list = scen->add_subcommand("list", "print the catalog");
    auto* scen_build = scen->add_subcommand("build", "sample a scenario to field files");
    scen_build->add_option("--name", name, "catalog entry");
    scen_build->add_option("--param", param_kvs, "scenario parameter key=value");
    scen_build->add_option("--out", out_dir, "output directory");
    add_grid_opts(scen_build, go);

    auto* reg_cmd = app.add_subcommand("regularize", "mollify a scenario at one epsilon");
    reg_cmd->add_option("--name", name);
    reg_cmd->add_option("--param", param_kvs);
    reg_cmd->add_option("--eps", eps, "mollification scale");
    reg_cmd->add_option("--out", out_dir);
    add_grid_opts(reg_cmd, go);

    auto* lift_cmd = app.add_subcommand("lift", "compressible lift of a mollified state");
    lift_cmd->add_option("--name", name);
    lift_cmd->add_option("--param", param_kvs);
    lift_cmd->add_option("--eps", eps);
    lift_cmd->add_option("--delta", delta, "Mach-like parameter");
    lift_cmd->add_option("--gamma", gamma, "adiabatic exponent");
    lift_cmd->add_option("--out", out_dir);
    add_grid_opts(lift_cmd, go);

    auto* pert_cmd = app.add_subcommand("perturb", "run the greedy oscillation engine");
    pert_cmd->add_option("--name", name);
    pert_cmd->add_option("--param", param_kvs);
    pert_cmd->add_option("--eps", eps);
    pert_cmd->add_option("--delta", delta);
    pert_cmd->add_option("--gamma", gamma);
    pert_cmd->add_option("--budget", budget, "greedy step budget");
    pert_cmd->add_option("--target", target, "trace fraction target");
    pert_cmd->add_option("--seed", seed);
    pert_cmd->add_option("--out", out_dir);
    add_grid_opts(pert_cmd, go);

    std::vector<double> eps_list, delta_list;
    auto* sweep_cmd = app.add_subcommand("sweep", "full (epsilon, delta) sweep");
    sweep_cmd->add_option("--manifest", manifest_path, "manifest JSON (overrides flags)");
    sweep_cmd->add_option("--name", name);
    sweep_cmd->add_option("--param", param_kvs);
    sweep_cmd->add_option("--eps", eps_list, "epsilon list");
    sweep_cmd->add_option("--delta", delta_list, "delta list (applied per epsilon)");
    sweep_cmd->add_option("--gamma", gamma);
    sweep_cmd->add_option("--budget", budget);
    sweep_cmd->add_option("--target", target);
    sweep_cmd->add_option("--test-modes", test_modes, "weak-form |k| cap");
    sweep_cmd->add_option("--seed", seed);
    sweep_cmd->add_option("--out", out_dir, "run directory root");
    add_grid_opts(sweep_cmd, go);

    auto* verify_cmd = app.add_subcommand("verify", "run a manifest and check row flags");
    verify_cmd->add_option("--manifest", manifest_path)->required();

    auto* report_cmd = app.add_subcommand("report", "re-emit a stored report");
    report_cmd->add_option("--in", in_path, "report.json path")->required();
    report_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (scen_list->parsed()) {
            std::printf("taylor_green_2d  params: amplitude, drift_x1, drift_x2\n");
            std::printf("shear_2d         params: amplitude, mode\n");
            std::printf("beltrami_3d      params: a, b, c\n");
            return 0;
        }
        if (scen_build->parsed()) {
            auto s = make_analytic(name, go.grid(), parse_params(param_kvs));
            ensure_dir(out_dir);
            write_field(out_dir + "/u.f64", s.u);
            write_field(out_dir + "/pi.f64", s.pi);
            write_field(out_dir + "/u0.f64", s.u0);
            std::printf("wrote %s/{u,pi,u0}.f64\n", out_dir.c_str());
            return 0;
        }
        if (reg_cmd->parsed()) {
            auto s = make_analytic(name, go.grid(), parse_params(param_kvs));
            auto r = regularize(s, eps);
            ensure_dir(out_dir);
            write_field(out_dir + "/u_eps.f64", r.u_eps);
            write_field(out_dir + "/pi_eps.f64", r.pi_eps);
            write_field(out_dir + "/R_eps.f64", r.R_eps);
            write_json(out_dir + "/regularize.json",
                       json{{"epsilon", r.epsilon},
                            {"alpha_eps", r.alpha_eps},
                            {"u_l2_gap", r.report.u_l2_gap},
                            {"commutator_l1", r.report.commutator_l1},
                            {"lambda_min", r.report.lambda_min},
                            {"lambda_max", r.report.lambda_max},
                            {"relaxed_residual", relaxed_residual(r)}});
            std::printf("wrote %s/{u_eps,pi_eps,R_eps}.f64\n", out_dir.c_str());
            return 0;
        }
        if (lift_cmd->parsed()) {
            auto s = make_analytic(name, go.grid(), parse_params(param_kvs));
            auto r = regularize(s, eps);
            auto L = lift(r, delta, gamma);
            auto res = subsolution_residual(L, r);
            ensure_dir(out_dir);
            write_field(out_dir + "/rho.f64", L.rho);
            write_field(out_dir + "/m.f64", L.m);
            write_field(out_dir + "/v.f64", L.v);
            write_field(out_dir + "/V.f64", L.V);
            write_field(out_dir + "/R_tilde.f64", L.R_tilde);
            write_json(out_dir + "/lift.json",
                       json{{"delta", L.delta},
                            {"gamma", L.gamma},
                            {"rho_c0_gap", L.report.rho_c0_gap},
                            {"m_linf", L.report.m_linf},
                            {"m_l2", L.report.m_l2},
                            {"r_tilde_linf", L.report.r_tilde_linf},
                            {"lambda_min_total", L.report.lambda_min_total},
                            {"mass_res", res.mass_res},
                            {"momentum_res", res.momentum_res}});
            std::printf("wrote %s/{rho,m,v,V,R_tilde}.f64\n", out_dir.c_str());
            return 0;
        }
        if (pert_cmd->parsed()) {
            auto s = make_analytic(name, go.grid(), parse_params(param_kvs));
            auto r = regularize(s, eps);
            auto L = lift(r, delta, gamma);
            auto st = window_state(L, r, go.T - 2.0 * eps);
            EngineConfig cfg;
            cfg.seed = seed;
            auto [pair, log] = run_iteration(st, budget, target, cfg);
            ensure_dir(out_dir);
            write_field(out_dir + "/V_tilde.f64", pair.V_tilde);
            write_field(out_dir + "/U_tilde.f64", pair.U_tilde);
            std::ofstream steps(out_dir + "/steps.jsonl", std::ios::binary);
            for (const auto& rec : log.steps)
                steps << json{{"step", rec.step},
                              {"trace_before", rec.trace_before},
                              {"trace_after", rec.trace_after},
                              {"added_l1", rec.added_l1},
                              {"scale", rec.scale},
                              {"strict_margin", rec.strict_margin},
                              {"energy_ratio", rec.energy_ratio},
                              {"accepted", rec.accepted}}
                             .dump()
                      << '\n';
            std::printf("fraction %.6f after %d accepted steps\n", log.fraction,
                        log.accepted_steps);
            return 0;
        }
        if (sweep_cmd->parsed() || verify_cmd->parsed()) {
            RunManifest mf;
            if (!manifest_path.empty()) {
                mf = load_manifest(manifest_path);
            } else {
                mf.scenario = name;
                mf.params = parse_params(param_kvs);
                mf.grid = go.grid();
                mf.gamma = gamma;
                mf.epsilons = eps_list;
                for (std::size_t i = 0; i < eps_list.size(); ++i)
                    mf.deltas.push_back(delta_list);
                mf.seed = seed;
                mf.budget = budget;
                mf.trace_target = target;
                mf.test_modes = test_modes;
                mf.out_dir = out_dir;
            }
            auto rep = run_sweep(mf);
            if (sweep_cmd->parsed()) {
                const std::string dir = mf.out_dir + "/" + rep.manifest_digest;
                emit_report(rep, dir);
                std::printf("%zu rows -> %s\n", rep.rows.size(), dir.c_str());
                return 0;
            }
            int bad = 0;
            for (const auto& r : rep.rows) {
                bool ok = r.error.empty() && (!r.delta_le_delta0 || r.lift_bound_ok);
                if (!ok) ++bad;
                std::printf("eps %.4g delta %.4g: %s%s%s\n", r.epsilon, r.delta,
                            ok ? "ok" : "FAIL",
                            r.error.empty() ? "" : " ", r.error.c_str());
            }
            return bad == 0 ? 0 : 1;
        }
        if (report_cmd->parsed()) {
            std::ifstream f(in_path, std::ios::binary);
            if (!f) throw IoError("cannot open " + in_path);
            std::string text((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
            emit_report(report_from_json(text), out_dir);
            std::printf("re-emitted under %s\n", out_dir.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
