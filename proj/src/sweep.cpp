#include "lomach/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lomach/constraint.hpp"
#include "lomach/engine.hpp"
#include "lomach/errors.hpp"
#include "lomach/lift.hpp"
#include "lomach/norms.hpp"
#include "lomach/regularize.hpp"

namespace lomach {

namespace {

using json = nlohmann::ordered_json;

int worker_count() {
    const char* env = std::getenv("LOMACH_WORKERS");
    if (!env) return 1;
    int w = std::atoi(env);
    return w < 1 ? 1 : (w > 64 ? 64 : w);
}

void fill_row(SweepRow& row, const Scenario& s, const RegularizationResult& reg,
              double T_prime, const RunManifest& mf, std::size_t row_index) {
    const double eps = row.epsilon;
    const double delta = row.delta;
    row.relaxed_res = relaxed_residual(reg);

    auto L = lift(reg, delta, mf.gamma);
    row.m_linf = L.report.m_linf;
    row.r_tilde_gap_linf = L.report.r_tilde_linf;
    auto sres = subsolution_residual(L, reg);
    row.mass_res = sres.mass_res;
    row.momentum_res = sres.momentum_res;
    row.lift_bound_ok = lift_bound_check(L, reg.u_eps, eps).pass;

    // Relaxed state on the common window.
    ScalarField rho0(L.rho.restricted_to(T_prime));
    VectorField V0(L.V.restricted_to(T_prime));
    SymTensorField R_total = L.R_tilde;
    R_total.axpy(1.0, reg.R_eps);
    SymTensorField R0(R_total.restricted_to(T_prime));
    const GridSpec& gw = rho0.grid();

    double r_min = 1e300, r_max = 0.0;
    for (double v : rho0.raw()) {
        r_min = std::min(r_min, v);
        r_max = std::max(r_max, v);
    }
    double Lambda = std::sqrt(std::max(r_max, 1.0 / r_min)) * (1.0 + 1e-9);
    SubsolutionState st{rho0, V0, compute_U0(rho0, V0), R0,
                        std::max(Lambda, 1.0 + 1e-9)};
    validate_state(st);

    EngineConfig cfg;
    cfg.seed = mf.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(row_index + 1);
    auto [pair, log] = run_iteration(st, mf.budget, mf.trace_target, cfg);
    row.trace_fraction = log.fraction;
    row.accepted_steps = log.accepted_steps;
    row.strict_margin = check_strict(st, pair).min_margin;
    auto l2 = check_l2(st, pair);
    row.l2_lhs = l2.lhs;
    row.l2_rhs = l2.rhs;
    row.energy_ratio = energy_ratio(st, pair).ratio;
    row.trace_r0 = trace_r0_integral(st);

    // Norms of the limit quantities, all on the common window.
    VectorField u_w(s.u.restricted_to(T_prime));
    VectorField v_w(L.v.restricted_to(T_prime));

    ScalarField rho_gap = rho0;
    for (double& v : rho_gap.raw()) v -= 1.0;
    row.rho_c0_gap = norm(rho_gap, NormKind::C0);

    VectorField m_field = V0;
    m_field.axpy(1.0, pair.V_tilde);

    VectorField vhat(gw, "vhat");
    for (int t = 0; t < gw.slices(); ++t)
        for (int d = 0; d < gw.n; ++d)
            for (std::size_t q = 0; q < gw.points(); ++q)
                vhat.at(t, d, q) = m_field.at(t, d, q) / rho0.at(t, 0, q);

    VectorField diff = m_field;
    diff.axpy(-1.0, u_w);
    row.momentum_l2_gap = norm(diff, NormKind::L2);

    VectorField sdiff(gw);
    for (int t = 0; t < gw.slices(); ++t)
        for (int d = 0; d < gw.n; ++d)
            for (std::size_t q = 0; q < gw.points(); ++q)
                sdiff.at(t, d, q) =
                    std::sqrt(rho0.at(t, 0, q)) * vhat.at(t, d, q) - u_w.at(t, d, q);
    row.sqrt_momentum_l2_gap = norm(sdiff, NormKind::L2);

    VectorField vdiff = vhat;
    vdiff.axpy(-1.0, v_w);
    double vn = norm(vdiff, NormKind::L2);
    row.vhat_minus_v_l2sq = vn * vn;

    ScalarField pi_w(reg.pi_eps.restricted_to(T_prime));
    auto weak = compressible_weak_residual(rho0, m_field, pi_w, mf.test_modes);
    row.weak_mass_defect = weak.mass_defect;
    row.weak_momentum_defect = weak.momentum_defect;

    row.pairings = initial_pairings(m_field, s.u0, mf.test_modes);
}

}  // namespace

double measure_delta0(const RegularizationResult& reg, double gamma) {
    double delta = 0.5;
    for (int j = 0; j < 25; ++j, delta *= 0.5) {
        try {
            auto L = lift(reg, delta, gamma);
            if (L.report.lambda_min_total > 0.0) return delta;
        } catch (const std::exception&) {
            // infeasible at this delta; keep descending the ladder
        }
    }
    return 0.0;
}

SweepReport run_sweep(const RunManifest& manifest) {
    manifest.validate();
    SweepReport rep;
    rep.manifest = manifest;
    rep.manifest_digest = manifest_hash(manifest);

    Scenario s = make_analytic(manifest.scenario, manifest.grid, manifest.params);
    double eps_max = 0.0;
    for (double e : manifest.epsilons) eps_max = std::max(eps_max, e);
    const double T_prime = manifest.grid.T - 2.0 * eps_max;

    // Regularization and the delta ladder once per epsilon, sequentially.
    const std::size_t ne = manifest.epsilons.size();
    std::vector<std::optional<RegularizationResult>> regs(ne);
    std::vector<std::string> reg_errors(ne);
    std::vector<double> delta0s(ne, 0.0);
    for (std::size_t i = 0; i < ne; ++i) {
        try {
            regs[i] = regularize(s, manifest.epsilons[i]);
            delta0s[i] = measure_delta0(*regs[i], manifest.gamma);
        } catch (const std::exception& e) {
            reg_errors[i] = e.what();
        }
    }

    struct Cell {
        std::size_t ei;
        double delta;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < ne; ++i)
        for (double d : manifest.deltas[i]) cells.push_back({i, d});
    rep.rows.resize(cells.size());

    auto work = [&](std::size_t ci) {
        SweepRow& row = rep.rows[ci];
        row.epsilon = manifest.epsilons[cells[ci].ei];
        row.delta = cells[ci].delta;
        row.delta0 = delta0s[cells[ci].ei];
        row.delta_le_delta0 = row.delta0 > 0.0 && row.delta <= row.delta0;
        try {
            if (!regs[cells[ci].ei]) throw PreconditionViolated(reg_errors[cells[ci].ei]);
            fill_row(row, s, *regs[cells[ci].ei], T_prime, manifest, ci);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };

    const int workers = worker_count();
    if (workers <= 1 || cells.size() <= 1) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) work(ci);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t ci = next.fetch_add(1); ci < cells.size();
                     ci = next.fetch_add(1))
                    work(ci);
            });
        for (auto& th : pool) th.join();
    }
    return rep;
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw InsufficientSpan("fit_rate: need at least 3 samples");
    double x_min = 1e300, x_max = 0.0;
    for (double v : x) {
        if (!(v > 0)) throw InsufficientSpan("fit_rate: abscissae must be positive");
        x_min = std::min(x_min, v);
        x_max = std::max(x_max, v);
    }
    if (!(x_max >= 4.0 * x_min))
        throw InsufficientSpan("fit_rate: abscissae span less than a factor 4");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        // flat data (including exact zeros) fits slope 0; clamp the log
        ly[i] = y[i] > 0 ? std::log(y[i]) : -745.0;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    RateFit f;
    f.slope = sxy / sxx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = my + f.slope * (lx[i] - mx);
        ss_res += (ly[i] - fit) * (ly[i] - fit);
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    f.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return f;
}

namespace {

json row_to_json(const SweepRow& r) {
    json j;
    j["epsilon"] = r.epsilon;
    j["delta"] = r.delta;
    j["delta0"] = r.delta0;
    j["delta_le_delta0"] = r.delta_le_delta0;
    j["rho_c0_gap"] = r.rho_c0_gap;
    j["momentum_l2_gap"] = r.momentum_l2_gap;
    j["sqrt_momentum_l2_gap"] = r.sqrt_momentum_l2_gap;
    j["vhat_minus_v_l2sq"] = r.vhat_minus_v_l2sq;
    j["m_linf"] = r.m_linf;
    j["r_tilde_gap_linf"] = r.r_tilde_gap_linf;
    j["relaxed_res"] = r.relaxed_res;
    j["mass_res"] = r.mass_res;
    j["momentum_res"] = r.momentum_res;
    j["weak_mass_defect"] = r.weak_mass_defect;
    j["weak_momentum_defect"] = r.weak_momentum_defect;
    j["trace_fraction"] = r.trace_fraction;
    j["energy_ratio"] = r.energy_ratio;
    j["strict_margin"] = r.strict_margin;
    j["l2_lhs"] = r.l2_lhs;
    j["l2_rhs"] = r.l2_rhs;
    j["trace_r0"] = r.trace_r0;
    j["accepted_steps"] = r.accepted_steps;
    j["lift_bound_ok"] = r.lift_bound_ok;
    j["error"] = r.error;
    j["pairings"] = json::array();
    for (const auto& p : r.pairings)
        j["pairings"].push_back(json{{"k", {p.k[0], p.k[1], p.k[2]}}, {"value", p.value}});
    return j;
}

SweepRow row_from_json(const json& j) {
    SweepRow r;
    r.epsilon = j.at("epsilon").get<double>();
    r.delta = j.at("delta").get<double>();
    r.delta0 = j.at("delta0").get<double>();
    r.delta_le_delta0 = j.at("delta_le_delta0").get<bool>();
    r.rho_c0_gap = j.at("rho_c0_gap").get<double>();
    r.momentum_l2_gap = j.at("momentum_l2_gap").get<double>();
    r.sqrt_momentum_l2_gap = j.at("sqrt_momentum_l2_gap").get<double>();
    r.vhat_minus_v_l2sq = j.at("vhat_minus_v_l2sq").get<double>();
    r.m_linf = j.at("m_linf").get<double>();
    r.r_tilde_gap_linf = j.at("r_tilde_gap_linf").get<double>();
    r.relaxed_res = j.at("relaxed_res").get<double>();
    r.mass_res = j.at("mass_res").get<double>();
    r.momentum_res = j.at("momentum_res").get<double>();
    r.weak_mass_defect = j.at("weak_mass_defect").get<double>();
    r.weak_momentum_defect = j.at("weak_momentum_defect").get<double>();
    r.trace_fraction = j.at("trace_fraction").get<double>();
    r.energy_ratio = j.at("energy_ratio").get<double>();
    r.strict_margin = j.at("strict_margin").get<double>();
    r.l2_lhs = j.at("l2_lhs").get<double>();
    r.l2_rhs = j.at("l2_rhs").get<double>();
    r.trace_r0 = j.at("trace_r0").get<double>();
    r.accepted_steps = j.at("accepted_steps").get<int>();
    r.lift_bound_ok = j.at("lift_bound_ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    for (const auto& pj : j.at("pairings")) {
        ModePairing p;
        for (int d = 0; d < 3; ++d) p.k[d] = pj.at("k").at(d).get<int>();
        p.value = pj.at("value").get<double>();
        r.pairings.push_back(p);
    }
    return r;
}

}  // namespace

std::string report_to_json(const SweepReport& rep) {
    json j;
    j["manifest"] = json::parse(manifest_to_json(rep.manifest));
    j["manifest_digest"] = rep.manifest_digest;
    j["rows"] = json::array();
    for (const auto& r : rep.rows) j["rows"].push_back(row_to_json(r));
    return j.dump(2) + "\n";
}

SweepReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("report parse: ") + e.what());
    }
    SweepReport rep;
    rep.manifest = manifest_from_json(j.at("manifest").dump());
    rep.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& rj : j.at("rows")) rep.rows.push_back(row_from_json(rj));
    return rep;
}

std::string report_to_csv(const SweepReport& rep) {
    std::ostringstream out;
    out << "# one row per (epsilon, delta) cell; norms on the common time window;\n"
           "# *_defect are worst weak-form pairings, lift_bound_ok/delta_le_delta0 are\n"
           "# 0/1 flags, error is the first failed stage (empty on success)\n";
    out << "epsilon,delta,delta0,delta_le_delta0,rho_c0_gap,momentum_l2_gap,"
           "sqrt_momentum_l2_gap,vhat_minus_v_l2sq,m_linf,r_tilde_gap_linf,"
           "relaxed_res,mass_res,momentum_res,weak_mass_defect,weak_momentum_defect,"
           "trace_fraction,energy_ratio,strict_margin,l2_lhs,l2_rhs,trace_r0,"
           "accepted_steps,lift_bound_ok,error\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rep.rows) {
        out << num(r.epsilon) << ',' << num(r.delta) << ',' << num(r.delta0) << ','
            << (r.delta_le_delta0 ? 1 : 0) << ',' << num(r.rho_c0_gap) << ','
            << num(r.momentum_l2_gap) << ',' << num(r.sqrt_momentum_l2_gap) << ','
            << num(r.vhat_minus_v_l2sq) << ',' << num(r.m_linf) << ','
            << num(r.r_tilde_gap_linf) << ',' << num(r.relaxed_res) << ','
            << num(r.mass_res) << ',' << num(r.momentum_res) << ','
            << num(r.weak_mass_defect) << ',' << num(r.weak_momentum_defect) << ','
            << num(r.trace_fraction) << ',' << num(r.energy_ratio) << ','
            << num(r.strict_margin) << ',' << num(r.l2_lhs) << ',' << num(r.l2_rhs)
            << ',' << num(r.trace_r0) << ',' << r.accepted_steps << ','
            << (r.lift_bound_ok ? 1 : 0) << ',' << r.error << '\n';
    }
    return out.str();
}

void emit_report(const SweepReport& rep, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir + "/" + name, std::ios::binary);
        if (!f) throw IoError("cannot open " + dir + "/" + name);
        f << text;
        if (!f) throw IoError("short write to " + dir + "/" + name);
    };
    write("report.json", report_to_json(rep));
    write("report.csv", report_to_csv(rep));
    write("manifest.json", manifest_to_json(rep.manifest));
}

}  // namespace lomach
