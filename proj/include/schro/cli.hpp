#pragma once

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "schro/charpoly.hpp"
#include "schro/config.hpp"
#include "schro/detail/random.hpp"
#include "schro/dynamics.hpp"
#include "schro/floquet.hpp"
#include "schro/highprec.hpp"
#include "schro/io.hpp"
#include "schro/model.hpp"
#include "schro/report.hpp"
#include "schro/velocity.hpp"

namespace schro {

namespace detail_cli {

inline void say(const RunConfig& cfg, const char* fmt, ...) {
    if (cfg.quiet) return;
    std::va_list ap;
    va_start(ap, fmt);
    std::vfprintf(stdout, fmt, ap);
    va_end(ap);
}

// Adds the check to the report and echoes one line per check so a terminal
// run shows the same pass/fail trail the JSON records.
inline void check(RunReport& rep, const RunConfig& cfg, const std::string& name, bool pass,
                  double value, double tol, const std::string& relation = "<=") {
    rep.add_check(name, pass, value, tol, relation);
    say(cfg, "  check %-46s %s  (value %.6g, tol %.6g)\n", name.c_str(),
        pass ? "PASS" : "FAIL", value, tol);
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

inline void write_text(const RunConfig& cfg, const std::string& name, const std::string& body) {
    const auto path = out_path(cfg, name);
    atomic_write(path, body);
    say(cfg, "  wrote %s\n", path.c_str());
}

inline std::string gp_prelude(const std::string& png) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 900,600\n";
    s += "set output '" + png + "'\n";
    return s;
}

// All reports share one layout; pipeline stage markers live under results.
inline const char* const report_schema_text = R"({
  "type": "object",
  "required": ["version", "command", "config", "results", "checks", "timings"],
  "additionalProperties": false,
  "properties": {
    "version": {"type": "string"},
    "command": {"type": "string"},
    "config": {"type": "object"},
    "results": {"type": "object"},
    "checks": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["name", "pass", "value", "tolerance", "relation"],
        "additionalProperties": false,
        "properties": {
          "name": {"type": "string"},
          "pass": {"type": "boolean"},
          "value": {"type": "number"},
          "tolerance": {"type": "number"},
          "relation": {"type": "string"}
        }
      }
    },
    "timings": {"type": "object"}
  }
})";

inline std::vector<double> default_time_grid(double t_max, int n) {
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i)
        ts.push_back(t_max * static_cast<double>(i) / static_cast<double>(n));
    return ts;
}

inline std::vector<double> default_mu_decade(double mu0, int n = 8) {
    std::vector<double> mus;
    mus.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        mus.push_back(mu0 * std::pow(10.0, static_cast<double>(i) / (n - 1)));
    return mus;
}

} // namespace detail_cli

// ---------------------------------------------------------------- constants

inline int cmd_constants(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const ConstantsLedger L = constants(pot, cfg.rho0);
    RunReport rep("constants", cfg);
    StageTimer timer(rep, "constants");

    say(cfg, "constants for p = %d potential, rho0 = %.12g\n", pot.p(), L.rho0);
    const std::pair<const char*, double> rows[] = {
        {"gamma", L.gamma},   {"Gamma", L.range},     {"eta0", L.eta0},
        {"C", L.C},           {"C_hat", L.C_hat},     {"lambda0", L.lambda0},
        {"mu0", L.mu0},       {"gamma0(lambda0)", L.gamma0(L.lambda0)},
        {"C2", L.C2},         {"C3", L.C3},
    };
    for (const auto& [name, value] : rows) say(cfg, "  %-16s %.12g\n", name, value);

    json& res = rep.results();
    res["p"] = pot.p();
    res["gamma"] = L.gamma;
    res["Gamma"] = L.range;
    res["rho0"] = L.rho0;
    res["eta0"] = L.eta0;
    res["C"] = L.C;
    res["C_hat"] = L.C_hat;
    res["lambda0"] = L.lambda0;
    res["mu0"] = L.mu0;
    res["gamma0_at_lambda0"] = L.gamma0(L.lambda0);
    res["C2"] = L.C2;
    res["C3"] = L.C3;
    res["requested_mu"] = cfg.mu;

    // A small gap pushes mu0 far beyond the (2/gamma)^{p/2} scale; surface
    // that so nobody points the perturbative commands at such a potential.
    const double gamma_scale = std::pow(2.0 / L.gamma, pot.p() / 2.0);
    res["two_over_gamma_pow_half_p"] = gamma_scale;
    res["mu0_exceeds_gamma_scale"] = L.mu0 > gamma_scale;
    if (L.gamma < 2.0 && L.mu0 > gamma_scale)
        say(cfg, "  note: small gap, mu0 = %.6g exceeds (2/gamma)^(p/2) = %.6g\n", L.mu0,
            gamma_scale);

    const bool mu_ok = cfg.mu >= L.mu0;
    check(rep, cfg, "requested mu >= mu0", mu_ok, cfg.mu, L.mu0, ">=");
    if (!mu_ok)
        std::fprintf(stderr,
                     "warning: mu = %.6g is below mu0 = %.6g; "
                     "perturbative velocity bounds do not apply at this coupling\n",
                     cfg.mu, L.mu0);

    rep.write(out_path(cfg, "constants_report.json"));
    say(cfg, "  wrote %s\n", out_path(cfg, "constants_report.json").c_str());
    return rep.all_passed() ? 0 : 2;
}

// -------------------------------------------------------------------- bands

inline int cmd_bands(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const double lambda = 1.0 / cfg.mu;
    RunReport rep("bands", cfg);
    StageTimer timer(rep, "bands");
    const int p = pot.p();

    say(cfg, "bands: p = %d, mu = %.6g (lambda = %.6g), M = %d\n", p, cfg.mu, lambda,
        cfg.nodes);
    const BandData bd = hermitian_bands(pot, lambda, cfg.nodes, cfg.rho0, cfg.threads);

    CsvBuilder csv;
    std::vector<std::string> head = {"x"};
    for (int l = 1; l <= p; ++l) head.push_back("zeta_" + std::to_string(l));
    for (int l = 1; l <= p; ++l) head.push_back("dzeta_" + std::to_string(l));
    csv.header(head);
    for (int n = 0; n < cfg.nodes; ++n) {
        std::vector<double> row = {bd.x[static_cast<std::size_t>(n)]};
        for (int l = 0; l < p; ++l) row.push_back(bd.zeta(n, l));
        for (int l = 0; l < p; ++l) row.push_back(bd.dzeta(n, l));
        csv.row(row);
    }
    write_text(cfg, "bands.csv", csv.str());

    std::string gp = gp_prelude("bands.png");
    gp += "set xlabel 'x'\nset ylabel 'zeta'\nplot ";
    for (int l = 0; l < p; ++l) {
        if (l) gp += ", \\\n     ";
        gp += "'bands.csv' using 1:" + std::to_string(l + 2) + " with lines title 'band " +
              std::to_string(l + 1) + "'";
    }
    gp += "\n";
    write_text(cfg, "bands.gp", gp);

    const double maxder = max_abs_derivative(bd);
    const double der_bound =
        2.0 * std::pow(lambda, p) / std::pow(pot.gap() / 2.0, p - 1);
    json& res = rep.results();
    res["lambda"] = lambda;
    res["max_abs_derivative"] = maxder;
    res["derivative_bound"] = der_bound;
    {
        json ranges = json::array();
        for (int l = 0; l < p; ++l) {
            double lo = bd.zeta(0, l), hi = bd.zeta(0, l);
            for (int n = 1; n < cfg.nodes; ++n) {
                lo = std::min(lo, bd.zeta(n, l));
                hi = std::max(hi, bd.zeta(n, l));
            }
            ranges.push_back({{"band", l + 1}, {"min", lo}, {"max", hi}});
        }
        res["band_ranges"] = ranges;
    }
    check(rep, cfg, "max |dzeta/dx| <= 2 lambda^p / (gamma/2)^(p-1)",
          maxder <= der_bound * (1.0 + 1e-12), maxder, der_bound);

    rep.write(out_path(cfg, "bands_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// ------------------------------------------------------------------- kernel

inline int cmd_kernel(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    RunReport rep("kernel", cfg);
    StageTimer timer(rep, "kernel");
    const int p = pot.p();

    const double vg = max_group_velocity(pot, cfg.mu);
    // auto horizon: the front has crossed ~2 blocks, so the kernel shows both
    // the ballistic core and the exponential tail at any coupling
    const double t = cfg.t != 0.0 ? cfg.t : 2.0 / std::max(vg, 1e-12);
    const bool auto_d = cfg.d_max <= 0;
    const int d_max =
        auto_d ? static_cast<int>(std::ceil(vg * std::abs(t))) + 40 : cfg.d_max;
    say(cfg, "kernel: p = %d, mu = %.6g, t = %.6g, d_max = %d, M = %d\n", p, cfg.mu, t,
        d_max, cfg.nodes);

    const std::vector<BlockKernel> ks =
        block_kernels(pot, cfg.mu, t, d_max, cfg.nodes, false, 1e-10, cfg.threads);
    const std::vector<BlockKernel> ks2 =
        block_kernels(pot, cfg.mu, t, d_max, 2 * cfg.nodes, false, 1e-10, cfg.threads);
    const double quad_diff = detail_dyn::max_entry_diff(ks, ks2);

    CsvBuilder csv;
    csv.header({"d", "op_norm", "frob_norm"});
    json entries = json::array();
    for (const BlockKernel& bk : ks) {
        csv.row({static_cast<double>(bk.d), operator_norm(bk.K), std::sqrt(bk.K.squaredNorm())});
        json rows = json::array();
        for (int r = 0; r < p; ++r) {
            json cols = json::array();
            for (int c = 0; c < p; ++c)
                cols.push_back({bk.K(r, c).real(), bk.K(r, c).imag()});
            rows.push_back(cols);
        }
        entries.push_back({{"d", bk.d}, {"K", rows}});
    }
    write_text(cfg, "kernel.csv", csv.str());
    write_text(cfg, "kernel_entries.json", json(entries).dump(2) + "\n");

    json& res = rep.results();
    res["t"] = t;
    res["d_max"] = d_max;
    res["group_velocity_blocks"] = vg;
    res["quadrature_doubling_diff"] = quad_diff;
    check(rep, cfg, "quadrature stable under doubling M", quad_diff <= 1e-10, quad_diff,
          1e-10);

    if (p == 2 && pot.at(1) == 1.0 && pot.at(2) == -1.0 && cfg.hopping == 1.0 &&
        cfg.mu >= 1.0) {
        double worst = 0.0;
        for (const BlockKernel& bk : ks) {
            const BlockKernel cl = block_kernel_p2_closed(cfg.mu, t, bk.d);
            worst = std::max(worst, (bk.K - cl.K).cwiseAbs().maxCoeff());
        }
        res["p2_closed_form_diff"] = worst;
        check(rep, cfg, "closed form agrees with quadrature", worst <= 1e-8, worst, 1e-8);
    }

    const double defect = unitarity_defect(ks);
    res["unitarity_defect"] = defect;
    if (auto_d) {
        check(rep, cfg, "unitarity defect", defect <= 1e-8, defect, 1e-8);
    } else {
        // A caller-chosen window may cut the cone; the defect then measures
        // truncation, not an error, so it is reported without a gate.
        say(cfg, "  unitarity defect %.6g (d_max fixed by caller, not asserted)\n", defect);
    }

    rep.write(out_path(cfg, "kernel_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// ------------------------------------------------------------------- evolve

inline int cmd_evolve(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    RunReport rep("evolve", cfg);
    StageTimer timer(rep, "evolve");
    const int p = pot.p();

    const double vg = max_group_velocity(pot, cfg.mu);
    // auto horizon: displacement of ~2 blocks, visible at any coupling
    const double t = cfg.t != 0.0 ? cfg.t : 2.0 / std::max(vg, 1e-12);
    const int half =
        cfg.sites > 0
            ? cfg.sites / 2
            : static_cast<int>(std::ceil(p * vg * 1.1 * std::abs(t))) + 300;
    say(cfg, "evolve: p = %d, mu = %.6g, t = %.6g, sites = %d, method = %s\n", p, cfg.mu,
        t, 2 * half + 1, cfg.method.c_str());

    const LatticeState psi0 = delta_state(half);
    const LatticeState psi = evolve(pot, cfg.mu, psi0, t, cfg.method, cfg.hopping);
    const Moments m = position_moments(psi, p);

    CsvBuilder csv;
    csv.header({"n", "block", "sublattice", "re", "im", "prob"});
    for (int n = -half; n <= half; ++n) {
        const auto [j, mm] = block_site(n, p);
        const cx a = psi.at(n);
        csv.row({static_cast<double>(n), static_cast<double>(j), static_cast<double>(mm),
                 a.real(), a.imag(), std::norm(a)});
    }
    write_text(cfg, "evolve.csv", csv.str());

    std::string gp = gp_prelude("evolve.png");
    gp += "set xlabel 'site n'\nset ylabel 'probability'\nset logscale y\n";
    gp += "plot 'evolve.csv' using 1:($6 + 1e-300) with lines notitle\n";
    write_text(cfg, "evolve.gp", gp);

    json& res = rep.results();
    res["t"] = t;
    res["half"] = half;
    res["mass"] = m.mass;
    res["mean_block"] = m.mean_block;
    res["rms_block"] = m.rms_block;
    res["mean_site"] = m.mean_site;
    res["rms_site"] = m.rms_site;
    res["group_velocity_blocks"] = vg;
    res["cone_blocks"] = vg * std::abs(t);

    const double drift = std::abs(psi.norm() - 1.0);
    check(rep, cfg, "norm drift", drift <= 1e-10, drift, 1e-10);

    if (cfg.method == "chebyshev" && 2 * half + 1 <= 1201) {
        const LatticeState ref = evolve(pot, cfg.mu, psi0, t, "eig", cfg.hopping);
        double worst = 0.0;
        for (int n = -half; n <= half; ++n)
            worst = std::max(worst, std::abs(psi.at(n) - ref.at(n)));
        res["chebyshev_vs_eig"] = worst;
        check(rep, cfg, "chebyshev matches eig", worst <= 1e-9, worst, 1e-9);
    }

    rep.write(out_path(cfg, "evolve_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// ---------------------------------------------------------------- lightcone

inline int cmd_lightcone(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const ConstantsLedger L = constants(pot, cfg.rho0);
    RunReport rep("lightcone", cfg);
    StageTimer timer(rep, "lightcone");

    const double vg = std::max(max_group_velocity(pot, cfg.mu), 1e-12);
    std::vector<double> ts = cfg.t_list;
    // auto horizon: the front travels 8 blocks, long enough for a clean
    // front fit at any coupling and short enough to stay above the
    // double-precision phase floor at strong coupling
    if (ts.empty()) ts = default_time_grid(cfg.t != 0.0 ? cfg.t : 8.0 / vg, 16);
    const double t_max = *std::max_element(ts.begin(), ts.end());
    const int d_max = cfg.d_max > 0
                          ? cfg.d_max
                          : static_cast<int>(std::ceil(vg * t_max)) + 80;
    say(cfg, "lightcone: mu = %.6g, %zu times up to %.6g, d_max = %d, eps = %.3g\n", cfg.mu,
        ts.size(), t_max, d_max, cfg.eps);

    const ConeProfile cp =
        cone_profile(pot, cfg.mu, ts, d_max, cfg.eps, cfg.nodes, cfg.threads);
    const double v_lr = L.C2 / cfg.mu;
    const FrontFit ff = fit_front_velocity(cp, v_lr);
    const double tail = tail_decay_rate(cp, 2.0 * std::max(ff.v, 1e-12));

    CsvBuilder cone_csv;
    cone_csv.header({"t", "d", "norm"});
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (int d = 0; d <= d_max; ++d)
            cone_csv.row({ts[i], static_cast<double>(d),
                          cp.norms(static_cast<int>(i), d)});
    write_text(cfg, "lightcone.csv", cone_csv.str());

    CsvBuilder front_csv;
    front_csv.header({"t", "d_front"});
    for (std::size_t i = 0; i < ts.size(); ++i)
        front_csv.row({ts[i], static_cast<double>(cp.d_front[i])});
    write_text(cfg, "lightcone_front.csv", front_csv.str());

    std::string gp = gp_prelude("lightcone.png");
    gp += "set xlabel 'block distance d'\nset ylabel 't'\nset cblabel 'log10 ||K||'\n";
    gp += "plot 'lightcone.csv' using 2:1:(log10($3 + 1e-300)) with image notitle, \\\n";
    gp += "     'lightcone_front.csv' using 2:1 with lines lw 2 lc 'white' title 'front'\n";
    write_text(cfg, "lightcone.gp", gp);

    json& res = rep.results();
    res["v_front"] = ff.v;
    res["v_front_stderr"] = ff.stderr_v;
    res["n_fit"] = ff.n_used;
    res["n_skipped"] = ff.n_skipped;
    res["eta_fit"] = cp.eta_fit;
    res["v_lr_bound"] = v_lr;
    res["mu0"] = L.mu0;
    {
        json df = json::array();
        for (int d : cp.d_front) df.push_back(d);
        res["d_front"] = df;
    }

    int violations = 0;
    for (std::size_t i = 7; i < cp.d_front.size(); ++i)
        if (cp.d_front[i] < cp.d_front[i - 1]) ++violations;
    check(rep, cfg, "front monotone past transient", violations == 0,
          static_cast<double>(violations), 0.0);
    check(rep, cfg, "eta_fit positive", cp.eta_fit > 0.0, cp.eta_fit, 0.0, ">");
    if (cfg.mu >= L.mu0)
        check(rep, cfg, "v_front <= C2/mu", ff.v <= v_lr, ff.v, v_lr);
    else
        say(cfg, "  mu below mu0: v_front bound not asserted (v_front %.6g, C2/mu %.6g)\n",
            ff.v, v_lr);
    if (std::isfinite(tail)) {
        res["tail_decay"] = tail;
        check(rep, cfg, "tail decay rate positive", tail > 0.0, tail, 0.0, ">");
    } else {
        res["tail_decay"] = "below_floor";
        say(cfg, "  tail mass below floor at every sampled time; decay check vacuous\n");
    }

    rep.write(out_path(cfg, "lightcone_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// --------------------------------------------------------------------- vasy

inline int cmd_vasy(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const ConstantsLedger L = constants(pot, cfg.rho0);
    RunReport rep("vasy", cfg);
    StageTimer timer(rep, "vasy");

    VelocityReport r;
    if (cfg.mu >= L.mu0) {
        VelocityOptions opt;
        opt.front = cfg.front;
        opt.direct = cfg.direct;
        opt.M = cfg.nodes;
        opt.eps = cfg.eps;
        opt.rho0 = cfg.rho0;
        opt.threads = cfg.threads;
        opt.method = cfg.method;
        say(cfg, "vasy: mu = %.6g (mu0 = %.6g), front = %d, direct = %d\n", cfg.mu, L.mu0,
            cfg.front ? 1 : 0, cfg.direct ? 1 : 0);
        r = build_velocity_report(pot, cfg.mu, opt);
    } else {
        // Below mu0 the band labeling behind the exact formula is undefined;
        // only the direct dynamical estimate remains meaningful.
        if (!cfg.direct)
            throw CouplingBelowThreshold(
                "vasy: mu below mu0; pass --direct for the dynamical estimate");
        say(cfg, "vasy: mu = %.6g below mu0 = %.6g, direct estimate only\n", cfg.mu, L.mu0);
        r.mu = cfg.mu;
        r.v_lr_bound = L.C2 / cfg.mu;
        const VAsyDirect vd = v_asy_direct(pot, cfg.mu, cfg.T, 0, cfg.method, cfg.hopping);
        r.v_asy_direct = vd.v;
        r.direct_drift = vd.drift;
    }

    json& res = rep.results();
    res["mu"] = r.mu;
    res["mu0"] = L.mu0;
    res["v_lr_bound"] = r.v_lr_bound;
    res["v_asy_exact_A"] = r.v_asy_exact_A;
    res["v_asy_exact_B"] = r.v_asy_exact_B;
    res["v_asy_exact_A_site"] = r.v_asy_exact_A_site;
    res["v_asy_exact_B_site"] = r.v_asy_exact_B_site;
    res["v_asy_upper"] = r.v_asy_upper;
    res["v_asy_bound"] = r.v_asy_bound;
    res["v_asy_direct"] = r.v_asy_direct;
    res["direct_drift"] = r.direct_drift;
    res["v_front"] = r.v_front;
    res["eta_fit"] = r.eta_fit;
    res["tail_decay"] = r.tail_decay;

    if (std::isfinite(r.v_asy_exact_A_site)) {
        check(rep, cfg, "exact (A, site) <= upper", r.v_asy_exact_A_site <= r.v_asy_upper,
              r.v_asy_exact_A_site, r.v_asy_upper);
        check(rep, cfg, "upper <= C3/mu^(p-1)", r.chain_ok, r.v_asy_upper, r.v_asy_bound);
        check(rep, cfg, "variant B <= variant A", r.v_asy_exact_B <= r.v_asy_exact_A * (1.0 + 1e-12),
              r.v_asy_exact_B, r.v_asy_exact_A);
        const AppendixACheck ac = check_appendix_a(r);
        check(rep, cfg, "exact (A) <= C2/mu", ac.exact_ok, r.v_asy_exact_A, r.v_lr_bound);
        res["margin_exact"] = ac.margin_exact;
        if (std::isfinite(ac.margin_direct)) res["margin_direct"] = ac.margin_direct;
    }
    if (std::isfinite(r.v_asy_direct)) {
        check(rep, cfg, "direct drift", r.direct_drift <= 0.02, r.direct_drift, 0.02);
        check(rep, cfg, "direct <= C2/mu", r.v_asy_direct <= r.v_lr_bound, r.v_asy_direct,
              r.v_lr_bound);
        res["margin_direct"] = (r.v_lr_bound - r.v_asy_direct) / r.v_lr_bound;
    }

    rep.write(out_path(cfg, "vasy_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// -------------------------------------------------------------------- sweep

inline int cmd_sweep(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const ConstantsLedger L = constants(pot, cfg.rho0);
    RunReport rep("sweep", cfg);
    StageTimer timer(rep, "sweep");
    const int p = pot.p();

    std::vector<double> mus = cfg.mu_list;
    if (mus.empty()) mus = default_mu_decade(L.mu0);
    say(cfg, "sweep: p = %d, %zu mu values in [%.6g, %.6g]\n", p, mus.size(),
        *std::min_element(mus.begin(), mus.end()),
        *std::max_element(mus.begin(), mus.end()));

    VelocityOptions opt;
    opt.front = cfg.front;
    opt.direct = cfg.direct;
    opt.M = cfg.nodes;
    opt.eps = cfg.eps;
    opt.rho0 = cfg.rho0;
    opt.threads = cfg.threads;
    opt.method = cfg.method;
    const SweepResult sw = scaling_sweep(pot, mus, opt);

    CsvBuilder csv;
    csv.header({"mu", "v_front", "v_lr_bound", "v_asy_exact_A", "v_asy_exact_B",
                "v_asy_upper", "v_asy_bound", "v_asy_direct"});
    for (const VelocityReport& r : sw.rows)
        csv.row({r.mu, r.v_front, r.v_lr_bound, r.v_asy_exact_A, r.v_asy_exact_B,
                 r.v_asy_upper, r.v_asy_bound, r.v_asy_direct});
    write_text(cfg, "sweep.csv", csv.str());

    std::string gp = gp_prelude("sweep.png");
    gp += "set logscale xy\nset xlabel 'mu'\nset ylabel 'velocity (blocks per unit time)'\n";
    gp += "plot 'sweep.csv' using 1:4 with linespoints title 'v asy exact (A)', \\\n";
    gp += "     'sweep.csv' using 1:7 with lines title 'C3/mu^{p-1}', \\\n";
    gp += "     'sweep.csv' using 1:3 with lines title 'C2/mu', \\\n";
    gp += "     'sweep.csv' using 1:2 with linespoints title 'v front'\n";
    write_text(cfg, "sweep.gp", gp);

    json& res = rep.results();
    res["exponent_exact"] = sw.exponent_exact;
    res["exponent_exact_stderr"] = sw.exponent_exact_stderr;
    res["exponent_expected"] = -(p - 1);
    if (std::isfinite(sw.exponent_front)) res["exponent_front"] = sw.exponent_front;
    res["monotone_exact"] = sw.monotone_exact;
    res["appendix_pass"] = sw.appendix_pass;
    say(cfg, "  exponent %.4f (expected %d, stderr %.2g)\n", sw.exponent_exact, -(p - 1),
        sw.exponent_exact_stderr);

    check(rep, cfg, "loglog exponent near -(p-1)",
          std::abs(sw.exponent_exact + (p - 1)) <= 0.15, sw.exponent_exact, 0.15,
          "|value + (p-1)| <=");
    int mono_violations = 0;
    {
        std::vector<std::size_t> order(sw.rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sw.rows[a].mu < sw.rows[b].mu;
        });
        for (std::size_t i = 1; i < order.size(); ++i)
            if (!(sw.rows[order[i]].v_asy_exact_A < sw.rows[order[i - 1]].v_asy_exact_A))
                ++mono_violations;
    }
    check(rep, cfg, "v_asy_exact decreasing in mu", mono_violations == 0,
          static_cast<double>(mono_violations), 0.0);
    int appendix_fail = 0;
    for (const VelocityReport& r : sw.rows)
        if (!check_appendix_a(r).pass) ++appendix_fail;
    check(rep, cfg, "velocities below C2/mu at every point", appendix_fail == 0,
          static_cast<double>(appendix_fail), 0.0);

    rep.write(out_path(cfg, "sweep_report.json"));
    return rep.all_passed() ? 0 : 1;
}

// ------------------------------------------------------------------- verify

namespace detail_cli {

inline std::size_t fibonacci(int n) {
    std::size_t a = 0, b = 1;
    for (int i = 0; i < n; ++i) {
        const std::size_t c = a + b;
        a = b;
        b = c;
    }
    return a;
}

inline PeriodicPotential canonical_potential(int p) {
    if (p == 2) return new_potential({1.0, -1.0});
    std::vector<double> v(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) v[static_cast<std::size_t>(i)] = i;
    return new_potential(v);
}

inline std::string matching_text(const Matching& m) {
    std::string s;
    for (int j : m) s += "{" + std::to_string(j) + "," + std::to_string(j + 1) + "}";
    return s.empty() ? "{}" : s;
}

} // namespace detail_cli

inline int cmd_verify(const RunConfig& cfg) {
    using namespace detail_cli;
    RunReport rep("verify", cfg);
    StageTimer timer(rep, "verify");
    json& res = rep.results();

    const std::vector<int> focus =
        cfg.p_verify >= 2 ? std::vector<int>{cfg.p_verify} : std::vector<int>{};

    // Determinant suite: matching formula vs cofactor reference on random
    // complex Jacobi specs, periods cycled over 2..12.
    {
        detail::Rng rng(cfg.seed);
        double worst = 0.0, worst_rec = 0.0;
        for (int i = 0; i < cfg.trials; ++i) {
            const int p = 2 + (i % 11);
            JacobiSpec s;
            s.a.resize(static_cast<std::size_t>(p));
            s.b.resize(static_cast<std::size_t>(p - 1));
            for (auto& a : s.a) a = rng.complex_box(-3.0, 3.0);
            for (auto& b : s.b) b = rng.complex_box(-3.0, 3.0);
            cx f = det_formula(s);
            if (cfg.perturb_formula) f *= 1.0 + 1e-8;
            const cx bf = det_bruteforce(s);
            const cx rec = det_recurrence(s);
            const double den = std::abs(bf);
            worst = std::max(worst, std::abs(f - bf) / den);
            worst_rec = std::max(worst_rec, std::abs(rec - bf) / den);
        }
        res["det_worst_rel"] = worst;
        res["det_recurrence_worst_rel"] = worst_rec;
        if (cfg.perturb_formula) res["fault_injection"] = true;
        check(rep, cfg, "determinant formula vs cofactor", worst <= 1e-10, worst, 1e-10);
        check(rep, cfg, "determinant recurrence vs cofactor", worst_rec <= 1e-10, worst_rec,
              1e-10);
    }

    // Matching-count suite: totals are Fibonacci F(p+1); p = 6 splits (1,5,6,1).
    {
        bool ok = true;
        for (int p = 2; p <= 12; ++p) {
            const MatchingTable t = enumerate_matchings(p);
            if (t.total() != fibonacci(p + 1)) ok = false;
        }
        const std::vector<std::size_t> c6 = enumerate_matchings(6).counts();
        const bool six_ok = c6 == std::vector<std::size_t>{1, 5, 6, 1};
        res["matching_counts_p6"] = c6;
        check(rep, cfg, "matching totals are Fibonacci", ok, ok ? 0.0 : 1.0, 0.0);
        check(rep, cfg, "p=6 counts are (1,5,6,1)", six_ok, six_ok ? 0.0 : 1.0, 0.0);

        if (cfg.p_verify >= 2) {
            const MatchingTable t = enumerate_matchings(cfg.p_verify);
            CsvBuilder csv;
            csv.header({"k", "count"});
            json layout = json::array();
            say(cfg, "  matchings for p = %d:\n", cfg.p_verify);
            for (std::size_t k = 0; k < t.by_size.size(); ++k) {
                csv.row({static_cast<double>(k), static_cast<double>(t.by_size[k].size())});
                std::string line;
                for (const Matching& m : t.by_size[k]) {
                    if (!line.empty()) line += " ";
                    line += matching_text(m);
                }
                say(cfg, "    k=%zu (%zu): %s\n", k, t.by_size[k].size(), line.c_str());
                layout.push_back({{"k", k}, {"count", t.by_size[k].size()}, {"matchings", line}});
            }
            res["matching_layout"] = layout;
            write_text(cfg, "matchings.csv", csv.str());
        }
    }

    // Derivative suite: analytic band derivative vs the high-precision
    // imaginary-step central difference at lambda0/2.
    {
        double worst_rel = 0.0, worst_abs = 0.0;
        const std::vector<int> ps = focus.empty() ? std::vector<int>{3, 4} : focus;
        for (int p : ps) {
            const PeriodicPotential pot = canonical_potential(p);
            const double lambda = constants(pot, cfg.rho0).lambda0 / 2.0;
            const int M = 32;
            const BandData bd = hermitian_bands(pot, lambda, M, cfg.rho0, cfg.threads);
            for (int n = 0; n < M; ++n) {
                const double x = bd.x[static_cast<std::size_t>(n)];
                const std::vector<double> fd =
                    band_derivative_cstep_hp(pot, lambda, x, 1e-4, cfg.rho0);
                for (int l = 0; l < p; ++l) {
                    const double diff = std::abs(bd.dzeta(n, l) - fd[static_cast<std::size_t>(l)]);
                    if (std::abs(std::sin(x)) > 1e-3)
                        worst_rel = std::max(worst_rel, diff / std::abs(fd[static_cast<std::size_t>(l)]));
                    else
                        worst_abs = std::max(worst_abs, diff);
                }
            }
        }
        res["derivative_worst_rel"] = worst_rel;
        res["derivative_worst_abs"] = worst_abs;
        check(rep, cfg, "band derivative vs central difference (rel)", worst_rel <= 1e-6,
              worst_rel, 1e-6);
        check(rep, cfg, "band derivative vs central difference (abs)", worst_abs <= 1e-8,
              worst_abs, 1e-8);
    }

    // Localization suite at the threshold coupling lambda0.
    {
        double worst = 0.0;
        bool ok = true;
        const std::vector<int> ps = focus.empty() ? std::vector<int>{2, 3} : focus;
        for (int p : ps) {
            const PeriodicPotential pot = canonical_potential(p);
            const double lambda = constants(pot, cfg.rho0).lambda0;
            const LocalizationReport lr = verify_localization(pot, lambda, 16, cfg.rho0);
            ok = ok && lr.pass;
            worst = std::max(worst, lr.worst_ratio);
        }
        res["localization_worst_ratio"] = worst;
        check(rep, cfg, "eigenvalue localization", ok && worst <= 1.0, worst, 1.0);
    }

    // h_p bound suite on a 16 x 16 (lambda, zeta) sample of the domain.
    {
        double worst = 0.0;
        bool ok = true;
        const std::vector<int> ps = focus.empty() ? std::vector<int>{3, 4, 5, 6} : focus;
        for (int p : ps) {
            const PeriodicPotential pot = canonical_potential(p);
            const double half = pot.gap() / 2.0;
            for (int i = 0; i < 16; ++i) {
                const double lambda = (i + 0.5) / 16.0;
                for (int k = 0; k < 16; ++k) {
                    const double r = half * (k + 0.5) / 16.0;
                    const double th = 2.0 * pi * k / 16.0;
                    const cx zeta = pot.at((k % p) + 1) + r * std::exp(cx(0.0, th));
                    const HpValue h = h_p_eval(pot, lambda, zeta);
                    ok = ok && h.within;
                    worst = std::max(worst, std::abs(h.value) / h.bound);
                }
            }
        }
        res["hp_worst_ratio"] = worst;
        check(rep, cfg, "|h_p| within closed bound", ok, worst, 1.0);
    }

    // Unitarity suite: block-kernel completeness at a moderate coupling.
    {
        const PeriodicPotential pot = canonical_potential(3);
        const double mu = 5.0, t = 10.0;
        const double vg = max_group_velocity(pot, mu);
        const int d_max = static_cast<int>(std::ceil(vg * t)) + 60;
        const double defect = unitarity_defect(pot, mu, t, d_max, 512);
        res["unitarity_defect"] = defect;
        check(rep, cfg, "block kernel unitarity defect", defect <= 1e-8, defect, 1e-8);
    }

    rep.write(out_path(cfg, "verify_report.json"));
    say(cfg, "verify: %s\n", rep.all_passed() ? "all suites passed" : "SUITE FAILURES");
    return rep.all_passed() ? 0 : 1;
}

// ----------------------------------------------------------------- pipeline

inline int cmd_pipeline(const RunConfig& cfg) {
    using namespace detail_cli;
    const PeriodicPotential pot = new_potential(cfg.potential);
    const ConstantsLedger L = constants(pot, cfg.rho0);

    std::vector<double> mus = cfg.mu_list;
    if (mus.empty()) mus = default_mu_decade(L.mu0);
    for (double mu : mus)
        if (mu < L.mu0)
            throw CouplingBelowThreshold("pipeline: every mu in the list must be >= mu0 = " +
                                         std::to_string(L.mu0));
    std::sort(mus.begin(), mus.end());

    RunReport rep("pipeline", cfg);
    StageTimer total(rep, "pipeline_total");
    json stages = json::array();

    RunConfig stage_cfg = cfg;
    stage_cfg.mu = mus.front();
    stage_cfg.mu_list = mus;

    const auto run_stage = [&](const std::string& name, auto&& fn) {
        json s;
        s["name"] = name;
        try {
            StageTimer st(rep, name);
            const int code = fn();
            s["ok"] = (code == 0);
            s["exit_code"] = code;
        } catch (const std::exception& e) {
            s["ok"] = false;
            s["exit_code"] = 1;
            s["error"] = e.what();
            say(cfg, "stage %s FAILED: %s\n", name.c_str(), e.what());
        }
        stages.push_back(s);
    };

    run_stage("constants", [&] { return cmd_constants(stage_cfg); });
    run_stage("bands", [&] { return cmd_bands(stage_cfg); });
    run_stage("kernel", [&] { return cmd_kernel(stage_cfg); });
    run_stage("lightcone", [&] { return cmd_lightcone(stage_cfg); });
    run_stage("vasy", [&] { return cmd_vasy(stage_cfg); });
    run_stage("sweep", [&] { return cmd_sweep(stage_cfg); });

    rep.results()["stages"] = stages;
    rep.results()["mu_list"] = mus;

    int failed = 0;
    for (const json& s : stages)
        if (!s["ok"].get<bool>()) ++failed;
    check(rep, cfg, "all stages passed", failed == 0, static_cast<double>(failed), 0.0);

    std::string why;
    const bool schema_ok =
        validate_schema(rep.data(), json::parse(report_schema_text), &why);
    if (!schema_ok) say(cfg, "  schema violation: %s\n", why.c_str());
    check(rep, cfg, "report schema valid", schema_ok, schema_ok ? 1.0 : 0.0, 1.0, "==");

    rep.write(out_path(cfg, "pipeline_report.json"));
    say(cfg, "pipeline: %s\n", rep.all_passed() ? "complete" : "completed with failures");
    return rep.all_passed() ? 0 : 1;
}

} // namespace schro
