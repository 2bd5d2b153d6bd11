#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "implode/io.hpp"
#include "implode/profile.hpp"
#include "implode/repulsivity.hpp"
#include "implode/simulate.hpp"
#include "implode/spectral.hpp"

namespace implode {

namespace {

using nlohmann::json;

struct RunContext {
    json cfg;
    std::string cfg_canonical;
    std::string hash;
    std::string out_dir;
};

json default_config() {
    json c;
    c["params"] = {{"d", 3},       {"gamma", 2.0},      {"mu", 0.0},
                   {"mu_prime", 0.0}, {"regime", "euler"}};
    c["profile"] = {{"r_lo", 0.0},        {"r_hi", 0.0},
                    {"scan_points", 96},  {"tol_r", 1e-12},
                    {"miss_tol", 1e-6},   {"Z_max_factor", 1000.0},
                    {"n_P", 10.0},        {"tau", 0.3}};
    c["spectrum"] = {{"a", 0.02}, {"N", 128}, {"threshold", 0.5},
                     {"eigenfunctions", false}};
    c["simulate"] = {{"n_nodes", 2001},
                     {"Z_out", 0.0},
                     {"tau_span", 5.0},
                     {"viscous", false},
                     {"use_dampened", false},
                     {"snapshots", 6},
                     {"perturbation",
                      {{"amplitude", 0.0}, {"center", 1.0}, {"width", 0.3}}}};
    c["portrait"] = {{"r", 0.0},       {"w_min", -0.2}, {"w_max", 1.2},
                     {"sigma_min", 0.0}, {"sigma_max", 1.5}, {"n", 81}};
    return c;
}

void merge(json& base, const json& over) {
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

RunContext load_context(const std::string& config_path, const std::string& out) {
    RunContext ctx;
    ctx.cfg = default_config();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw IoError("config file not found: " + config_path);
        json user;
        try {
            in >> user;
        } catch (const std::exception& e) {
            throw IoError(std::string("config parse error: ") + e.what());
        }
        merge(ctx.cfg, user);
    }
    ctx.cfg_canonical = ctx.cfg.dump();
    ctx.hash = config_hash(ctx.cfg_canonical);
    ctx.out_dir = out.empty() ? "." : out;
    std::filesystem::create_directories(ctx.out_dir);
    return ctx;
}

Parameters params_from_config(const json& cfg) {
    const auto& p = cfg.at("params");
    const Regime reg =
        (p.value("regime", "euler") == std::string("navier-stokes"))
            ? Regime::NavierStokes
            : Regime::Euler;
    const double mu = p.value("mu", 0.0);
    const double mup = p.value("mu_prime", 0.0);
    if (p.contains("ell"))
        return derive_from_ell(p.at("d").get<int>(), p.at("ell").get<double>(),
                               mu, mup, reg);
    return derive(p.at("d").get<int>(), p.at("gamma").get<double>(), mu, mup, reg);
}

ProfileOptions profile_options(const json& cfg) {
    const auto& pc = cfg.at("profile");
    ProfileOptions opt;
    opt.shoot.r_lo = pc.value("r_lo", 0.0);
    opt.shoot.r_hi = pc.value("r_hi", 0.0);
    opt.shoot.scan_points = pc.value("scan_points", 96);
    opt.shoot.tol_r = pc.value("tol_r", 1e-12);
    opt.shoot.miss_tol = pc.value("miss_tol", 1e-6);
    opt.tail.Z_max_factor = pc.value("Z_max_factor", 1000.0);
    return opt;
}

// Deterministic rebuild of the curve recorded in a profile_meta.json.
ProfileCurve rebuild_curve(const RunContext& ctx, const ProfileMeta& meta) {
    ShootResult root;
    root.r = meta.r;
    root.root_index = meta.root_index;
    root.miss = meta.miss;
    return build_curve_at_speed(meta.params, root, profile_options(ctx.cfg));
}

ProfileMeta require_profile_inputs(const RunContext& ctx) {
    const std::string meta_path = ctx.out_dir + "/profile_meta.json";
    const std::string csv_path = ctx.out_dir + "/profile.csv";
    const ProfileMeta meta = read_profile_meta(meta_path);
    const CsvTable table = read_csv(csv_path);  // throws IoError when corrupt
    if (table.headers.empty() || table.col("Z").empty())
        throw IoError("profile.csv has no data rows");
    return meta;
}

int cmd_profile(const RunContext& ctx) {
    const Parameters params = params_from_config(ctx.cfg);
    const ProfileOptions opt = profile_options(ctx.cfg);

    const auto roots = shoot_speed_scan(params, opt.shoot);
    if (roots.empty()) {
        std::cerr << "no-root-in-bracket: the shooting scan found no speed\n";
        return 2;
    }
    ProfileCurve curve;
    try {
        curve = build_curve_at_speed(params, roots.back(), opt);
    } catch (const ProfileError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    const PhysicalProfile physical = reconstruct_physical(curve, params);
    const auto& pc = ctx.cfg.at("profile");
    const DampenedProfile dampened =
        dampen(physical, pc.value("n_P", 10.0), pc.value("tau", 0.3));
    write_profile_outputs(ctx.out_dir, curve, physical, dampened, ctx.hash,
                          roots, opt);
    std::cout << "profile: r = " << curve.r << ", Z2 = " << curve.Z2
              << ", miss = " << curve.miss << "\n";
    return 0;
}

int cmd_verify(const RunContext& ctx) {
    const ProfileMeta meta = require_profile_inputs(ctx);
    const ProfileCurve curve = rebuild_curve(ctx, meta);
    const RepulsivityReport rep = margins(curve, meta.params);
    write_repulsivity_outputs(ctx.out_dir, rep, curve, ctx.hash);
    const bool ok = rep.inside_ok && (!rep.ns_regime || rep.outside_ok);
    std::cout << "verify: inside " << (rep.inside_ok ? "positive" : "NEGATIVE")
              << ", outside "
              << (rep.ns_regime
                      ? (rep.outside_ok ? "positive" : "NEGATIVE")
                      : "reported (no verdict outside the NS regime)")
              << ", kappa = " << rep.kappa << "\n";
    return ok ? 0 : 4;
}

int cmd_spectrum(const RunContext& ctx) {
    const ProfileMeta meta = require_profile_inputs(ctx);
    const ProfileCurve curve = rebuild_curve(ctx, meta);
    const auto& sc = ctx.cfg.at("spectrum");
    const SpectralReport rep = unstable_spectrum(
        curve, sc.value("a", 0.02), sc.value("N", 128), sc.value("threshold", 0.5));
    write_spectrum_outputs(ctx.out_dir, rep, ctx.hash);
    if (sc.value("eigenfunctions", false)) {
        // Nodal samples of the resolved near-unstable eigenfunctions.
        const OperatorAssembly asmb =
            assemble(curve, sc.value("a", 0.02), sc.value("N", 128));
        const EigenResult eig = eigen_dense(asmb.matrix);
        std::vector<std::vector<double>> cols;
        std::vector<std::string> heads;
        const int N = asmb.N;
        std::vector<double> Zs(asmb.nodes);
        cols.push_back(Zs);
        heads.push_back("Z");
        int written = 0;
        for (std::size_t k = 0; k < eig.values.size() && written < 8; ++k) {
            if (eig.values[k].real() < 0.0) continue;
            std::vector<double> re(N);
            for (int i = 0; i < N; ++i)
                re[N - 1 - i] = eig.vectors[k][i].real();
            cols.push_back(re);
            heads.push_back("phi_re_" + std::to_string(written));
            ++written;
        }
        write_csv(ctx.out_dir + "/eigenfunctions.csv", heads, cols);
    }
    std::cout << "spectrum: unstable count " << rep.unstable_count << " (refined "
              << rep.unstable_count_refined << ", agree "
              << (rep.counts_agree ? "yes" : "NO") << "), max Re = "
              << rep.max_real << "\n";
    return 0;
}

int cmd_simulate(const RunContext& ctx) {
    const ProfileMeta meta = require_profile_inputs(ctx);
    const ProfileCurve curve = rebuild_curve(ctx, meta);
    const PhysicalProfile physical = reconstruct_physical(curve, meta.params);
    const auto& sc = ctx.cfg.at("simulate");
    const auto& pj = sc.at("perturbation");

    SimOptions so;
    so.n_nodes = sc.value("n_nodes", 2001);
    so.Z_out = sc.value("Z_out", 0.0);
    so.viscous = sc.value("viscous", false);
    Perturbation pert;
    pert.amplitude = pj.value("amplitude", 0.0);
    pert.center = pj.value("center", 1.0);
    pert.width = pj.value("width", 0.3);

    std::optional<DampenedProfile> damp;
    if (sc.value("use_dampened", false)) {
        const auto& pc = ctx.cfg.at("profile");
        damp = dampen(physical, pc.value("n_P", 10.0), pc.value("tau", 0.3));
    }

    SimState st;
    try {
        st = init(physical, damp ? &*damp : nullptr, pert, so);
    } catch (const SimError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    const double tau_span = sc.value("tau_span", 5.0);
    const int n_snap = std::max(2, sc.value("snapshots", 6));

    std::vector<double> snap_tau, snap_Z, snap_rho, snap_u;
    auto take_snapshot = [&](const SimState& s) {
        const int n = (int)s.Z.size();
        for (int i = 0; i < n; ++i) {
            snap_tau.push_back(s.tau);
            snap_Z.push_back(s.Z[i]);
            snap_rho.push_back(s.rho[i]);
            const double u =
                (i == 0) ? 0.0
                : (i == n - 1)
                    ? (s.Psi[i] - s.Psi[i - 1]) / s.h
                    : (s.Psi[i + 1] - s.Psi[i - 1]) / (2.0 * s.h);
            snap_u.push_back(u);
        }
    };

    json diag_json = json::array();
    take_snapshot(st);
    Diagnostics all;
    for (int k = 1; k <= n_snap - 1; ++k) {
        const double target = st.tau + tau_span / (n_snap - 1);
        Diagnostics dg = run(st, target, so, physical);
        for (const auto& s : dg.samples)
            diag_json.push_back({{"tau", s.tau},
                                 {"residual_rho", s.residual_rho},
                                 {"residual_psi", s.residual_psi},
                                 {"dev_rho", s.dev_rho},
                                 {"dev_u", s.dev_u},
                                 {"norm_m0", s.norm_m0},
                                 {"norm_m1", s.norm_m1},
                                 {"norm_m2", s.norm_m2}});
        take_snapshot(st);
        all.blowup = all.blowup || dg.blowup;
        all.vacuum = all.vacuum || dg.vacuum;
        if (dg.blowup || dg.vacuum) break;
    }
    write_csv(ctx.out_dir + "/trajectory.csv", {"tau", "Z", "rho_T", "u_T"},
              {snap_tau, snap_Z, snap_rho, snap_u});
    json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["config_hash"] = ctx.hash;
    j["blowup"] = all.blowup;
    j["vacuum"] = all.vacuum;
    j["tau_end"] = st.tau;
    j["series"] = diag_json;
    std::ofstream(ctx.out_dir + "/diagnostics.json") << j.dump(2) << "\n";
    std::cout << "simulate: tau_end = " << st.tau
              << (all.blowup ? " (blow-up signal)" : "")
              << (all.vacuum ? " (vacuum)" : "") << "\n";
    return 0;
}

int cmd_portrait(const RunContext& ctx) {
    const Parameters params = params_from_config(ctx.cfg);
    const auto& pc = ctx.cfg.at("portrait");
    double r = pc.value("r", 0.0);
    if (r <= 0.0) r = 1.0 + 0.9 * (params.r_eye - 1.0);
    const Window win{pc.value("w_min", -0.2), pc.value("w_max", 1.2),
                     pc.value("sigma_min", 0.0), pc.value("sigma_max", 1.5)};
    const Portrait port = portrait_sample(params, r, win, pc.value("n", 81));

    std::vector<double> w, s, fw, fs, id;
    for (const auto& row : port.rows) {
        w.push_back(row.w);
        s.push_back(row.sigma);
        fw.push_back(row.fw);
        fs.push_back(row.fsigma);
        id.push_back(row.locus_id);
    }
    write_csv(ctx.out_dir + "/portrait.csv",
              {"w", "sigma", "fw", "fsigma", "locus_id"}, {w, s, fw, fs, id});

    json cps = json::array();
    for (const auto& cp : port.critical_points)
        cps.push_back({{"kind", "P2"},
                       {"w", cp.w},
                       {"sigma", cp.sigma}});
    json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["config_hash"] = ctx.hash;
    j["r"] = r;
    j["critical_points"] = cps;
    std::ofstream(ctx.out_dir + "/critical_points.json") << j.dump(2) << "\n";
    std::cout << "portrait: " << port.rows.size() << " rows, "
              << port.critical_points.size() << " critical points\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Self-similar implosion profiles for radial compressible flow"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    int threads = 1;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for parameter sweeps");

    auto* sub_profile = app.add_subcommand("profile", "find a profile and export it");
    auto* sub_verify = app.add_subcommand("verify", "repulsivity margins report");
    auto* sub_spectrum = app.add_subcommand("spectrum", "linearized-operator spectrum");
    auto* sub_simulate = app.add_subcommand("simulate", "renormalized-flow run");
    auto* sub_portrait = app.add_subcommand("portrait", "phase-portrait sampling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const RunContext ctx = load_context(config_path, out_dir);
        if (sub_profile->parsed()) return cmd_profile(ctx);
        if (sub_verify->parsed()) return cmd_verify(ctx);
        if (sub_spectrum->parsed()) return cmd_spectrum(ctx);
        if (sub_simulate->parsed()) return cmd_simulate(ctx);
        if (sub_portrait->parsed()) return cmd_portrait(ctx);
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 64;
    } catch (const ParamError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const ProfileError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 70;
    }
    return 70;
}

}  // namespace implode
