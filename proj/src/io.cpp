#include "implode/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace implode {

using nlohmann::json;

std::string config_hash(const std::string& canonical) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return std::string(buf);
}

void write_csv(const std::string& path, const std::vector<std::string>& headers,
               const std::vector<std::vector<double>>& columns) {
    if (headers.size() != columns.size())
        throw IoError("write_csv: header/column count mismatch");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("write_csv: cannot open " + path);
    for (std::size_t j = 0; j < headers.size(); ++j)
        std::fprintf(f, "%s%s", headers[j].c_str(),
                     j + 1 < headers.size() ? "," : "\n");
    const std::size_t n = columns.empty() ? 0 : columns[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j)
            std::fprintf(f, "%.17g%s", columns[j][i],
                         j + 1 < columns.size() ? "," : "\n");
    }
    std::fclose(f);
}

const std::vector<double>& CsvTable::col(const std::string& name) const {
    for (std::size_t j = 0; j < headers.size(); ++j)
        if (headers[j] == name) return columns[j];
    throw IoError("csv column not found: " + name);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("read_csv: empty file " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.headers.push_back(cell);
    }
    t.columns.assign(t.headers.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(ss, cell, ',')) {
            if (j >= t.columns.size()) throw IoError("read_csv: ragged row");
            try {
                t.columns[j].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("read_csv: bad number '" + cell + "'");
            }
            ++j;
        }
        if (j != t.columns.size()) throw IoError("read_csv: ragged row");
    }
    return t;
}

namespace {

json params_json(const Parameters& p) {
    json j;
    j["d"] = p.d;
    j["gamma"] = p.gamma;
    j["ell"] = p.ell;
    j["p"] = p.p;
    j["mu"] = p.mu;
    j["mu_prime"] = p.mu_prime;
    j["regime"] = (p.regime == Regime::NavierStokes) ? "navier-stokes" : "euler";
    if (p.r) j["r"] = *p.r;
    if (p.e) j["e"] = *p.e;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << text;
}

}  // namespace

std::string params_record_json(const Parameters& params) {
    return params_json(params).dump(2);
}

void write_profile_outputs(const std::string& out_dir, const ProfileCurve& curve,
                           const PhysicalProfile& physical,
                           const DampenedProfile& dampened,
                           const std::string& cfg_hash,
                           const std::vector<ShootResult>& candidates,
                           const ProfileOptions& options) {
    const std::size_t n = curve.samples.size();
    std::vector<double> Z(n), w(n), sg(n), lw(n), ls(n), rho(n), dpsi(n), Q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = curve.samples[i];
        Z[i] = s.Z;
        w[i] = s.w;
        sg[i] = s.sigma;
        lw[i] = s.lam_w;
        ls[i] = s.lam_sigma;
        rho[i] = physical.rho[i];
        dpsi[i] = physical.dPsi[i];
        Q[i] = physical.Q[i];
    }
    write_csv(out_dir + "/profile.csv",
              {"Z", "w", "sigma", "lam_w", "lam_sigma", "rho_P", "dPsi_P", "Q"},
              {Z, w, sg, lw, ls, rho, dpsi, Q});

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["version"] = kVersion;
    meta["config_hash"] = cfg_hash;
    meta["params"] = params_json(curve.params);
    meta["r"] = curve.r;
    meta["Z2"] = curve.Z2;
    meta["miss"] = curve.miss;
    meta["c_w"] = curve.c_w;
    meta["c_sigma"] = curve.c_sigma;
    meta["tail_slope_w"] = curve.tail_slope_w;
    meta["tail_slope_sigma"] = curve.tail_slope_sigma;
    meta["root_index"] = curve.crossing.root_index;
    meta["tolerances"] = {{"rtol", options.shoot.integ.rtol},
                          {"atol", options.shoot.integ.atol},
                          {"sonic_tol", options.shoot.integ.sonic_tol},
                          {"tol_r", options.shoot.tol_r},
                          {"miss_tol", options.shoot.miss_tol},
                          {"Z_max_factor", options.tail.Z_max_factor}};
    {
        json arr = json::array();
        for (const auto& cand : candidates)
            arr.push_back({{"r", cand.r},
                           {"miss", cand.miss},
                           {"root_index", cand.root_index}});
        meta["candidates"] = arr;
    }
    meta["crossing"] = {{"w2", curve.crossing.w2},
                        {"sigma2", curve.crossing.sigma2},
                        {"lam_w", curve.crossing.lam_limit[0]},
                        {"lam_sigma", curve.crossing.lam_limit[1]},
                        {"eigenvalue", curve.crossing.eigenvalue}};
    meta["dampened"] = {{"n_P", dampened.n_P},
                        {"tau", dampened.tau},
                        {"Zstar", dampened.Zstar},
                        {"cutoff", {5.0, 10.0}}};
    write_text(out_dir + "/profile_meta.json", meta.dump(2) + "\n");

    // Dampened fields on the original-variable grid.
    write_csv(out_dir + "/dampened.csv", {"x", "rho_D", "u_D"},
              {dampened.x, dampened.rho_D, dampened.u_D});
}

void write_repulsivity_outputs(const std::string& out_dir,
                               const RepulsivityReport& rep,
                               const ProfileCurve& curve,
                               const std::string& cfg_hash) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["config_hash"] = cfg_hash;
    j["Z2"] = rep.Z2;
    j["Z_max"] = rep.Z_max;
    j["kappa"] = rep.kappa;
    j["kappa_alt"] = rep.kappa_alt;
    j["tail_floor"] = rep.tail_floor;
    j["ns_regime"] = rep.ns_regime;
    auto margin = [](const Margin& m) {
        return json{{"value", m.value}, {"location", m.location},
                    {"positive", m.positive}};
    };
    j["inside_q1"] = margin(rep.inside_q1);
    j["inside_q2"] = margin(rep.inside_q2);
    j["outside_q1"] = margin(rep.outside_q1);
    j["outside_qout"] = margin(rep.outside_qout);
    j["verdict_inside"] = rep.inside_ok;
    j["verdict_outside"] = rep.outside_ok;
    write_text(out_dir + "/repulsivity.json", j.dump(2) + "\n");

    const LambdaFields lf = lambda_fields(curve, 2048);
    std::vector<double> q1(lf.Z.size()), q2(lf.Z.size()), qo(lf.Z.size());
    for (std::size_t i = 0; i < lf.Z.size(); ++i) {
        const double w = curve.w_at(lf.Z[i]);
        const double s = curve.sigma_at(lf.Z[i]);
        const double base = 1.0 - w - lf.lam_w[i];
        q1[i] = base * base - lf.F[i] * lf.F[i];
        q2[i] = base - (1.0 - w) * lf.F[i] / s;
        qo[i] = base;
    }
    write_csv(out_dir + "/repulsivity.csv",
              {"Z", "lam_w", "lam_sigma", "F", "q1", "q2", "qout"},
              {lf.Z, lf.lam_w, lf.lam_sigma, lf.F, q1, q2, qo});
}

void write_spectrum_outputs(const std::string& out_dir, const SpectralReport& rep,
                            const std::string& cfg_hash) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["config_hash"] = cfg_hash;
    j["a"] = rep.a;
    j["Z_a"] = rep.Z_a;
    j["N"] = rep.N;
    j["threshold"] = rep.threshold;
    j["unstable_count"] = rep.unstable_count;
    j["unstable_count_refined"] = rep.unstable_count_refined;
    j["counts_agree"] = rep.counts_agree;
    j["max_real"] = rep.max_real;
    j["eigensolver_converged"] = rep.eigensolver_converged;
    auto modes_json = [](const std::vector<EigenMode>& ms) {
        json arr = json::array();
        for (const auto& m : ms)
            arr.push_back({{"re", m.value.real()},
                           {"im", m.value.imag()},
                           {"resolved", m.resolved},
                           {"tail_fraction", m.tail_fraction}});
        return arr;
    };
    j["modes"] = modes_json(rep.modes);
    j["modes_refined"] = modes_json(rep.modes_refined);
    write_text(out_dir + "/spectrum.json", j.dump(2) + "\n");
}

ProfileMeta read_profile_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError(std::string("bad profile metadata: ") + e.what());
    }
    ProfileMeta m;
    try {
        const auto& p = j.at("params");
        const Regime reg = (p.at("regime") == "navier-stokes")
                               ? Regime::NavierStokes
                               : Regime::Euler;
        m.params = derive_from_ell(p.at("d").get<int>(), p.at("ell").get<double>(),
                                   p.at("mu").get<double>(),
                                   p.at("mu_prime").get<double>(), reg);
        m.r = j.at("r").get<double>();
        m.root_index = j.at("root_index").get<int>();
        m.Z2 = j.at("Z2").get<double>();
        m.miss = j.at("miss").get<double>();
        m.c_w = j.at("c_w").get<double>();
        m.c_sigma = j.at("c_sigma").get<double>();
    } catch (const std::exception& e) {
        throw IoError(std::string("bad profile metadata: ") + e.what());
    }
    return m;
}

}  // namespace implode
