// CSV/JSON export, run configuration, and the file-based handoff between
// pipeline stages. Identical configs must produce bit-identical outputs.

#ifndef IMPLODE_IO_HPP
#define IMPLODE_IO_HPP

#include <string>
#include <vector>

#include "implode/params.hpp"
#include "implode/profile.hpp"
#include "implode/repulsivity.hpp"
#include "implode/spectral.hpp"

namespace implode {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit hash of the canonical config text, hex-encoded.
std::string config_hash(const std::string& canonical);

// Column-oriented CSV with mandatory header row and '.' decimal separator.
void write_csv(const std::string& path, const std::vector<std::string>& headers,
               const std::vector<std::vector<double>>& columns);

struct CsvTable {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> columns;
    const std::vector<double>& col(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

// Flat key-value record for Parameters (keys: d, gamma, ell, p, r, e, mu,
// mu_prime, regime), embedded in every metadata JSON.
std::string params_record_json(const Parameters& params);

// Stage outputs.
void write_profile_outputs(const std::string& out_dir, const ProfileCurve& curve,
                           const PhysicalProfile& physical,
                           const DampenedProfile& dampened,
                           const std::string& cfg_hash,
                           const std::vector<ShootResult>& candidates = {},
                           const ProfileOptions& options = {});
void write_repulsivity_outputs(const std::string& out_dir,
                               const RepulsivityReport& report,
                               const ProfileCurve& curve,
                               const std::string& cfg_hash);
void write_spectrum_outputs(const std::string& out_dir, const SpectralReport& report,
                            const std::string& cfg_hash);

// Profile metadata round-trip: enough state to rebuild the curve
// deterministically (params, r, root index, tolerances).
struct ProfileMeta {
    Parameters params;
    double r = 0.0;
    int root_index = 0;
    double Z2 = 0.0;
    double miss = 0.0;
    double c_w = 0.0, c_sigma = 0.0;
};
ProfileMeta read_profile_meta(const std::string& path);

}  // namespace implode

#endif
