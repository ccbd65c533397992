#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbfed/analysis.hpp"
#include "cbfed/config.hpp"
#include "cbfed/integrate.hpp"
#include "cbfed/periodic.hpp"
#include "cbfed/version.hpp"

namespace cbfed {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- diagnostics CSV ------------------------------------------------------

/// Columns: time, H-norm, V-norm, L^{r+1}-norm, L^{q+1}-norm, forcing
/// pairing, step energy residual (0 for the first row).
inline void write_diagnostics(const Trajectory& traj, const PhysicalParams& params,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_diagnostics: cannot open '" + path + "'");
    out << "time,h_norm,v_norm,lr_norm,lq_norm,forcing_power,energy_residual\n";
    std::vector<double> residuals;
    if (traj.diag.size() >= 2)
        residuals = energy_residual_series(traj, params);
    char buf[512];
    for (std::size_t i = 0; i < traj.diag.size(); ++i) {
        const auto& d = traj.diag[i];
        double res = i == 0 ? 0.0 : residuals[i - 1];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", d.time, d.h,
                      d.v, d.lr, d.lq, d.f_pair, res);
        out << buf;
    }
    if (!out)
        throw IoError("write_diagnostics: write failed for '" + path + "'");
}

inline std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("read_csv: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string cell = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                row.push_back(std::numeric_limits<double>::quiet_NaN()); // non-numeric cell
            }
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- binary checkpoints -----------------------------------------------------
//
// Little-endian layout: magic "CBFDFLD1", u32 version, u32 dim,
// u32 n_per_axis, f64 box_length, then per component the complex
// coefficients as interleaved (re, im) f64 pairs over wave indices
// k in [-(n/2-1), n/2-1]^dim in lexicographic order.

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kCkptMagic[8] = {'C', 'B', 'F', 'D', 'F', 'L', 'D', '1'};
constexpr std::uint32_t kCkptVersion = 1;

} // namespace detail

inline void write_checkpoint(const SpectralField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("checkpoint: cannot open '" + path + "' for writing");
    const Grid& g = field.grid();
    out.write(detail::kCkptMagic, 8);
    detail::put_u32(out, detail::kCkptVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(g.dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(g.n()));
    detail::put_f64(out, g.box_length());
    int kcap = g.n() / 2 - 1;
    std::array<int, 3> k{0, 0, 0};
    for (int c = 0; c < g.dim(); ++c) {
        auto emit = [&](auto&& self, int d) -> void {
            if (d == g.dim()) {
                Complex v = field.coeff(c, g.linear_index(k));
                detail::put_f64(out, v.real());
                detail::put_f64(out, v.imag());
                return;
            }
            for (k[d] = -kcap; k[d] <= kcap; ++k[d])
                self(self, d + 1);
        };
        emit(emit, 0);
    }
    if (!out)
        throw IoError("checkpoint: write failed for '" + path + "'");
}

inline SpectralField read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kCkptMagic, 8) != 0)
        throw IoError("checkpoint header mismatch in '" + path + "'");
    std::uint32_t version = detail::get_u32(in);
    if (version != detail::kCkptVersion)
        throw IoError("checkpoint: unsupported format version in '" + path + "'");
    int dim = static_cast<int>(detail::get_u32(in));
    int n = static_cast<int>(detail::get_u32(in));
    double box = detail::get_f64(in);
    if (!in || (dim != 2 && dim != 3) || n < 8)
        throw IoError("checkpoint header mismatch in '" + path + "'");
    auto grid = std::make_shared<Grid>(dim, n, box);
    SpectralField field(grid);
    int kcap = n / 2 - 1;
    std::array<int, 3> k{0, 0, 0};
    for (int c = 0; c < dim; ++c) {
        auto slurp = [&](auto&& self, int d) -> void {
            if (d == dim) {
                double re = detail::get_f64(in);
                double im = detail::get_f64(in);
                field.set_coeff(c, grid->linear_index(k), Complex(re, im));
                return;
            }
            for (k[d] = -kcap; k[d] <= kcap; ++k[d])
                self(self, d + 1);
        };
        slurp(slurp, 0);
    }
    if (!in)
        throw IoError("checkpoint: truncated file '" + path + "'");
    field.set_divergence_free(divergence_defect(field) <= 1e-12);
    return field;
}

// --- run manifest -----------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline json report_to_json(const PeriodicSolveReport& rep) {
    json j;
    j["converged"] = rep.converged;
    j["iterations"] = rep.iterations;
    j["residual_history"] = rep.residual_history;
    j["empirical_contraction"] = rep.empirical_contraction;
    if (std::isfinite(rep.fitted_contraction))
        j["fitted_contraction"] = rep.fitted_contraction;
    if (rep.predicted_rate)
        j["predicted_rate"] = *rep.predicted_rate;
    j["accelerated"] = rep.accelerated;
    j["contraction_certified"] = rep.contraction_certified;
    if (rep.invariant_radius > 0.0)
        j["invariant_radius"] = rep.invariant_radius;
    j["initial_outside_ball"] = rep.initial_outside_ball;
    if (rep.temporal_truncation > 0.0)
        j["temporal_truncation"] = rep.temporal_truncation;
    if (rep.final_state)
        j["final_h_norm"] = h_norm(*rep.final_state);
    if (!rep.note.empty())
        j["note"] = rep.note;
    return j;
}

inline json uniqueness_to_json(const UniquenessReport& u) {
    json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
    };
    put("zeta", u.zeta);
    put("eta", u.eta);
    put("kappa", u.kappa);
    put("zeta_gamma0", u.zeta_gamma0);
    put("L", u.L);
    put("L1", u.L1);
    put("Ltilde", u.Ltilde);
    j["condition_supercritical_A"] = u.condition_supercritical_A;
    j["condition_supercritical_B"] = u.condition_supercritical_B;
    j["condition_critical"] = u.condition_critical;
    put("applicable_rate", u.applicable_rate);
    return j;
}

} // namespace detail

struct RunManifest {
    RunConfig config;
    PeriodicSolveReport report;
    UniquenessReport uniqueness;
    json checks = json::object();
    double wall_time_seconds = 0.0;

    json to_json() const {
        json j;
        j["code_version"] = kVersion;
        j["config"] = config_to_json(config);
        j["report"] = detail::report_to_json(report);
        j["uniqueness"] = detail::uniqueness_to_json(uniqueness);
        j["checks"] = checks;
        j["digest"] = digest();
        j["wall_time_seconds"] = wall_time_seconds;
        return j;
    }

    /// Stable digest over everything except wall time.
    std::string digest() const {
        json j;
        j["code_version"] = kVersion;
        j["config"] = config_to_json(config);
        j["report"] = detail::report_to_json(report);
        j["uniqueness"] = detail::uniqueness_to_json(uniqueness);
        j["checks"] = checks;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a(j.dump())));
        return buf;
    }
};

inline void write_manifest(const RunManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_manifest: cannot open '" + path + "'");
    out << manifest.to_json().dump(2) << "\n";
    if (!out)
        throw IoError("write_manifest: write failed for '" + path + "'");
}

} // namespace cbfed
