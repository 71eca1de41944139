// Text format of a primitive database.
//
//   KPDB1 <grid-hash> <record-count>
//   <key> <value...>                  one line per grid / model / solver field
//   key: t0 tf v0 vf dx dy | cost | tau | samples×(t q... u...)
//   CRC32 <hex>                       over every byte before this line
//
// Floats use the shortest text that parses back to the same double. The
// final sample repeats the control of the last interval. Attempted keys
// without a solution go to the sidecar "<path>.infeasible".

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "kinoprim/collision.hpp"
#include "kinoprim/core.hpp"
#include "kinoprim/database.hpp"

namespace kinoprim {

inline constexpr std::string_view kDatabaseVersion = "KPDB1";

namespace detail {

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong c = crc32(0L, Z_NULL, 0);
    c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(c);
}

inline std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v[i]);
    }
    return out;
}

inline std::string grid_lines(const GridSpec& g) {
    std::string s;
    s += "position_step " + format_double(g.position_step) + "\n";
    s += "position_extents " +
         join_doubles({g.position_extents[0].lo, g.position_extents[0].hi, g.position_extents[1].lo,
                       g.position_extents[1].hi}) +
         "\n";
    s += "orientations " + join_doubles(g.orientations) + "\n";
    s += "velocities " + join_doubles(g.velocities) + "\n";
    s += "initial_headings " + join_doubles(g.initial_headings) + "\n";
    return s;
}

inline std::string params_line(const NamedParameters& p) {
    std::string s;
    for (const auto& [k, v] : p) s += " " + k + " " + format_double(v);
    return s;
}

inline std::string key_text(const PrimitiveKey& k) {
    return std::to_string(k.theta0) + " " + std::to_string(k.thetaf) + " " + std::to_string(k.v0) + " " +
           std::to_string(k.vf) + " " + std::to_string(k.dx) + " " + std::to_string(k.dy);
}

[[noreturn]] inline void truncated(const std::string& what) { throw Error(ErrorCode::TruncatedRecord, what); }

inline double number(std::string_view tok) {
    double v = 0;
    if (!parse_double(tok, v)) truncated("unparsable number '" + std::string(tok) + "'");
    return v;
}

inline PrimitiveKey parse_key(const std::vector<std::string_view>& t, std::size_t at = 0) {
    if (t.size() < at + 6) truncated("short key");
    PrimitiveKey k;
    int* f[] = {&k.theta0, &k.thetaf, &k.v0, &k.vf, &k.dx, &k.dy};
    for (std::size_t i = 0; i < 6; ++i)
        if (!parse_int(t[at + i], *f[i])) truncated("bad key index '" + std::string(t[at + i]) + "'");
    return k;
}

/// Splits a checksummed file into its body lines after verifying the
/// trailer's presence; the CRC itself is compared by the caller.
struct ChecksummedText {
    std::vector<std::string_view> lines;  // without the CRC line
    std::string_view body;                // bytes covered by the CRC
    std::uint32_t stored_crc = 0;
};

inline ChecksummedText split_checksummed(std::string_view text) {
    ChecksummedText out;
    if (text.empty() || text.back() != '\n') truncated("file does not end with a complete line");
    const auto last_start = text.rfind('\n', text.size() - 2);
    const std::size_t crc_pos = last_start == std::string_view::npos ? 0 : last_start + 1;
    const std::string_view crc_line = text.substr(crc_pos, text.size() - 1 - crc_pos);
    const auto tok = split(crc_line);
    if (tok.size() != 2 || tok[0] != "CRC32" || tok[1].size() != 8) truncated("missing CRC32 trailer");
    unsigned long v = 0;
    for (char c : tok[1]) {
        const int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
        if (d < 0) truncated("malformed CRC32 trailer");
        v = v * 16 + static_cast<unsigned long>(d);
    }
    out.stored_crc = static_cast<std::uint32_t>(v);
    out.body = text.substr(0, crc_pos);
    std::size_t i = 0;
    while (i < out.body.size()) {
        const auto j = out.body.find('\n', i);
        out.lines.push_back(out.body.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

inline void check_version(std::string_view first_line) {
    const auto tok = split(first_line);
    if (tok.empty() || tok[0].substr(0, 4) != "KPDB")
        throw Error(ErrorCode::MalformedHeader, "not a primitive database file");
    if (tok[0] != kDatabaseVersion)
        throw Error(ErrorCode::FormatVersionMismatch,
                    "expected " + std::string(kDatabaseVersion) + ", found " + std::string(tok[0]));
}

}  // namespace detail

[[nodiscard]] inline std::uint32_t grid_hash(const GridSpec& g) { return detail::crc32_of(detail::grid_lines(g)); }

/// Main file text of a database.
[[nodiscard]] inline std::string serialize_database(const PrimitiveDatabase& db) {
    const auto& so = db.solver_options();
    const auto& dyn = db.dynamics();
    std::string s;
    s += std::string(kDatabaseVersion) + " " + detail::hex32(grid_hash(db.grid())) + " " + std::to_string(db.size()) + "\n";
    s += "dynamics " + dyn.name + "\n";
    s += "dynamics_params" + detail::params_line(dyn.parameters) + "\n";
    s += "cost " + db.cost_model().name + "\n";
    s += "cost_params" + detail::params_line(db.cost_model().parameters) + "\n";
    s += detail::grid_lines(db.grid());
    s += "segments " + std::to_string(so.segments) + "\n";
    s += "tau_min " + format_double(so.tau_min) + "\n";
    s += "tau_max " + format_double(so.tau_max) + "\n";
    s += "tol_bc_pos " + format_double(so.tol.position) + "\n";
    s += "tol_bc_ang " + format_double(so.tol.angle) + "\n";
    s += "tol_bc_vel " + format_double(so.tol.other) + "\n";
    s += "multistarts " + std::to_string(so.multistarts) + "\n";
    s += "seed " + std::to_string(so.seed) + "\n";
    s += "penalty_rounds " + std::to_string(so.penalty_rounds) + "\n";
    s += "penalty_initial " + format_double(so.penalty_initial) + "\n";
    s += "penalty_growth " + format_double(so.penalty_growth) + "\n";
    s += "max_iterations " + std::to_string(so.max_iterations) + "\n";
    s += "max_iterations_inner " + std::to_string(so.max_iterations_inner) + "\n";
    s += "opt_substeps " + std::to_string(so.opt_substeps) + "\n";
    s += "integration_steps " + std::to_string(so.integration_steps) + "\n";
    s += "stored_samples " + std::to_string(so.stored_samples) + "\n";
    s += "speed_hint " + format_double(so.speed_hint) + "\n";
    s += "screening_samples " + std::to_string(so.screening_samples) + "\n";
    s += "symmetry " + std::string(db.symmetric() ? "1" : "0") + "\n";
    s += "infeasible_count " + std::to_string(db.infeasible_keys().size()) + "\n";
    s += "state_dim " + std::to_string(dyn.d) + "\n";
    s += "control_dim " + std::to_string(dyn.m) + "\n";
    for (const auto& p : db.primitives()) {
        const auto& z = p.trajectory;
        s += "key: " + detail::key_text(p.key) + " | " + format_double(z.cost) + " | " + format_double(z.tau) + " |";
        for (std::size_t i = 0; i < z.size(); ++i) {
            s += ' ';
            s += format_double(z.times[i]);
            for (double x : z.state(i)) s += ' ' + format_double(x);
            const std::size_t ci = i + 1 < z.size() ? i : i - 1;
            for (double u : z.control(ci)) s += ' ' + format_double(u);
        }
        s += '\n';
    }
    s += "CRC32 " + detail::hex32(detail::crc32_of(s)) + "\n";
    return s;
}

[[nodiscard]] inline std::string serialize_infeasible(const PrimitiveDatabase& db) {
    std::string s = std::string(kDatabaseVersion) + "-INFEASIBLE " + detail::hex32(grid_hash(db.grid())) + " " +
                    std::to_string(db.infeasible_keys().size()) + "\n";
    for (const auto& k : db.infeasible_keys()) s += detail::key_text(k) + "\n";
    s += "CRC32 " + detail::hex32(detail::crc32_of(s)) + "\n";
    return s;
}

[[nodiscard]] inline std::filesystem::path infeasible_sidecar(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".infeasible");
}

inline void serialize(const PrimitiveDatabase& db, const std::filesystem::path& path) {
    detail::write_file(path, serialize_database(db));
    detail::write_file(infeasible_sidecar(path), serialize_infeasible(db));
}

/// Parses the main file text plus the sidecar text (empty when absent).
[[nodiscard]] inline PrimitiveDatabase deserialize_database(std::string_view text, std::string_view sidecar = {}) {
    using namespace detail;
    const auto first_nl = text.find('\n');
    check_version(text.substr(0, first_nl));
    const auto header = split(text.substr(0, first_nl));
    std::size_t count = 0;
    if (header.size() != 3 || !parse_int(header[2], count))
        throw Error(ErrorCode::MalformedHeader, "header must be 'KPDB1 <grid-hash> <record-count>'");

    const ChecksummedText ct = split_checksummed(text);
    std::map<std::string, std::vector<std::string_view>, std::less<>> fields;
    std::size_t li = 1;
    for (; li < ct.lines.size() && ct.lines[li].substr(0, 4) != "key:"; ++li) {
        auto tok = split(ct.lines[li]);
        if (tok.empty()) truncated("blank configuration line");
        fields[std::string(tok[0])] = std::vector<std::string_view>(tok.begin() + 1, tok.end());
    }
    auto field = [&](const std::string& k) -> const std::vector<std::string_view>& {
        auto it = fields.find(k);
        if (it == fields.end()) truncated("missing field '" + k + "'");
        return it->second;
    };
    auto scalar = [&](const std::string& k) {
        const auto& v = field(k);
        if (v.size() != 1) truncated("field '" + k + "' expects one value");
        return number(v[0]);
    };
    auto count_of = [&](const std::string& k) {
        const auto& v = field(k);
        std::size_t n = 0;
        if (v.size() != 1 || !parse_int(v[0], n)) truncated("field '" + k + "' expects a count");
        return n;
    };
    auto doubles = [&](const std::string& k) {
        std::vector<double> out;
        for (auto t : field(k)) out.push_back(number(t));
        return out;
    };
    auto params = [&](const std::string& k) {
        NamedParameters out;
        const auto& v = field(k);
        if (v.size() % 2) truncated("field '" + k + "' expects name/value pairs");
        for (std::size_t i = 0; i < v.size(); i += 2) out.emplace_back(std::string(v[i]), number(v[i + 1]));
        return out;
    };

    const std::size_t n_records = ct.lines.size() - li;
    if (n_records != count)
        truncated("header announces " + std::to_string(count) + " records, file holds " + std::to_string(n_records));
    if (crc32_of(ct.body) != ct.stored_crc) throw Error(ErrorCode::ChecksumMismatch, "database CRC32 does not match");

    GridSpec g;
    g.position_step = scalar("position_step");
    const auto ext = doubles("position_extents");
    if (ext.size() != 4) truncated("position_extents expects four values");
    g.position_extents = {Extent{ext[0], ext[1]}, Extent{ext[2], ext[3]}};
    g.orientations = doubles("orientations");
    g.velocities = doubles("velocities");
    g.initial_headings = doubles("initial_headings");

    const auto& dyn_name = field("dynamics");
    const auto& cost_name = field("cost");
    if (dyn_name.size() != 1 || cost_name.size() != 1) truncated("model name lines");
    DynamicsModel dyn = make_dynamics(std::string(dyn_name[0]), params("dynamics_params"));
    CostModel cost = make_cost(std::string(cost_name[0]), params("cost_params"));

    SolverOptions so;
    so.segments = count_of("segments");
    so.tau_min = scalar("tau_min");
    so.tau_max = scalar("tau_max");
    so.tol.position = scalar("tol_bc_pos");
    so.tol.angle = scalar("tol_bc_ang");
    so.tol.other = scalar("tol_bc_vel");
    so.multistarts = count_of("multistarts");
    {
        const auto& v = field("seed");
        if (v.size() != 1 || !parse_int(v[0], so.seed)) truncated("seed");
    }
    so.penalty_rounds = count_of("penalty_rounds");
    so.penalty_initial = scalar("penalty_initial");
    so.penalty_growth = scalar("penalty_growth");
    so.max_iterations = count_of("max_iterations");
    so.max_iterations_inner = count_of("max_iterations_inner");
    so.opt_substeps = count_of("opt_substeps");
    so.integration_steps = count_of("integration_steps");
    so.stored_samples = count_of("stored_samples");
    so.speed_hint = scalar("speed_hint");
    so.screening_samples = count_of("screening_samples");
    const bool symmetric = count_of("symmetry") != 0;
    const std::size_t n_infeasible = count_of("infeasible_count");
    const std::size_t d = count_of("state_dim"), m = count_of("control_dim");
    if (d != dyn.d || m != dyn.m) truncated("record dimensions do not match the dynamics model");

    const std::size_t per_sample = 1 + d + m;
    std::vector<MotionPrimitive> prims;
    prims.reserve(count);
    for (; li < ct.lines.size(); ++li) {
        const auto tok = split(ct.lines[li]);
        // key: 6 | cost | tau | samples
        if (tok.size() < 13 || tok[0] != "key:" || tok[7] != "|" || tok[9] != "|" || tok[11] != "|")
            truncated("malformed record line " + std::to_string(li + 1));
        const std::size_t nvals = tok.size() - 12;
        if (nvals % per_sample != 0 || nvals / per_sample != so.stored_samples)
            truncated("record line " + std::to_string(li + 1) + " has the wrong sample count");
        MotionPrimitive p;
        p.key = parse_key(tok, 1);
        auto& z = p.trajectory;
        z.state_dim = d;
        z.control_dim = m;
        z.cost = number(tok[8]);
        z.tau = number(tok[10]);
        const std::size_t ns = nvals / per_sample;
        for (std::size_t i = 0; i < ns; ++i) {
            const std::size_t base = 12 + i * per_sample;
            z.times.push_back(number(tok[base]));
            for (std::size_t j = 0; j < d; ++j) z.states.push_back(number(tok[base + 1 + j]));
            if (i + 1 < ns)
                for (std::size_t j = 0; j < m; ++j) z.controls.push_back(number(tok[base + 1 + d + j]));
        }
        prims.push_back(std::move(p));
    }

    std::vector<PrimitiveKey> infeasible;
    if (n_infeasible > 0) {
        if (sidecar.empty()) throw Error(ErrorCode::IoError, "infeasible-key sidecar is missing");
        const auto nl = sidecar.find('\n');
        const auto sh = split(sidecar.substr(0, nl));
        if (sh.empty() || sh[0] != std::string(kDatabaseVersion) + "-INFEASIBLE")
            throw Error(ErrorCode::FormatVersionMismatch, "sidecar version tag");
        std::size_t sc = 0;
        if (sh.size() != 3 || !parse_int(sh[2], sc)) throw Error(ErrorCode::MalformedHeader, "sidecar header");
        const auto sct = split_checksummed(sidecar);
        if (sct.lines.size() - 1 != sc || sc != n_infeasible) truncated("sidecar key count");
        if (crc32_of(sct.body) != sct.stored_crc) throw Error(ErrorCode::ChecksumMismatch, "sidecar CRC32");
        for (std::size_t i = 1; i < sct.lines.size(); ++i) infeasible.push_back(parse_key(split(sct.lines[i])));
    }

    if (hex32(grid_hash(g)) != header[1]) throw Error(ErrorCode::ChecksumMismatch, "grid hash does not match");
    return PrimitiveDatabase(std::move(g), std::move(dyn), std::move(cost), so, std::move(prims),
                             std::move(infeasible), symmetric);
}

[[nodiscard]] inline PrimitiveDatabase deserialize(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto side = infeasible_sidecar(path);
    const std::string sidecar = std::filesystem::exists(side) ? detail::read_file(side) : std::string();
    return deserialize_database(text, sidecar);
}

}  // namespace kinoprim
