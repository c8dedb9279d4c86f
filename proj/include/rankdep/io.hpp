#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "rankdep/inference.hpp"

namespace rankdep {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSelection {
    Matrix x, y;
    std::vector<std::string> x_names, y_names;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// Reads the selected columns of a headered CSV into row-aligned matrices.
/// Every selected cell must parse as a finite real.
inline CsvSelection ingest_csv(const std::string& path, const std::vector<std::string>& x_cols,
                               const std::vector<std::string>& y_cols) {
    if (x_cols.empty() || y_cols.empty())
        throw_config("ingest_csv: x and y column selections must be nonempty");
    for (const auto& xc : x_cols)
        for (const auto& yc : y_cols)
            if (xc == yc) throw_config("ingest_csv: column '" + xc + "' selected for both x and y");

    std::ifstream in(path);
    if (!in) throw_data("ingest_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw_data("ingest_csv: empty file '" + path + "'");
    const auto header = detail::split_csv_line(line);

    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw_data("ingest_csv: column '" + name + "' not found in header of '" + path + "'");
    };
    std::vector<std::size_t> xi, yi;
    for (const auto& c : x_cols) xi.push_back(find_col(c));
    for (const auto& c : y_cols) yi.push_back(find_col(c));

    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw_data("ingest_csv: row " + std::to_string(lineno) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
        rows.push_back(std::move(fields));
    }
    if (rows.size() < 3) throw_data("ingest_csv: need at least 3 data rows, got " +
                                    std::to_string(rows.size()));

    auto parse_cell = [&](const std::string& cell, std::size_t row, std::size_t col) -> double {
        double v = 0.0;
        const char* b = cell.data();
        const char* e = b + cell.size();
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc{} || res.ptr != e || !std::isfinite(v))
            throw_data("ingest_csv: cannot parse '" + cell + "' as a finite real at data row " +
                       std::to_string(row + 1) + ", column '" + header[col] + "'");
        return v;
    };

    CsvSelection sel;
    sel.x_names = x_cols;
    sel.y_names = y_cols;
    sel.x = Matrix(rows.size(), xi.size());
    sel.y = Matrix(rows.size(), yi.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < xi.size(); ++c) sel.x(r, c) = parse_cell(rows[r][xi[c]], r, xi[c]);
        for (std::size_t c = 0; c < yi.size(); ++c) sel.y(r, c) = parse_cell(rows[r][yi[c]], r, yi[c]);
    }
    return sel;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline json to_json(const GridSpec& g) {
    json j{{"scheme", to_string(g.scheme)}, {"n", g.n}, {"d", g.d}};
    if (g.scheme == GridScheme::iid_uniform) j["seed"] = g.seed;
    return j;
}

inline json to_json(const GraphSpec& g) {
    if (g.type == GraphSpec::Type::mst) return json{{"type", "mst"}};
    return json{{"type", "knn"}, {"k", g.k}};
}

inline json to_json(const Kernel& k) {
    json j{{"id", to_string(k.kind)}};
    if (k.kind != KernelKind::energy) j["bandwidth"] = k.bandwidth;
    return j;
}

inline json to_json(const EstimateResult& r) {
    json j{{"eta_hat", r.eta_hat},
           {"numerator_core", r.numerator_core},
           {"f_n", r.f_n},
           {"diag_mean", r.diag_mean},
           {"n_n_rank", r.n_n},
           {"d_n", r.d_n},
           {"rank_based", r.rank_based},
           {"n", r.n},
           {"graph", to_json(r.graph_spec)},
           {"kernel", to_json(r.kernel)}};
    if (r.rank_based) {
        j["grid_x"] = to_json(r.grid_x);
        j["grid_y"] = to_json(r.grid_y);
        j["perm_x"] = r.perm_x;
        j["perm_y"] = r.perm_y;
    }
    return j;
}

inline json to_json(const GraphStats& s) {
    return json{{"g1", s.g1},
                {"g2", s.g2},
                {"g3", s.g3},
                {"degree_ratio", s.degree_ratio},
                {"holder_sum", s.holder_sum},
                {"beta", s.beta},
                {"min_degree", s.min_degree},
                {"max_degree", s.max_degree}};
}

inline json to_json(const VarianceComponents& v) {
    return json{{"n", v.n},
                {"g1", v.g1},
                {"g2", v.g2},
                {"g3", v.g3},
                {"a_tilde", v.a_tilde},
                {"b_tilde", v.b_tilde},
                {"c_tilde", v.c_tilde},
                {"a_hat", v.a_hat},
                {"b_hat", v.b_hat},
                {"c_hat", v.c_hat},
                {"s_n_sq_asymptotic", v.s_n_sq_asymptotic},
                {"var_exact", v.var_exact},
                {"nonnegative_ok", v.nonnegative_ok}};
}

inline json to_json(const TableKey& k) {
    return json{{"n", k.n},
                {"grid_x", to_json(k.grid_x)},
                {"grid_y", to_json(k.grid_y)},
                {"graph", to_json(k.graph)},
                {"kernel", to_json(k.kernel)}};
}

inline json to_json(const TestResult& t) {
    return json{{"estimate", to_json(t.estimate)},
                {"alpha", t.alpha},
                {"p_exact", t.p_exact},
                {"z_stat", t.z_stat},
                {"p_clt", t.p_clt},
                {"reject", t.reject},
                {"variance", to_json(t.variance)},
                {"diagnostics", to_json(t.diagnostics)},
                {"max_degree_over_log_n", t.max_degree_over_log_n},
                {"table", json{{"replicates", t.table_replicates},
                               {"seed", t.table_seed},
                               {"cache_hit", t.table_cache_hit}}}};
}

// ---------------------------------------------------------------------------
// Null-table cache files

inline constexpr const char* null_table_format_version = "rankdep.nulltable.v1";

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline std::uint64_t stats_checksum(const std::vector<double>& stats) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double d : stats) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

inline GridSpec grid_spec_from_json(const json& j) {
    GridSpec g;
    const std::string s = j.at("scheme").get<std::string>();
    if (s == "lattice1d")
        g.scheme = GridScheme::lattice1d;
    else if (s == "halton")
        g.scheme = GridScheme::halton;
    else if (s == "iid")
        g.scheme = GridScheme::iid_uniform;
    else
        throw_data("unknown grid scheme '" + s + "'");
    g.n = j.at("n").get<std::size_t>();
    g.d = j.at("d").get<std::size_t>();
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    return g;
}

inline GraphSpec graph_spec_from_json(const json& j) {
    GraphSpec g;
    const std::string t = j.at("type").get<std::string>();
    if (t == "mst") {
        g.type = GraphSpec::Type::mst;
    } else if (t == "knn") {
        g.type = GraphSpec::Type::knn;
        g.k = j.at("k").get<std::size_t>();
    } else {
        throw_data("unknown graph type '" + t + "'");
    }
    return g;
}

inline Kernel kernel_from_json(const json& j) {
    const std::string id = j.at("id").get<std::string>();
    if (id == "energy") return Kernel::energy();
    if (id == "gaussian") return Kernel::gaussian(j.at("bandwidth").get<double>());
    if (id == "laplace") return Kernel::laplace(j.at("bandwidth").get<double>());
    throw_data("unknown kernel id '" + id + "'");
}

inline TableKey table_key_from_json(const json& j) {
    TableKey k;
    k.n = j.at("n").get<std::size_t>();
    k.grid_x = grid_spec_from_json(j.at("grid_x"));
    k.grid_y = grid_spec_from_json(j.at("grid_y"));
    k.graph = graph_spec_from_json(j.at("graph"));
    k.kernel = kernel_from_json(j.at("kernel"));
    return k;
}

}  // namespace detail

/// Atomic write: stream to a sibling temp file, then rename into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_data("cannot open '" + tmp.string() + "' for writing");
        out << contents;
        if (!out.good()) throw_data("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

inline void save_null_table(const NullTable& table, const std::filesystem::path& path) {
    json j{{"format_version", null_table_format_version},
           {"key", to_json(table.key)},
           {"key_canonical", table.key.canonical()},
           {"seed", table.seed},
           {"replicates", table.replicates},
           {"d_n", table.d_n},
           {"statistics", table.stats},
           {"checksum", hex64(detail::stats_checksum(table.stats))}};
    write_file_atomic(path, j.dump());
}

inline NullTable load_null_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open null table '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw_data("malformed null table '" + path.string() + "': " + e.what());
    }
    if (j.value("format_version", "") != null_table_format_version)
        throw_data("null table '" + path.string() + "' has unsupported format version");
    NullTable t;
    try {
        t.key = detail::table_key_from_json(j.at("key"));
        t.seed = j.at("seed").get<std::uint64_t>();
        t.replicates = j.at("replicates").get<std::size_t>();
        t.d_n = j.at("d_n").get<double>();
        t.stats = j.at("statistics").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw_data("null table '" + path.string() + "': " + e.what());
    }
    if (t.stats.size() != t.replicates)
        throw_data("null table '" + path.string() + "': statistics count mismatch");
    if (!std::is_sorted(t.stats.begin(), t.stats.end()))
        throw_data("null table '" + path.string() + "': statistics not sorted");
    if (j.at("checksum").get<std::string>() != hex64(detail::stats_checksum(t.stats)))
        throw_data("null table '" + path.string() + "': checksum mismatch");
    return t;
}

inline std::filesystem::path null_table_cache_path(const std::filesystem::path& cache_dir,
                                                   const TableKey& key, std::size_t replicates,
                                                   std::uint64_t seed) {
    const std::string id = key.canonical() + "|replicates:" + std::to_string(replicates) +
                           "|seed:" + std::to_string(seed);
    return cache_dir / ("rankdep-null-" + hex64(fnv1a64(id)) + ".json");
}

struct CachedTable {
    NullTable table;
    bool cache_hit = false;
    std::filesystem::path path;
};

/// Loads a matching cached table or builds and caches one.
inline CachedTable get_or_build_null_table(const TableKey& key, std::size_t replicates,
                                           std::uint64_t seed,
                                           const std::filesystem::path& cache_dir,
                                           unsigned threads = 0) {
    CachedTable out;
    if (!cache_dir.empty()) {
        out.path = null_table_cache_path(cache_dir, key, replicates, seed);
        if (std::filesystem::exists(out.path)) {
            NullTable t = load_null_table(out.path);
            if (t.key == key && t.replicates == replicates && t.seed == seed) {
                out.table = std::move(t);
                out.cache_hit = true;
                return out;
            }
        }
    }
    out.table = build_null_table(key, replicates, seed, threads);
    if (!cache_dir.empty()) save_null_table(out.table, out.path);
    return out;
}

}  // namespace rankdep
