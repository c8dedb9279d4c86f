#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rankdep/io.hpp"
#include "rankdep/models.hpp"

using namespace rankdep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "rankdep-test-io";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
    std::string cmd = std::string(RANKDEP_CLI_PATH) + " " + args;
    if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
    cmd += " 2> " + (temp_dir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path demo_csv() {
    const fs::path p = temp_dir() / "demo.csv";
    KnownModel model = KnownModel::bivariate_gaussian(0.6);
    auto [x, y] = model.sample(60, 99);
    std::string text = "a,b\n";
    char line[80];
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::snprintf(line, sizeof(line), "%.10f,%.10f\n", x(i, 0), y(i, 0));
        text += line;
    }
    write_text(p, text);
    return p;
}

}  // namespace

TEST_CASE("csv ingestion selects columns in file order", "[io]") {
    const fs::path p = temp_dir() / "tiny.csv";
    write_text(p, "a,b,c\n1,4.5,7\n2,5.5,8\n3,6.5,9\n");
    const auto sel = ingest_csv(p.string(), {"a"}, {"b"});
    REQUIRE(sel.x.rows() == 3);
    CHECK(sel.x(0, 0) == 1.0);
    CHECK(sel.x(2, 0) == 3.0);
    CHECK(sel.y(1, 0) == 5.5);
}

TEST_CASE("csv ingestion error paths", "[io]") {
    const fs::path p = temp_dir() / "bad.csv";
    write_text(p, "a,b\n1,2\nnan,3\n4,5\n");
    try {
        ingest_csv(p.string(), {"a"}, {"b"});
        FAIL("expected parse error");
    } catch (const error& e) {
        CHECK(e.code() == errc::data);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("row 2"));
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("'a'"));
    }

    write_text(p, "a,b\n1,2\n3,4\n5,6\n");
    CHECK_THROWS_AS(ingest_csv(p.string(), {"a"}, {"z"}), error);        // missing column
    CHECK_THROWS_AS(ingest_csv(p.string(), {"a"}, {"a"}), error);        // overlap
    CHECK_THROWS_AS(ingest_csv(p.string(), {}, {"b"}), error);           // empty selection

    write_text(p, "a,b\n1,2\n3,4\n");
    CHECK_THROWS_AS(ingest_csv(p.string(), {"a"}, {"b"}), error);        // too few rows

    write_text(p, "a,b\n1,2\n3\n4,5\n");
    CHECK_THROWS_AS(ingest_csv(p.string(), {"a"}, {"b"}), error);        // ragged row
}

TEST_CASE("null table files round trip with integrity checks", "[io]") {
    const TableKey key = make_table_key(GridSpec{GridScheme::halton, 30, 2, 0},
                                        GridSpec{GridScheme::lattice1d, 30, 1, 0}, GraphSpec{},
                                        Kernel::energy());
    const auto table = build_null_table(key, 200, 5);
    const fs::path p = temp_dir() / "table.json";
    save_null_table(table, p);
    const auto loaded = load_null_table(p);
    CHECK(loaded.key == table.key);
    CHECK(loaded.seed == table.seed);
    CHECK(loaded.stats == table.stats);
    CHECK(loaded.d_n == table.d_n);

    // corrupt one statistic: checksum must catch it
    auto j = json::parse(read_text(p));
    j["statistics"][0] = j["statistics"][0].get<double>() + 1e-9;
    write_text(p, j.dump());
    CHECK_THROWS_AS(load_null_table(p), error);

    // no temp litter from atomic writes
    for (const auto& entry : fs::directory_iterator(temp_dir()))
        CHECK(entry.path().string().find(".tmp") == std::string::npos);
}

TEST_CASE("cache lookup hits only on exact configuration", "[io]") {
    const fs::path cache = temp_dir() / "cache";
    const TableKey key = make_table_key(GridSpec{GridScheme::halton, 25, 2, 0},
                                        GridSpec{GridScheme::lattice1d, 25, 1, 0}, GraphSpec{},
                                        Kernel::energy());
    const auto first = get_or_build_null_table(key, 150, 9, cache);
    CHECK_FALSE(first.cache_hit);
    const auto second = get_or_build_null_table(key, 150, 9, cache);
    CHECK(second.cache_hit);
    CHECK(second.table.stats == first.table.stats);
    const auto different = get_or_build_null_table(key, 150, 10, cache);
    CHECK_FALSE(different.cache_hit);
}

TEST_CASE("cli test command is byte deterministic", "[io][cli]") {
    const fs::path csv = demo_csv();
    const fs::path out1 = temp_dir() / "t1.json";
    const fs::path out2 = temp_dir() / "t2.json";
    const std::string args = "test --input " + csv.string() +
                             " --x-cols a --y-cols b --seed 11 --replicates 2000 --output ";
    REQUIRE(run_cli(args + out1.string()) == 0);
    REQUIRE(run_cli(args + out2.string()) == 0);
    const std::string s1 = read_text(out1), s2 = read_text(out2);
    REQUIRE_FALSE(s1.empty());
    CHECK(s1 == s2);
}

TEST_CASE("cli null-table then test reports a cache hit", "[io][cli]") {
    const fs::path csv = demo_csv();
    const fs::path cache = temp_dir() / "clicache";
    const std::string common = " --grid lattice --graph knn:3 --kernel energy --seed 21 "
                               "--replicates 1500 --cache-dir " + cache.string();
    REQUIRE(run_cli("null-table --n 60 --d1 1 --d2 1" + common) == 0);

    const fs::path out = temp_dir() / "cached_test.json";
    REQUIRE(run_cli("test --input " + csv.string() + " --x-cols a --y-cols b" + common +
                    " --output " + out.string()) == 0);
    const auto j = json::parse(read_text(out));
    CHECK(j["table"]["cache_hit"].get<bool>());
    CHECK(j["table"]["replicates"].get<std::size_t>() == 1500);
}

TEST_CASE("cli exit codes distinguish error classes", "[io][cli]") {
    const fs::path csv = demo_csv();
    // config error: malformed kernel
    CHECK(run_cli("test --input " + csv.string() +
                  " --x-cols a --y-cols b --seed 1 --kernel bogus") == 2);
    // data error: missing file
    CHECK(run_cli("estimate --input /nonexistent.csv --x-cols a --y-cols b") == 3);
    // degeneracy: constant y column
    const fs::path cst = temp_dir() / "const.csv";
    write_text(cst, "a,b\n1,5\n2,5\n3,5\n4,5\n");
    CHECK(run_cli("estimate --input " + cst.string() + " --x-cols a --y-cols b") == 4);
    // config error via CLI parsing
    CHECK(run_cli("test --input " + csv.string() + " --x-cols a --y-cols b") == 2);  // no --seed
}

TEST_CASE("cli estimate and rank emit well-formed json", "[io][cli]") {
    const fs::path csv = demo_csv();
    const fs::path out = temp_dir() / "est.json";
    REQUIRE(run_cli("estimate --input " + csv.string() + " --x-cols a --y-cols b --output " +
                    out.string()) == 0);
    const auto j = json::parse(read_text(out));
    CHECK(j["rank_based"].get<bool>());
    CHECK(j["n"].get<std::size_t>() == 60);
    CHECK(j.contains("eta_hat"));
    CHECK(j["grid_y"]["scheme"] == "lattice1d");
    CHECK(j["perm_x"].size() == 60);

    const fs::path rout = temp_dir() / "ranks.json";
    REQUIRE(run_cli("rank --input " + csv.string() + " --x-cols a --y-cols b --output " +
                    rout.string()) == 0);
    const auto rj = json::parse(read_text(rout));
    CHECK(rj["ranks_x"].size() == 60);

    const fs::path gout = temp_dir() / "graph.json";
    REQUIRE(run_cli("graph --input " + csv.string() + " --x-cols a --y-cols b --output " +
                    gout.string()) == 0);
    const auto gj = json::parse(read_text(gout));
    CHECK(gj["stats"]["g2"].get<double>() >= 1.0);
}

TEST_CASE("cli kernel flag accepts a deferred bandwidth", "[io][cli]") {
    const fs::path csv = demo_csv();
    const fs::path out = temp_dir() / "gauss.json";
    REQUIRE(run_cli("estimate --input " + csv.string() +
                    " --x-cols a --y-cols b --kernel gaussian --output " + out.string()) == 0);
    const auto j = json::parse(read_text(out));
    CHECK(j["kernel"]["id"] == "gaussian");
    // median pairwise distance of the lattice {i/60}
    const double bw = j["kernel"]["bandwidth"].get<double>();
    CHECK(bw > 0.0);
    CHECK(bw < 1.0);
}

TEST_CASE("cache directory falls back to the environment variable", "[io][cli]") {
    const fs::path csv = demo_csv();
    const fs::path cache = temp_dir() / "envcache";
    const std::string envpfx = "RANKDEP_CACHE_DIR=" + cache.string() + " ";
    const std::string args = "test --input " + csv.string() +
                             " --x-cols a --y-cols b --seed 31 --replicates 1200 --output ";
    const fs::path o1 = temp_dir() / "env1.json", o2 = temp_dir() / "env2.json";
    REQUIRE(std::system((envpfx + RANKDEP_CLI_PATH + " " + args + o1.string() + " 2>/dev/null").c_str()) == 0);
    REQUIRE(std::system((envpfx + RANKDEP_CLI_PATH + " " + args + o2.string() + " 2>/dev/null").c_str()) == 0);
    CHECK_FALSE(json::parse(read_text(o1))["table"]["cache_hit"].get<bool>());
    CHECK(json::parse(read_text(o2))["table"]["cache_hit"].get<bool>());
}

TEST_CASE("simulate output is independent of the worker count", "[io][cli]") {
    const fs::path o1 = temp_dir() / "simt1.csv";
    const fs::path o2 = temp_dir() / "simt2.csv";
    const std::string base = "simulate --model bivariate-gaussian --rho 0.5 --n 30 --reps 40 "
                             "--replicates 1000 --seed 12 --output ";
    REQUIRE(run_cli(base + o1.string() + " --threads 1") == 0);
    REQUIRE(run_cli(base + o2.string() + " --threads 2") == 0);
    const std::string s1 = read_text(o1), s2 = read_text(o2);
    REQUIRE_FALSE(s1.empty());
    CHECK(s1 == s2);
}

TEST_CASE("cli simulate reports the empirical size", "[io][cli]") {
    const fs::path out = temp_dir() / "sim.csv";
    const fs::path summary = temp_dir() / "sim_summary.json";
    REQUIRE(run_cli("simulate --model independent-uniform --n 40 --reps 200 --replicates 1500 "
                    "--alpha 0.05 --seed 3 --output " + out.string(),
                    summary) == 0);
    const auto j = json::parse(read_text(summary));
    const double rate = j["rejection_rate"].get<double>();
    INFO("rejection rate " << rate);
    CHECK(rate >= 0.0);
    CHECK(rate < 0.12);  // a loose sanity bound at 200 replicates

    const std::string csv = read_text(out);
    CHECK_THAT(csv, Catch::Matchers::StartsWith(
                        "replicate,seed,eta_hat,n_n_rank,p_exact,z_stat,p_clt,reject\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
}

TEST_CASE("cli simulate holds the exact level at scale", "[io][cli][slow]") {
    const fs::path out = temp_dir() / "sim_level.csv";
    const fs::path summary = temp_dir() / "sim_level_summary.json";
    REQUIRE(run_cli("simulate --model independent-uniform --n 100 --reps 2000 --replicates 10000 "
                    "--alpha 0.05 --seed 8 --output " + out.string(),
                    summary) == 0);
    const double rate = json::parse(read_text(summary))["rejection_rate"].get<double>();
    INFO("rejection rate " << rate);
    CHECK(rate >= 0.035);
    CHECK(rate <= 0.065);
}

TEST_CASE("cli simulate has power against strong dependence", "[io][cli]") {
    const fs::path out = temp_dir() / "sim_power.csv";
    const fs::path summary = temp_dir() / "sim_power_summary.json";
    REQUIRE(run_cli("simulate --model noiseless --g cube --n 100 --reps 50 --replicates 2000 "
                    "--alpha 0.05 --seed 9 --output " + out.string(),
                    summary) == 0);
    const double rate = json::parse(read_text(summary))["rejection_rate"].get<double>();
    INFO("rejection rate " << rate);
    CHECK(rate > 0.95);
}
