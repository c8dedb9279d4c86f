// Command-line front end for the rank association library: estimation,
// distribution-free testing, null-table management, and seeded simulation
// batches.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rankdep/io.hpp"
#include "rankdep/oracles.hpp"
#include "rankdep/rankdep.hpp"

namespace {

using namespace rankdep;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    SplitMix64 sm{base + 0x9E3779B97F4A7C15ULL * (salt + 1)};
    return sm.next();
}

struct GridChoice {
    std::optional<GridScheme> scheme;  // empty: halton, or lattice when d = 1
    std::uint64_t seed = 0;
};

GridChoice parse_grid_flag(const std::string& s) {
    GridChoice g;
    if (s.empty()) return g;
    if (s == "lattice" || s == "lattice1d") {
        g.scheme = GridScheme::lattice1d;
    } else if (s == "halton") {
        g.scheme = GridScheme::halton;
    } else if (s.rfind("iid:", 0) == 0) {
        g.scheme = GridScheme::iid_uniform;
        g.seed = std::strtoull(s.c_str() + 4, nullptr, 10);
    } else {
        throw_config("unknown grid scheme '" + s + "' (expected lattice|halton|iid:SEED)");
    }
    return g;
}

GridSpec grid_spec_for(const GridChoice& choice, std::size_t n, std::size_t d) {
    GridScheme scheme = choice.scheme.value_or(d == 1 ? GridScheme::lattice1d : GridScheme::halton);
    if (scheme == GridScheme::lattice1d && d != 1)
        throw_config("lattice grid requires a 1-dimensional margin (d = " + std::to_string(d) + ")");
    return {scheme, n, d, choice.seed};
}

GraphSpec parse_graph_flag(const std::string& s) {
    GraphSpec g;
    if (s.empty() || s == "knn") return g;  // default knn with k = floor(log n)
    if (s == "mst") {
        g.type = GraphSpec::Type::mst;
        return g;
    }
    if (s.rfind("knn:", 0) == 0) {
        g.type = GraphSpec::Type::knn;
        g.k = std::strtoull(s.c_str() + 4, nullptr, 10);
        if (g.k == 0) throw_config("knn graph requires k >= 1");
        return g;
    }
    throw_config("unknown graph spec '" + s + "' (expected knn:K|mst)");
}

/// Kernel flag with the bandwidth possibly deferred: "gaussian" without a
/// sigma takes the median pairwise distance of the rank point set.
struct KernelChoice {
    KernelKind kind = KernelKind::energy;
    std::optional<double> bandwidth;
};

KernelChoice parse_kernel_flag(const std::string& s) {
    if (s.empty() || s == "energy") return {KernelKind::energy, 0.0};
    if (s == "gaussian") return {KernelKind::gaussian, std::nullopt};
    if (s == "laplace") return {KernelKind::laplace, std::nullopt};
    if (s.rfind("gaussian:", 0) == 0)
        return {KernelKind::gaussian, std::strtod(s.c_str() + 9, nullptr)};
    if (s.rfind("laplace:", 0) == 0)
        return {KernelKind::laplace, std::strtod(s.c_str() + 8, nullptr)};
    throw_config("unknown kernel '" + s + "' (expected energy|gaussian[:SIGMA]|laplace[:SIGMA])");
}

Kernel resolve_kernel(const KernelChoice& c, const Matrix& rank_basis) {
    if (c.kind == KernelKind::energy) return Kernel::energy();
    const double bw = c.bandwidth ? *c.bandwidth : median_heuristic_bandwidth(rank_basis);
    return c.kind == KernelKind::gaussian ? Kernel::gaussian(bw) : Kernel::laplace(bw);
}

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

KnownModel parse_model(const std::string& name, std::size_t d1, std::size_t d2, double rho,
                       double sigma, double amplitude, const std::string& gname) {
    GFunc g = GFunc::identity;
    if (gname == "cube")
        g = GFunc::cube;
    else if (gname == "sine")
        g = GFunc::sine;
    else if (gname != "identity" && !gname.empty())
        throw_config("unknown g function '" + gname + "' (expected identity|cube|sine)");

    if (name == "independent-uniform") return KnownModel::independent_uniform(d1, d2);
    if (name == "independent-normal") return KnownModel::independent_normal(d1, d2);
    if (name == "cauchy-independent") return KnownModel::cauchy_independent(d1, d2);
    if (name == "bivariate-gaussian") return KnownModel::bivariate_gaussian(rho);
    if (name == "noiseless") return KnownModel::noiseless(g);
    if (name == "additive-noise") return KnownModel::additive_noise(g, sigma);
    if (name == "sinusoid") return KnownModel::sinusoid(amplitude, sigma);
    throw_config("unknown model '" + name + "'");
}

void emit(const json& j, const std::string& output_path) {
    const std::string text = j.dump(2) + "\n";
    if (output_path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        write_file_atomic(output_path, text);
    }
}

std::filesystem::path resolve_cache_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RANKDEP_CACHE_DIR")) return env;
    return {};
}

struct CommonFlags {
    std::string input, x_cols, y_cols;
    std::string grid = "", graph = "", kernel = "";
    std::string output, cache_dir;
    double alpha = 0.05;
    std::size_t replicates = 10'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

void add_data_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--input", f.input, "CSV input file with a header row")->required();
    cmd->add_option("--x-cols", f.x_cols, "comma-separated x column names")->required();
    cmd->add_option("--y-cols", f.y_cols, "comma-separated y column names")->required();
}

void add_config_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--grid", f.grid, "reference grid scheme: lattice|halton|iid:SEED");
    cmd->add_option("--graph", f.graph, "graph functional: knn:K|mst (default knn, k=floor(log n))");
    cmd->add_option("--kernel", f.kernel, "kernel: energy|gaussian:SIGMA|laplace:SIGMA");
    cmd->add_option("--output", f.output, "output path (stdout when omitted)");
    cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
}

struct LoadedData {
    Matrix x, y;
    ReferenceGrid grid_x, grid_y;
};

LoadedData load_with_grids(const CommonFlags& f) {
    auto sel = ingest_csv(f.input, split_names(f.x_cols), split_names(f.y_cols));
    const GridChoice choice = parse_grid_flag(f.grid);
    ReferenceGrid gx = make_grid(grid_spec_for(choice, sel.x.rows(), sel.x.cols()));
    ReferenceGrid gy = make_grid(grid_spec_for(choice, sel.y.rows(), sel.y.cols()));
    return {std::move(sel.x), std::move(sel.y), std::move(gx), std::move(gy)};
}

int run_rank(const CommonFlags& f) {
    LoadedData d = load_with_grids(f);
    const RankAssignment ax = compute_ranks(d.x, d.grid_x);
    const RankAssignment ay = compute_ranks(d.y, d.grid_y);
    json j{{"grid_x", to_json(d.grid_x.spec())},
           {"grid_y", to_json(d.grid_y.spec())},
           {"perm_x", ax.perm},
           {"perm_y", ay.perm},
           {"cost_x", ax.cost},
           {"cost_y", ay.cost}};
    const Matrix rx = rank_points(d.grid_x, ax);
    const Matrix ry = rank_points(d.grid_y, ay);
    json jrx = json::array(), jry = json::array();
    for (std::size_t i = 0; i < rx.rows(); ++i) {
        jrx.push_back(std::vector<double>(rx.row(i).begin(), rx.row(i).end()));
        jry.push_back(std::vector<double>(ry.row(i).begin(), ry.row(i).end()));
    }
    j["ranks_x"] = jrx;
    j["ranks_y"] = jry;
    emit(j, f.output);
    return 0;
}

int run_graph(const CommonFlags& f) {
    LoadedData d = load_with_grids(f);
    const RankAssignment ax = compute_ranks(d.x, d.grid_x);
    const Matrix rx = rank_points(d.grid_x, ax);
    const GraphSpec spec = resolve_graph_spec(parse_graph_flag(f.graph), rx.rows());
    const GeometricGraph g = build_graph(rx, spec);
    const GraphStats s = graph_stats(g);
    json j{{"graph", to_json(spec)},
           {"stats", to_json(s)},
           {"edges", g.edges().size()},
           {"max_degree_over_log_n",
            static_cast<double>(s.max_degree) / std::log(static_cast<double>(g.order()))}};
    emit(j, f.output);
    return 0;
}

int run_estimate(const CommonFlags& f, bool plain) {
    const KernelChoice choice = parse_kernel_flag(f.kernel);
    const GraphSpec graph = parse_graph_flag(f.graph);
    EstimateResult r;
    if (plain) {
        auto sel = ingest_csv(f.input, split_names(f.x_cols), split_names(f.y_cols));
        r = eta_hat_plain(sel.x, sel.y, graph, resolve_kernel(choice, sel.y));
    } else {
        LoadedData d = load_with_grids(f);
        r = eta_hat_rank(d.x, d.y, d.grid_x, d.grid_y, graph,
                         resolve_kernel(choice, d.grid_y.points()));
    }
    emit(to_json(r), f.output);
    return 0;
}

int run_test(const CommonFlags& f) {
    LoadedData d = load_with_grids(f);
    const Kernel kernel = resolve_kernel(parse_kernel_flag(f.kernel), d.grid_y.points());
    const GraphSpec graph = parse_graph_flag(f.graph);
    const TableKey key = make_table_key(d.grid_x.spec(), d.grid_y.spec(), graph, kernel);

    const std::filesystem::path cache = resolve_cache_dir(f.cache_dir);
    CachedTable cached = get_or_build_null_table(key, f.replicates, f.seed, cache, f.threads);

    TestOptions opt;
    opt.alpha = f.alpha;
    opt.table = &cached.table;
    opt.threads = f.threads;
    TestResult result = test_independence(d.x, d.y, d.grid_x, d.grid_y, graph, kernel, opt);
    result.table_cache_hit = cached.cache_hit;

    emit(to_json(result), f.output);
    return 0;
}

int run_null_table(const CommonFlags& f, std::size_t n, std::size_t d1, std::size_t d2) {
    const GridChoice choice = parse_grid_flag(f.grid);
    const GridSpec gsy = grid_spec_for(choice, n, d2);
    const Kernel kernel = resolve_kernel(parse_kernel_flag(f.kernel), make_grid(gsy).points());
    const TableKey key =
        make_table_key(grid_spec_for(choice, n, d1), gsy, parse_graph_flag(f.graph), kernel);
    const std::filesystem::path cache = resolve_cache_dir(f.cache_dir);
    if (cache.empty() && f.output.empty())
        throw_config("null-table: provide --cache-dir (or RANKDEP_CACHE_DIR) or --output");

    CachedTable cached = get_or_build_null_table(key, f.replicates, f.seed, cache, f.threads);
    if (!f.output.empty()) save_null_table(cached.table, f.output);

    json j{{"key", to_json(key)},
           {"replicates", cached.table.replicates},
           {"seed", cached.table.seed},
           {"d_n", cached.table.d_n},
           {"cache_hit", cached.cache_hit},
           {"eta_q05", cached.table.eta_quantile(0.05)},
           {"eta_q50", cached.table.eta_quantile(0.50)},
           {"eta_q95", cached.table.eta_quantile(0.95)}};
    if (!cache.empty()) j["cache_path"] = cached.path.string();
    std::fputs((j.dump(2) + "\n").c_str(), stdout);
    return 0;
}

int run_simulate(const CommonFlags& f, const KnownModel& model, std::size_t n, std::size_t reps) {
    if (f.output.empty()) throw_config("simulate: --output CSV path is required");
    const GridChoice choice = parse_grid_flag(f.grid);
    const GridSpec gsx = grid_spec_for(choice, n, model.d1);
    const GridSpec gsy = grid_spec_for(choice, n, model.d2);
    const ReferenceGrid grid_x = make_grid(gsx);
    const ReferenceGrid grid_y = make_grid(gsy);
    const Kernel kernel = resolve_kernel(parse_kernel_flag(f.kernel), grid_y.points());
    const GraphSpec graph = resolve_graph_spec(parse_graph_flag(f.graph), n);
    const TableKey key = make_table_key(gsx, gsy, graph, kernel);

    const std::filesystem::path cache = resolve_cache_dir(f.cache_dir);
    const std::uint64_t table_seed = derive_seed(f.seed, 1);
    const std::uint64_t data_root = derive_seed(f.seed, 2);
    CachedTable cached = get_or_build_null_table(key, f.replicates, table_seed, cache, f.threads);

    const NullMoments tilde = (kernel.kind == KernelKind::energy && model.d2 == 1)
                                  ? null_moments(kernel, 1, MomentMethod::closed_form)
                                  : null_moments(kernel, model.d2, MomentMethod::quasi_mc);

    struct Row {
        std::uint64_t seed;
        TestResult res;
    };
    std::vector<Row> rows(reps);
    TestOptions opt;
    opt.alpha = f.alpha;
    opt.table = &cached.table;
    opt.tilde = &tilde;

    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            const std::uint64_t data_seed = derive_seed(data_root, r);
            auto [x, y] = model.sample(n, data_seed);
            rows[r] = {data_seed, test_independence(x, y, grid_x, grid_y, graph, kernel, opt)};
        }
    };
    unsigned nthreads = f.threads ? f.threads : std::thread::hardware_concurrency();
    nthreads = std::max(1u, std::min<unsigned>(nthreads, reps));
    if (nthreads == 1) {
        worker(0, reps);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (reps + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t lo = t * chunk, hi = std::min<std::size_t>(reps, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    std::string csv = "replicate,seed,eta_hat,n_n_rank,p_exact,z_stat,p_clt,reject\n";
    std::size_t rejections = 0;
    char line[256];
    for (std::size_t r = 0; r < reps; ++r) {
        const TestResult& t = rows[r].res;
        rejections += t.reject ? 1 : 0;
        std::snprintf(line, sizeof(line), "%zu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r,
                      static_cast<unsigned long long>(rows[r].seed), t.estimate.eta_hat,
                      t.estimate.n_n, t.p_exact, t.z_stat, t.p_clt, t.reject ? 1 : 0);
        csv += line;
    }
    write_file_atomic(f.output, csv);

    json summary{{"model", model.name()},
                 {"n", n},
                 {"replicates", reps},
                 {"alpha", f.alpha},
                 {"rejections", rejections},
                 {"rejection_rate", static_cast<double>(rejections) / static_cast<double>(reps)},
                 {"table", json{{"replicates", cached.table.replicates},
                                {"seed", cached.table.seed},
                                {"cache_hit", cached.cache_hit}}},
                 {"output", f.output}};
    std::fputs((summary.dump(2) + "\n").c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distribution-free association measures and independence tests "
                 "from optimal-transport ranks"};
    app.require_subcommand(1);

    CommonFlags f;
    std::size_t nt_n = 0, nt_d1 = 1, nt_d2 = 1;
    std::size_t sim_n = 100, sim_reps = 1000;
    std::string model_name = "independent-normal", gname = "identity";
    double rho = 0.0, sigma = 1.0, amplitude = 1.0;
    bool plain = false;

    auto* rank = app.add_subcommand("rank", "compute optimal-transport ranks of the data");
    add_data_flags(rank, f);
    add_config_flags(rank, f);

    auto* graph = app.add_subcommand("graph", "rank-graph regularity diagnostics");
    add_data_flags(graph, f);
    add_config_flags(graph, f);

    auto* estimate = app.add_subcommand("estimate", "compute the association estimate");
    add_data_flags(estimate, f);
    add_config_flags(estimate, f);
    estimate->add_flag("--plain", plain, "use raw observations instead of ranks");

    auto* test = app.add_subcommand("test", "distribution-free independence test");
    add_data_flags(test, f);
    add_config_flags(test, f);
    test->add_option("--alpha", f.alpha, "test level");
    test->add_option("--replicates", f.replicates, "null table replicates");
    test->add_option("--seed", f.seed, "base seed for the null table")->required();
    test->add_option("--cache-dir", f.cache_dir, "null table cache directory");

    auto* nulltab = app.add_subcommand("null-table", "materialize and cache a null table");
    nulltab->add_option("--n", nt_n, "sample size")->required();
    nulltab->add_option("--d1", nt_d1, "x dimension");
    nulltab->add_option("--d2", nt_d2, "y dimension");
    add_config_flags(nulltab, f);
    nulltab->add_option("--replicates", f.replicates, "replicates");
    nulltab->add_option("--seed", f.seed, "base seed")->required();
    nulltab->add_option("--cache-dir", f.cache_dir, "cache directory");

    auto* simulate = app.add_subcommand("simulate", "seeded batch over a synthetic model");
    simulate->add_option("--model", model_name,
                         "independent-uniform|independent-normal|cauchy-independent|"
                         "bivariate-gaussian|noiseless|additive-noise|sinusoid");
    simulate->add_option("--d1", nt_d1, "x dimension (independence models)");
    simulate->add_option("--d2", nt_d2, "y dimension (independence models)");
    simulate->add_option("--rho", rho, "bivariate-gaussian correlation");
    simulate->add_option("--noise", sigma, "noise sigma");
    simulate->add_option("--amplitude", amplitude, "sinusoid amplitude");
    simulate->add_option("--g", gname, "g function: identity|cube|sine");
    simulate->add_option("--n", sim_n, "sample size per replicate");
    simulate->add_option("--reps", sim_reps, "number of data replicates");
    add_config_flags(simulate, f);
    simulate->add_option("--alpha", f.alpha, "test level");
    simulate->add_option("--replicates", f.replicates, "null table replicates");
    simulate->add_option("--seed", f.seed, "base seed")->required();
    simulate->add_option("--cache-dir", f.cache_dir, "cache directory");

    try {
        app.parse(argc, argv);
        if (rank->parsed()) return run_rank(f);
        if (graph->parsed()) return run_graph(f);
        if (estimate->parsed()) return run_estimate(f, plain);
        if (test->parsed()) return run_test(f);
        if (nulltab->parsed()) return run_null_table(f, nt_n, nt_d1, nt_d2);
        if (simulate->parsed())
            return run_simulate(f, parse_model(model_name, nt_d1, nt_d2, rho, sigma, amplitude, gname),
                                sim_n, sim_reps);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fputs((nlohmann::json{{"error", e.what()}, {"code", 2}}.dump() + "\n").c_str(), stderr);
        return 2;
    } catch (const rankdep::error& e) {
        std::fputs(
            (nlohmann::json{{"error", e.what()}, {"code", e.exit_code()}}.dump() + "\n").c_str(),
            stderr);
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fputs((nlohmann::json{{"error", e.what()}, {"code", 1}}.dump() + "\n").c_str(), stderr);
        return 1;
    }
}
