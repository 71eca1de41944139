// kinoprim: build-db | plan | oracle | timing
//
// Exit codes: 0 success, 2 configuration error, 3 planner/oracle failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "kinoprim/kinoprim.hpp"

namespace {

using namespace kinoprim;

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iters;
    std::optional<std::string> out;
    std::optional<std::string> database;
    std::optional<double> inflate;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config, "experiment config file")->required();
    sub->add_option("--seed", a.seed, "run a single seed instead of the configured list");
    sub->add_option("--iters", a.iters, "planner iterations");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--database", a.database, "database file, replacing the configured path");
    sub->add_option("--inflate", a.inflate, "grow obstacles by a disc of this many cells")->check(CLI::NonNegativeNumber);
}

bench::ExperimentConfig load(const CommonArgs& a) {
    bench::Overrides ov;
    ov.seed = a.seed;
    ov.iterations = a.iters;
    if (a.out) ov.out = std::filesystem::path(*a.out);
    if (a.database) ov.database = std::filesystem::path(*a.database);
    ov.inflate_cells = a.inflate;
    return bench::load_config(a.config, ov);
}

int build_db(const CommonArgs& a) {
    auto cfg = load(a);
    auto o = bench::cmd_build_db(cfg);
    std::cout << bench::build_report_csv(o.report);
    return 0;
}

int plan(const CommonArgs& a) {
    auto cfg = load(a);
    auto o = bench::cmd_plan(cfg);
    std::cout << "seed,best_cost,n_nodes\n";
    for (const auto& r : o.runs)
        std::cout << r.seed << ',' << format_double(r.result.best_cost()) << ',' << r.result.tree.size() << '\n';
    return 0;
}

int oracle(const CommonArgs& a) {
    auto cfg = load(a);
    auto o = bench::cmd_oracle(cfg);
    std::cout << bench::oracle_csv(o);
    return 0;
}

int timing(const CommonArgs& a) {
    auto cfg = load(a);
    auto s = bench::cmd_timing(cfg);
    std::cout << bench::timing_csv(s);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motion-primitive database builder and planner"};
    app.require_subcommand(1);
    CommonArgs args;
    struct Entry {
        const char* name;
        const char* help;
        int (*run)(const CommonArgs&);
    };
    const Entry entries[] = {
        {"build-db", "solve every grid boundary pair and write the database", build_db},
        {"plan", "run the planner for each configured seed", plan},
        {"oracle", "build the lattice and report the resolution optimum", oracle},
        {"timing", "compare database lookup with solving the same pairs", timing},
    };
    int (*selected)(const CommonArgs&) = nullptr;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, args);
        sub->callback([&selected, run = e.run] { selected = run; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return selected(args);
    } catch (const Error& e) {
        std::cerr << "kinoprim: " << e.what() << '\n';
        return e.code() == ErrorCode::ConfigError ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "kinoprim: " << e.what() << '\n';
        return 3;
    }
}
