#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "hcdn/expcli.hpp"

using namespace hcdn;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hcdn_expcli_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig demo_config(const fs::path& out) {
    ExperimentConfig c;
    const auto topo_file = out.parent_path() / (out.filename().string() + ".topo");
    fs::create_directories(out.parent_path());
    std::ofstream(topo_file) << serialize_topology(build_demo_topology());
    c.topology_file = topo_file;
    c.file_size = 200'000;
    c.piece_size = 50'000;
    c.runs = 3;
    c.out = out;
    return c;
}

}  // namespace

TEST_SUITE("expcli") {
    TEST_CASE("parse_value_list") {
        CHECK(parse_value_list("5") == std::vector<double>{5});
        CHECK(parse_value_list("0,1,2.5") == std::vector<double>{0, 1, 2.5});
        CHECK(parse_value_list("0:5:1") == std::vector<double>{0, 1, 2, 3, 4, 5});
        CHECK(parse_value_list("0:10:1").size() == 11);
        CHECK(parse_value_list("0:1:0.25").size() == 5);
        CHECK_THROWS_AS(parse_value_list(""), ConfigError);
        CHECK_THROWS_AS(parse_value_list("x"), ConfigError);
        CHECK_THROWS_AS(parse_value_list("0:5:0"), ConfigError);
        CHECK_THROWS_AS(parse_value_list("1,2,"), ConfigError);
    }

    TEST_CASE("validate") {
        ExperimentConfig c;
        CHECK_NOTHROW(c.validate());
        auto bad = [&](auto mutate) {
            ExperimentConfig x;
            mutate(x);
            CHECK_THROWS_AS(x.validate(), ConfigError);
        };
        bad([](ExperimentConfig& x) { x.runs = 0; });
        bad([](ExperimentConfig& x) { x.loss = {}; });
        bad([](ExperimentConfig& x) { x.loss = {0.02, 0.01}; });
        bad([](ExperimentConfig& x) { x.loss = {0.01, 0.01}; });
        bad([](ExperimentConfig& x) { x.loss = {1.5}; });
        bad([](ExperimentConfig& x) { x.cbr = {-0.1}; });
        bad([](ExperimentConfig& x) { x.file_size = 0; });
        bad([](ExperimentConfig& x) { x.piece_size = 0; });
        bad([](ExperimentConfig& x) { x.swarm.batch_size = 0; });
        bad([](ExperimentConfig& x) { x.swarm.port_pool_capacity = 0; });
    }

    TEST_CASE("missing topology file is a config error") {
        ExperimentConfig c;
        c.topology_file = "/nonexistent/topo.txt";
        CHECK_THROWS_AS(load_topology(c), ConfigError);
    }

    TEST_CASE("aggregates are recomputable from per-run csvs") {
        const auto out = scratch("agg");
        ExperimentConfig c = demo_config(out);
        c.model = ModelKind::P2P;
        const auto report = run_experiment(c);
        REQUIRE(report.all_ok());
        REQUIRE(report.runs.size() == 3);

        double sum_means = 0;
        std::map<std::string, double> bytes_sum;
        for (int i = 0; i < 3; ++i) {
            const auto rows = read_csv(out / ("run-" + std::to_string(i)) / "completions.csv");
            double total = 0;
            int n = 0;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                REQUIRE(rows[r].size() == 5);
                REQUIRE(!rows[r][2].empty());
                total += std::stod(rows[r][2]) - std::stod(rows[r][1]);
                ++n;
            }
            CHECK(report.runs[static_cast<std::size_t>(i)].mean_completion_s == doctest::Approx(total / n).epsilon(1e-5));
            sum_means += total / n;
            const auto links = read_csv(out / ("run-" + std::to_string(i)) / "links.csv");
            for (std::size_t r = 1; r < links.size(); ++r) bytes_sum[links[r][0] + " " + links[r][1]] += std::stod(links[r][2]);
        }
        CHECK(report.mean_completion_s == doctest::Approx(sum_means / 3).epsilon(1e-5));

        const auto summary = read_csv(out / "summary.csv");
        REQUIRE(summary.size() == 5);
        CHECK(summary[0][0] == "run");
        CHECK(summary[4][0] == "mean");
        CHECK(std::stod(summary[4][5]) == doctest::Approx(sum_means / 3).epsilon(1e-5));

        const auto means = read_csv(out / "links_mean.csv");
        for (std::size_t r = 1; r < means.size(); ++r)
            CHECK(std::stod(means[r][2]) == doctest::Approx(bytes_sum[means[r][0] + " " + means[r][1]] / 3).epsilon(1e-6));
        fs::remove_all(out);
    }

    TEST_CASE("runs=1 aggregate equals the single run") {
        const auto out = scratch("single");
        ExperimentConfig c = demo_config(out);
        c.runs = 1;
        const auto report = run_experiment(c);
        REQUIRE(report.runs.size() == 1);
        CHECK(report.mean_completion_s == report.runs[0].mean_completion_s);
        CHECK(report.min_completion_s == report.runs[0].mean_completion_s);
        CHECK(report.max_completion_s == report.runs[0].mean_completion_s);
        CHECK(report.mean_core_bytes == static_cast<double>(report.runs[0].core_bytes));
        fs::remove_all(out);
    }

    TEST_CASE("aggregate skips failed runs") {
        RunSummary ok1, ok2, bad;
        ok1.ok = ok2.ok = true;
        ok1.mean_completion_s = 10;
        ok2.mean_completion_s = 20;
        ok1.core_bytes = 100;
        ok2.core_bytes = 300;
        ok1.mean_core_stress = 2.0;
        bad.ok = false;
        bad.mean_completion_s = 1000;
        const auto a = aggregate({ok1, bad, ok2}, {});
        CHECK(a.ok_runs == 2);
        CHECK_FALSE(a.all_ok());
        CHECK(a.mean_completion_s == doctest::Approx(15));
        CHECK(a.min_completion_s == doctest::Approx(10));
        CHECK(a.max_completion_s == doctest::Approx(20));
        CHECK(a.mean_core_bytes == doctest::Approx(200));
        CHECK(*a.mean_core_stress == doctest::Approx(2.0));
    }

    TEST_CASE("sweep") {
        SUBCASE("two swept axes are rejected") {
            ExperimentConfig c;
            c.loss = {0, 0.01};
            c.cbr = {0, 0.01};
            CHECK_THROWS_AS(sweep(c), ConfigError);
        }
        SUBCASE("rows follow axis order") {
            const auto out = scratch("sweep");
            ExperimentConfig c = demo_config(out);
            c.runs = 1;
            c.cbr = {0, 0.05, 0.10};
            SweepAxis axis = SweepAxis::Loss;
            const auto pts = sweep(c, &axis);
            CHECK(axis == SweepAxis::Cbr);
            REQUIRE(pts.size() == 3);
            const auto rows = read_csv(out / "sweep.csv");
            REQUIRE(rows.size() == 4);
            CHECK(rows[0] == std::vector<std::string>{"axis_value", "mean_completion_s", "mean_core_stress", "mean_core_bytes"});
            CHECK(rows[1][0] == "0.000000");
            CHECK(rows[2][0] == "5.000000");
            CHECK(rows[3][0] == "10.000000");
            CHECK(fs::exists(out / "cbr-5.00" / "summary.csv"));
            fs::remove_all(out);
        }
        SUBCASE("single entry equals run_experiment") {
            const auto out1 = scratch("sweep1");
            const auto out2 = scratch("exp1");
            ExperimentConfig c = demo_config(out1);
            c.runs = 2;
            const auto pts = sweep(c);
            c.out = out2;
            const auto one = run_experiment(c);
            REQUIRE(pts.size() == 1);
            CHECK(pts[0].mean_completion_s == one.mean_completion_s);
            CHECK(pts[0].mean_core_bytes == one.mean_core_bytes);
            fs::remove_all(out1);
            fs::remove_all(out2);
        }
    }

    TEST_CASE("compare_models") {
        CHECK(reduction_pct(5, 10) == doctest::Approx(50.0));
        CHECK(*reduction_pct(10, 10) == doctest::Approx(0.0));
        CHECK_FALSE(reduction_pct(1, 0).has_value());

        const auto out = scratch("compare");
        ExperimentConfig c = demo_config(out);
        c.runs = 1;
        const auto rows = compare_models(c, {ModelKind::P2P, ModelKind::P2P});
        REQUIRE(rows.size() == 2);
        const auto csv = read_csv(out / "compare.csv");
        REQUIRE(csv.size() == 3);
        CHECK(csv[0].size() == 8);
        CHECK(csv[1][5] == "0.000000");  // p2p vs itself
        CHECK(csv[1][7].empty());  // demo topology has no core links
        CHECK(csv[1][4].empty());  // no www in the set
        CHECK_THROWS_AS(compare_models(c, {}), ConfigError);
        fs::remove_all(out);
    }
}
