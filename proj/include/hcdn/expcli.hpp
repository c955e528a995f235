#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hcdn/protocols/models.hpp"

namespace hcdn {

struct ExperimentConfig {
    ModelKind model = ModelKind::Hybrid;
    std::optional<std::filesystem::path> topology_file;  // builtin topology when empty
    std::size_t file_size = 1 << 20;
    std::size_t piece_size = kDefaultPieceSize;
    int runs = 5;
    std::uint64_t base_seed = 1;
    std::vector<double> loss{0.0};  // fractions
    std::vector<double> cbr{0.0};   // fractions
    std::filesystem::path out = "out";
    SwarmParams swarm;
    FlowOptions www_flow;
    SimTime join_window = from_seconds(1);
    SimTime time_limit = from_seconds(3600);

    /// Throws ConfigError naming the offending field.
    void validate() const;
    ScenarioConfig scenario(std::uint64_t seed, double loss, double cbr) const;
};

Topology load_topology(const ExperimentConfig& cfg);

struct RunSummary {
    int index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::size_t clients = 0;
    std::size_t completed = 0;
    double mean_completion_s = 0;
    double min_completion_s = 0;
    double max_completion_s = 0;
    std::optional<double> mean_core_stress;
    std::uint64_t core_bytes = 0;
    std::uint64_t access_bytes = 0;
};

struct LinkAggregate {
    std::string link;
    std::string direction;
    double mean_bytes = 0;
    std::optional<double> mean_stress;  // over runs where the direction carried content
};

struct AggregateReport {
    double axis_value = 0;
    std::vector<RunSummary> runs;
    std::size_t ok_runs = 0;
    double mean_completion_s = 0;
    double min_completion_s = 0;
    double max_completion_s = 0;
    std::optional<double> mean_core_stress;
    double mean_core_bytes = 0;
    std::vector<LinkAggregate> links;

    bool all_ok() const { return ok_runs == runs.size(); }
};

/// Summarises one finished run.
RunSummary summarize_run(const Topology& topo, const RoutingTable& routes, const RunResult& r);

/// Aggregates over the successful runs only.
AggregateReport aggregate(std::vector<RunSummary> runs, const std::vector<std::vector<LinkAggregate>>& per_run_links);

/// `runs` seeded repetitions (seeds base_seed + i) at one loss/cbr point.
/// Writes out/run-i/{links,completions,cdf}.csv, out/summary.csv and
/// out/links_mean.csv.
AggregateReport run_point(const ExperimentConfig& cfg, const Topology& topo, double loss, double cbr,
                          const std::filesystem::path& out);

/// Single point experiment using cfg.loss[0] and cfg.cbr[0].
AggregateReport run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { Loss, Cbr };

/// At most one of loss/cbr may list several values. Each point is written
/// under out/<axis>-<value>/ and a sweep.csv row is emitted per point, in
/// axis order.
std::vector<AggregateReport> sweep(const ExperimentConfig& cfg, SweepAxis* axis_out = nullptr);

struct ModelComparison {
    ModelKind model;
    AggregateReport report;
};

/// Runs each model on identical seeds and topology; writes out/<model>/ and
/// out/compare.csv.
std::vector<ModelComparison> compare_models(const ExperimentConfig& cfg, const std::vector<ModelKind>& models);

/// Percentage reduction of `value` relative to `baseline`; empty when the
/// baseline is zero.
std::optional<double> reduction_pct(double value, double baseline);

/// Small redundancy scenario: one server behind a core router feeding three
/// single-LAN islands of three clients each.
Topology build_demo_topology();

/// Parses "5", "0,1,2" or "0:5:1" (start:stop:step, inclusive) into values.
std::vector<double> parse_value_list(const std::string& text);

}  // namespace hcdn
