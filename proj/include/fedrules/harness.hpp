#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedrules/concept_model.hpp"
#include "fedrules/datasets.hpp"
#include "fedrules/fl_server.hpp"
#include "fedrules/metrics.hpp"

namespace fedrules {

// Everything that identifies an experiment. Two runs with equal configs
// (seed included) must produce byte-identical reports.
struct RunConfig {
    // "cub_like", "mnist_like", or a dataset file path.
    std::string dataset = "cub_like";
    int clients = 10;
    int rounds_max = 20;
    double target_val_accuracy = 0.95;
    int epochs_per_round = 30;
    int top_m = 3;
    double relevance_threshold = 0.5;
    double satisfaction_threshold = 0.5;
    AggregationMode mode = AggregationMode::uncertainty;
    std::uint64_t seed = 1;
    double val_frac = 0.05;
    double test_frac = 0.05;
    double local_test_frac = 0.2;
    int max_conjunctions = 5;
    double learning_rate = 0.1;
    bool tally_on_acceptance = false;

    // Planted-rule generator ("cub_like").
    int gen_points = 2000;
    int gen_features = 20;
    int gen_groups = 5;
    int gen_classes = 4;
    int gen_conjunctions = 2;
    int gen_conj_len = 2;
    double gen_noise = 0.0;
    ConfidenceMix gen_mix;

    // Overlay generator ("mnist_like").
    int overlay_digits = 10;

    // Heterogeneous-confidence scenario: the first `degraded_clients`
    // shards get their confidence re-labelled from degraded_mix and their
    // features flipped with degraded_noise.
    int degraded_clients = 0;
    ConfidenceMix degraded_mix;
    double degraded_noise = 0.0;

    // When non-empty, run() writes report/metrics/rules/model files here.
    std::string output_dir;

    void validate() const;
};

struct RunReport {
    RunConfig config;
    FeatureSchema schema;
    std::vector<GlobalRound> rounds;
    std::vector<double> validation_accuracy;  // after each round
    std::vector<std::optional<DnfRule>> final_rules;  // one slot per class
    ParamSnapshot final_params;
    MetricsReport metrics;
    // Wall-clock seconds; informational only, never serialized into the
    // canonical report (reports must be reproducible byte-for-byte).
    double duration_seconds = 0.0;
};

// Executes the full federated loop: build or load the dataset, partition,
// iterate client rounds + server aggregation until the validation model
// accuracy reaches the target or rounds_max is hit, then score the final
// rules and model on the held-out test set. `log` (optional) receives
// progress lines: verbosity 1 = one line per round, 2 = aggregation
// decisions as well.
RunReport run(const RunConfig& config, std::ostream* log = nullptr, int verbosity = 0);

struct ModeSummary {
    AggregationMode mode = AggregationMode::uncertainty;
    int runs = 0;
    // Order: model accuracy, rule accuracy, rule fidelity, rule uncertainty.
    double mean[4] = {0, 0, 0, 0};
    double stdev[4] = {0, 0, 0, 0};
};

// Runs every (mode, seed) pair on top of the base config.
std::vector<ModeSummary> compare_modes(const RunConfig& base,
                                       const std::vector<AggregationMode>& modes,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::ostream* log = nullptr, int verbosity = 0);

std::string render_comparison(const std::vector<ModeSummary>& summaries);

// Flat `key = value` config document; '#' starts a comment line.
RunConfig load_config_file(const std::string& path);
void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value);

// Writes report.json, metrics.txt, rules.txt, and model.ckpt under
// config.output_dir (created if needed).
void write_run_outputs(const RunReport& report);

}  // namespace fedrules
