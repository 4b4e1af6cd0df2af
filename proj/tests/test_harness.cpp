#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedrules/harness.hpp"
#include "fedrules/record_format.hpp"
#include "fedrules/text_util.hpp"

using namespace fedrules;
namespace fs = std::filesystem;

namespace {

// Small, fast planted-data run used across the cases below.
RunConfig tiny_config() {
    RunConfig cfg;
    cfg.dataset = "cub_like";
    cfg.clients = 3;
    cfg.rounds_max = 3;
    cfg.target_val_accuracy = 2.0;  // unreachable: always run rounds_max rounds
    cfg.epochs_per_round = 20;
    cfg.learning_rate = 0.5;
    cfg.seed = 17;
    cfg.gen_points = 300;
    cfg.gen_features = 12;
    cfg.gen_groups = 4;
    cfg.gen_classes = 2;
    cfg.gen_conjunctions = 2;
    cfg.gen_conj_len = 2;
    cfg.gen_noise = 0.05;
    cfg.gen_mix.definitely = 0.6;
    cfg.gen_mix.probably = 0.3;
    cfg.gen_mix.guessing = 0.1;
    cfg.gen_mix.not_visible = 0.0;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("fedrules_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("config validation rejects out-of-range settings") {
    CHECK_NOTHROW(RunConfig{}.validate());

    auto broken = [](auto&& mutate) {
        RunConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    };
    broken([](RunConfig& c) { c.clients = 0; });
    broken([](RunConfig& c) { c.rounds_max = -1; });
    broken([](RunConfig& c) { c.top_m = 0; });
    broken([](RunConfig& c) { c.relevance_threshold = 0.0; });
    broken([](RunConfig& c) { c.satisfaction_threshold = 1.0; });
    broken([](RunConfig& c) { c.val_frac = 0.5; });
    broken([](RunConfig& c) { c.local_test_frac = 1.0; });
    broken([](RunConfig& c) { c.max_conjunctions = 0; });
    broken([](RunConfig& c) { c.learning_rate = 0.0; });
    broken([](RunConfig& c) { c.gen_points = 0; });
    broken([](RunConfig& c) { c.gen_noise = 1.5; });
    broken([](RunConfig& c) { c.gen_mix.definitely = 0.5; });  // mix no longer sums to 1
    broken([](RunConfig& c) { c.degraded_clients = c.clients + 1; });
    broken([](RunConfig& c) { c.dataset.clear(); });
    broken([](RunConfig& c) { c.target_val_accuracy = 0.0; });
    broken([](RunConfig& c) {
        c.degraded_clients = 1;
        c.degraded_mix.definitely = 2.0;
    });
}

TEST_CASE("a full run produces an internally consistent report") {
    RunConfig cfg = tiny_config();
    RunReport report = run(cfg);

    REQUIRE(report.rounds.size() == 3);  // target is unreachable
    REQUIRE(report.validation_accuracy.size() == 3);
    for (double acc : report.validation_accuracy) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    CHECK(report.schema.feature_count() == 12);
    CHECK(report.schema.class_count() == 2);
    REQUIRE(report.final_rules.size() == 2);
    CHECK(report.final_params.values == report.rounds.back().global_params.values);
    CHECK(report.duration_seconds > 0.0);

    for (const GlobalRound& round : report.rounds) {
        REQUIRE(round.weights.size() == 3);
        double sum = 0.0;
        for (double w : round.weights) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        CHECK(round.client_ids == std::vector<int>{0, 1, 2});

        // Aggregation traces: accepted steps strictly improve, the running
        // score carries through, rejected steps leave it unchanged.
        for (const ClassAggregation& agg : round.per_class) {
            double running = -1.0;
            for (const AggregationStep& step : agg.trace) {
                if (step.op == "init") {
                    running = step.acc_before;
                    CHECK(step.accepted);
                    continue;
                }
                CHECK(step.acc_before == running);
                if (step.accepted) {
                    CHECK(step.acc_candidate > step.acc_before);
                    running = step.acc_candidate;
                }
            }
            if (agg.global_rule.has_value())
                CHECK_FALSE(internally_conflicted(*agg.global_rule, report.schema));
        }
    }

    // The published metrics must be reproducible from config + artifacts:
    // rebuild the dataset and split, restore the model, recompute.
    GeneratorSpec spec = make_planted_spec(
        cfg.gen_features, cfg.gen_groups, cfg.gen_classes, cfg.gen_conjunctions,
        cfg.gen_conj_len, cfg.gen_mix, cfg.gen_noise, cfg.gen_points, cfg.seed);
    FederatedSplit split = partition(generate_cub_like(spec), cfg.clients, cfg.val_frac,
                                     cfg.test_frac, cfg.seed);
    ConceptPredictor model(12, 2);
    restore(model, report.final_params);
    MetricsReport again = compute_metrics(report.final_rules, model, report.schema,
                                          split.test, cfg.satisfaction_threshold);
    CHECK(again.model_accuracy == report.metrics.model_accuracy);
    CHECK(again.rule_accuracy == report.metrics.rule_accuracy);
    CHECK(again.rule_fidelity == report.metrics.rule_fidelity);
    CHECK(again.rule_uncertainty == report.metrics.rule_uncertainty);
}

TEST_CASE("zero rounds still yields a scored baseline") {
    RunConfig cfg = tiny_config();
    cfg.rounds_max = 0;
    RunReport report = run(cfg);
    CHECK(report.rounds.empty());
    CHECK(report.validation_accuracy.empty());
    for (const auto& rule : report.final_rules) CHECK_FALSE(rule.has_value());
    CHECK(report.metrics.rule_accuracy >= 0.0);
    CHECK(report.metrics.model_accuracy >= 0.0);
}

TEST_CASE("a clean confident run reaches the accuracy target early") {
    RunConfig cfg = tiny_config();
    cfg.gen_noise = 0.0;
    cfg.gen_mix = ConfidenceMix{};  // all definitely
    cfg.target_val_accuracy = 0.9;
    cfg.rounds_max = 30;
    cfg.epochs_per_round = 40;
    RunReport report = run(cfg);
    REQUIRE(!report.rounds.empty());
    CHECK(report.rounds.size() < 30);
    CHECK(report.validation_accuracy.back() >= 0.9);
    for (std::size_t i = 0; i + 1 < report.validation_accuracy.size(); ++i)
        CHECK(report.validation_accuracy[i] < 0.9);  // stopped at the first hit
}

TEST_CASE("equal configurations reproduce the report byte for byte") {
    RunConfig cfg = tiny_config();
    RunReport a = run(cfg);
    RunReport b = run(cfg);
    CHECK(run_report_to_json(a).dump(2) == run_report_to_json(b).dump(2));

    RunConfig other = cfg;
    other.seed = cfg.seed + 1;
    RunReport c = run(other);
    CHECK(run_report_to_json(a).dump(2) != run_report_to_json(c).dump(2));
}

TEST_CASE("config files set fields, comments and blanks are skipped") {
    fs::path dir = fresh_dir("config");
    fs::create_directories(dir);
    fs::path file = dir / "run.cfg";
    std::ofstream out(file);
    out << "# experiment setup\n"
        << "\n"
        << "dataset = cub_like\n"
        << "clients = 7\n"
        << "mode = fedavg\n"
        << "seed = 12345678901234\n"
        << "gen_noise = 0.25\n"
        << "mix_definitely = 0.5\n"
        << "mix_guessing = 0.5\n"
        << "tally_on_acceptance = true\n"
        << "output_dir = /tmp/somewhere\n";
    out.close();

    RunConfig cfg = load_config_file(file.string());
    CHECK(cfg.clients == 7);
    CHECK(cfg.mode == AggregationMode::fedavg);
    CHECK(cfg.seed == 12345678901234ULL);
    CHECK(cfg.gen_noise == 0.25);
    CHECK(cfg.gen_mix.definitely == 0.5);
    CHECK(cfg.gen_mix.guessing == 0.5);
    CHECK(cfg.tally_on_acceptance);
    CHECK(cfg.output_dir == "/tmp/somewhere");

    RunConfig kv;
    CHECK_THROWS_AS(apply_config_kv(kv, "no_such_key", "1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_kv(kv, "mode", "bogus"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_kv(kv, "tally_on_acceptance", "maybe"),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_config_file((dir / "missing.cfg").string()), std::runtime_error);

    fs::path bad = dir / "bad.cfg";
    std::ofstream bout(bad);
    bout << "clients 7\n";
    bout.close();
    CHECK_THROWS_AS(load_config_file(bad.string()), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("mode comparison aggregates per-seed runs") {
    RunConfig cfg = tiny_config();
    cfg.rounds_max = 2;
    cfg.epochs_per_round = 15;
    cfg.gen_points = 200;

    std::vector<ModeSummary> summaries =
        compare_modes(cfg, {AggregationMode::uncertainty}, {1, 2});
    REQUIRE(summaries.size() == 1);
    CHECK(summaries[0].runs == 2);

    RunConfig r1 = cfg;
    r1.seed = 1;
    RunConfig r2 = cfg;
    r2.seed = 2;
    double expect_mean =
        (run(r1).metrics.model_accuracy + run(r2).metrics.model_accuracy) / 2.0;
    CHECK(summaries[0].mean[0] == doctest::Approx(expect_mean).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(summaries[0].stdev[i] >= 0.0);

    std::string table = render_comparison(summaries);
    CHECK(table.find("uncertainty") != std::string::npos);
    CHECK(table.find("model accuracy") != std::string::npos);

    CHECK_THROWS_AS(compare_modes(cfg, {}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(compare_modes(cfg, {AggregationMode::fedavg}, {}),
                    std::invalid_argument);
}

TEST_CASE("run outputs land on disk and reload") {
    fs::path dir = fresh_dir("outputs");
    RunConfig cfg = tiny_config();
    cfg.rounds_max = 2;
    cfg.output_dir = dir.string();
    RunReport report = run(cfg);

    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "metrics.txt"));
    CHECK(fs::exists(dir / "rules.txt"));
    CHECK(fs::exists(dir / "model.ckpt"));

    nlohmann::json j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j.contains("config"));
    CHECK(j.contains("schema"));
    CHECK(j.contains("rounds"));
    CHECK(j.contains("metrics"));
    CHECK(j.contains("final_rules"));
    CHECK_FALSE(j.contains("duration_seconds"));
    CHECK(j["config"]["seed"] == 17);

    // The serialized report equals the in-memory serialization exactly.
    CHECK(slurp(dir / "report.json") == run_report_to_json(report).dump(2) + "\n");

    CHECK(slurp(dir / "metrics.txt").find("model accuracy") != std::string::npos);

    // Every rule line parses back under the run's schema.
    std::stringstream rules(slurp(dir / "rules.txt"));
    std::string line;
    int parsed = 0;
    while (std::getline(rules, line)) {
        if (trim(line).empty()) continue;
        CHECK_NOTHROW(parse_rule_text(line, report.schema));
        ++parsed;
    }
    int present = 0;
    for (const auto& rule : report.final_rules)
        if (rule.has_value()) ++present;
    CHECK(parsed == present);

    ConceptPredictor model = load_checkpoint_file((dir / "model.ckpt").string());
    CHECK(snapshot(model).values == report.final_params.values);
    fs::remove_all(dir);
}

TEST_CASE("overlay runs emit single-feature conjunctions only") {
    RunConfig cfg;
    cfg.dataset = "mnist_like";
    cfg.overlay_digits = 4;
    cfg.gen_points = 400;
    cfg.clients = 3;
    cfg.rounds_max = 2;
    cfg.target_val_accuracy = 2.0;
    cfg.epochs_per_round = 15;
    cfg.learning_rate = 0.5;
    cfg.seed = 5;
    RunReport report = run(cfg);
    CHECK(report.schema.class_names == std::vector<std::string>{"even", "odd"});
    CHECK(report.schema.group_count() == 1);
    for (const GlobalRound& round : report.rounds)
        for (const ClassAggregation& agg : round.per_class) {
            if (!agg.global_rule.has_value()) continue;
            for (const Conjunction& conj : agg.global_rule->conjunctions)
                CHECK(conj.features.size() == 1);  // one exclusive group
        }
}

TEST_CASE("a dataset file path feeds the run directly") {
    fs::path dir = fresh_dir("dataset_file");
    fs::create_directories(dir);
    fs::path file = dir / "points.txt";

    ConfidenceMix mix;
    GeneratorSpec spec = make_planted_spec(8, 4, 2, 1, 2, mix, 0.0, 200, 7);
    write_dataset_file(file.string(), spec.schema, generate_cub_like(spec));

    RunConfig cfg;
    cfg.dataset = file.string();
    cfg.clients = 2;
    cfg.rounds_max = 2;
    cfg.target_val_accuracy = 2.0;
    cfg.epochs_per_round = 20;
    cfg.learning_rate = 0.5;
    cfg.seed = 7;
    RunReport report = run(cfg);
    CHECK(report.schema.feature_names == spec.schema.feature_names);
    CHECK(report.rounds.size() == 2);

    cfg.dataset = (dir / "nope.txt").string();
    CHECK_THROWS_AS(run(cfg), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("progress logging emits per-round and per-decision lines") {
    RunConfig cfg = tiny_config();
    cfg.rounds_max = 1;
    std::ostringstream log;
    run(cfg, &log, 2);
    std::string text = log.str();
    CHECK(text.find("round 0") != std::string::npos);
    CHECK(text.find("validation accuracy") != std::string::npos);
    CHECK(text.find("init") != std::string::npos);
}
