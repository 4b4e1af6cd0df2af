#include "fedrules/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedrules/fl_client.hpp"
#include "fedrules/record_format.hpp"
#include "fedrules/text_util.hpp"

namespace fedrules {

void RunConfig::validate() const {
    if (dataset.empty()) throw std::invalid_argument("config: dataset must be set");
    if (clients < 1) throw std::invalid_argument("config: clients must be >= 1");
    if (rounds_max < 0) throw std::invalid_argument("config: rounds_max must be >= 0");
    if (!(target_val_accuracy > 0.0))
        throw std::invalid_argument("config: target_val_accuracy must be positive");
    if (epochs_per_round < 0)
        throw std::invalid_argument("config: epochs_per_round must be >= 0");
    if (top_m < 1) throw std::invalid_argument("config: top_m must be >= 1");
    if (!(relevance_threshold > 0.0 && relevance_threshold < 1.0))
        throw std::invalid_argument("config: relevance_threshold must lie in (0,1)");
    if (!(satisfaction_threshold > 0.0 && satisfaction_threshold < 1.0))
        throw std::invalid_argument("config: satisfaction_threshold must lie in (0,1)");
    if (!(val_frac >= 0.0 && val_frac < 0.5) || !(test_frac >= 0.0 && test_frac < 0.5))
        throw std::invalid_argument("config: split fractions must lie in [0, 0.5)");
    if (!(local_test_frac >= 0.0 && local_test_frac < 1.0))
        throw std::invalid_argument("config: local_test_frac must lie in [0,1)");
    if (max_conjunctions < 1)
        throw std::invalid_argument("config: max_conjunctions must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("config: learning_rate must be positive");
    if (dataset == "cub_like") {
        if (gen_points < 1) throw std::invalid_argument("config: gen_points must be >= 1");
        if (!(gen_noise >= 0.0 && gen_noise <= 1.0))
            throw std::invalid_argument("config: gen_noise must lie in [0,1]");
        gen_mix.validate();
    } else if (dataset == "mnist_like") {
        if (gen_points < 1) throw std::invalid_argument("config: gen_points must be >= 1");
        if (overlay_digits < 2)
            throw std::invalid_argument("config: overlay_digits must be >= 2");
    }
    if (degraded_clients < 0 || degraded_clients > clients)
        throw std::invalid_argument("config: degraded_clients must lie in [0, clients]");
    if (degraded_clients > 0) {
        degraded_mix.validate();
        if (!(degraded_noise >= 0.0 && degraded_noise <= 1.0))
            throw std::invalid_argument("config: degraded_noise must lie in [0,1]");
    }
}

RunReport run(const RunConfig& config, std::ostream* log, int verbosity) {
    auto started = std::chrono::steady_clock::now();
    config.validate();

    FeatureSchema schema;
    std::vector<ConceptDataPoint> data;
    if (config.dataset == "cub_like") {
        GeneratorSpec spec = make_planted_spec(
            config.gen_features, config.gen_groups, config.gen_classes,
            config.gen_conjunctions, config.gen_conj_len, config.gen_mix, config.gen_noise,
            config.gen_points, config.seed);
        schema = spec.schema;
        data = generate_cub_like(spec);
    } else if (config.dataset == "mnist_like") {
        OverlaySpec spec = make_overlay_spec(config.overlay_digits, config.gen_points,
                                             config.seed);
        schema = overlay_schema(spec);
        data = generate_mnist_like(spec);
    } else {
        LoadedDataset loaded = read_dataset_file(config.dataset);
        schema = std::move(loaded.schema);
        data = std::move(loaded.points);
    }

    FederatedSplit split =
        partition(data, config.clients, config.val_frac, config.test_frac, config.seed);
    if (config.rounds_max > 0 && split.validation.empty())
        throw std::invalid_argument("validation set is empty; increase val_frac");
    if (split.test.empty())
        throw std::invalid_argument("test set is empty; increase test_frac");

    for (int k = 0; k < config.degraded_clients; ++k) {
        std::size_t slot = static_cast<std::size_t>(k);
        split.client_shards[slot] = degrade_shard(
            split.client_shards[slot], schema, config.degraded_mix, config.degraded_noise,
            derive_seed(config.seed, {kSeedDegrade, static_cast<std::uint64_t>(k)}));
    }

    // The ablation ignores confidence everywhere, evaluation included.
    if (config.mode == AggregationMode::no_uncertainty) {
        for (ConceptDataPoint& p : split.validation) std::fill(p.u.begin(), p.u.end(), 1.0);
        for (ConceptDataPoint& p : split.test) std::fill(p.u.begin(), p.u.end(), 1.0);
    }

    ClientConfig cc;
    cc.local_epochs = config.epochs_per_round;
    cc.learning_rate = config.learning_rate;
    cc.relevance_threshold = config.relevance_threshold;
    cc.satisfaction_threshold = config.satisfaction_threshold;
    cc.local_test_frac = config.local_test_frac;
    cc.max_conjunctions = config.max_conjunctions;
    cc.ignore_uncertainty = config.mode == AggregationMode::no_uncertainty;

    std::vector<Client> clients;
    clients.reserve(static_cast<std::size_t>(config.clients));
    for (int k = 0; k < config.clients; ++k)
        clients.emplace_back(k, schema, std::move(split.client_shards[static_cast<std::size_t>(k)]),
                             cc, config.seed);

    ServerConfig sc;
    sc.top_m = config.top_m;
    sc.mode = config.mode;
    sc.satisfaction_threshold = config.satisfaction_threshold;
    sc.tally_on_acceptance = config.tally_on_acceptance;

    RunReport report;
    report.config = config;
    report.schema = schema;

    ConceptPredictor global_model(schema.feature_count(), schema.class_count());
    std::optional<ParamSnapshot> global_params;
    for (int r = 0; r < config.rounds_max; ++r) {
        std::vector<RuleReport> reports;
        reports.reserve(clients.size());
        for (Client& client : clients) reports.push_back(client.local_round(global_params));

        GlobalRound round = server_round(reports, split.validation, schema, sc, r);
        global_params = round.global_params;
        restore(global_model, *global_params);
        double val_acc = model_accuracy(global_model, split.validation);
        report.validation_accuracy.push_back(val_acc);

        if (log != nullptr && verbosity >= 1) {
            *log << "round " << r << ": validation accuracy "
                 << format_double(val_acc) << "\n";
            if (verbosity >= 2) {
                for (const ClassAggregation& agg : round.per_class) {
                    for (const AggregationStep& s : agg.trace)
                        *log << "  class "
                             << schema.class_names[static_cast<std::size_t>(agg.class_index)]
                             << " rank " << s.group_rank << ' ' << s.op << ' '
                             << format_double(s.acc_before) << " -> "
                             << format_double(s.acc_candidate)
                             << (s.accepted ? " accepted" : " rejected") << "\n";
                    if (agg.global_rule.has_value())
                        *log << "  " << to_text(*agg.global_rule, schema) << "\n";
                }
            }
        }

        report.rounds.push_back(std::move(round));
        if (val_acc >= config.target_val_accuracy) break;
    }

    report.final_rules.assign(static_cast<std::size_t>(schema.class_count()), std::nullopt);
    if (!report.rounds.empty()) {
        const GlobalRound& last = report.rounds.back();
        for (int c = 0; c < schema.class_count(); ++c)
            report.final_rules[static_cast<std::size_t>(c)] = last.rule_for(c);
        report.final_params = last.global_params;
    } else {
        report.final_params = snapshot(global_model);
    }

    report.metrics = compute_metrics(report.final_rules, global_model, schema, split.test,
                                     config.satisfaction_threshold);
    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!config.output_dir.empty()) write_run_outputs(report);
    return report;
}

std::vector<ModeSummary> compare_modes(const RunConfig& base,
                                       const std::vector<AggregationMode>& modes,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::ostream* log, int verbosity) {
    if (modes.empty()) throw std::invalid_argument("compare: need at least one mode");
    if (seeds.empty()) throw std::invalid_argument("compare: need at least one seed");

    std::vector<ModeSummary> summaries;
    for (AggregationMode mode : modes) {
        std::vector<std::array<double, 4>> samples;
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.mode = mode;
            cfg.seed = seed;
            cfg.output_dir.clear();
            if (log != nullptr && verbosity >= 1)
                *log << "compare: mode " << to_string(mode) << " seed " << seed << "\n";
            RunReport r = run(cfg, log, verbosity >= 2 ? verbosity : 0);
            samples.push_back({r.metrics.model_accuracy, r.metrics.rule_accuracy,
                               r.metrics.rule_fidelity, r.metrics.rule_uncertainty});
        }
        ModeSummary summary;
        summary.mode = mode;
        summary.runs = static_cast<int>(samples.size());
        for (int i = 0; i < 4; ++i) {
            double sum = 0.0;
            for (const auto& s : samples) sum += s[static_cast<std::size_t>(i)];
            summary.mean[i] = sum / static_cast<double>(samples.size());
            double sq = 0.0;
            for (const auto& s : samples) {
                double d = s[static_cast<std::size_t>(i)] - summary.mean[i];
                sq += d * d;
            }
            summary.stdev[i] = samples.size() > 1
                                   ? std::sqrt(sq / static_cast<double>(samples.size() - 1))
                                   : 0.0;
        }
        summaries.push_back(summary);
    }
    return summaries;
}

std::string render_comparison(const std::vector<ModeSummary>& summaries) {
    static const char* kRows[4] = {"model accuracy", "rule accuracy", "rule fidelity",
                                   "rule uncertainty"};
    char buf[128];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-18s", "metric");
    out += buf;
    for (const ModeSummary& s : summaries) {
        std::snprintf(buf, sizeof(buf), " %22s", to_string(s.mode).c_str());
        out += buf;
    }
    out += '\n';
    for (int i = 0; i < 4; ++i) {
        std::snprintf(buf, sizeof(buf), "%-18s", kRows[i]);
        out += buf;
        for (const ModeSummary& s : summaries) {
            std::snprintf(buf, sizeof(buf), "       %6.2f%% ± %5.2f%%", s.mean[i] * 100.0,
                          s.stdev[i] * 100.0);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "dataset") config.dataset = value;
    else if (key == "clients") config.clients = static_cast<int>(parse_int(value));
    else if (key == "rounds_max") config.rounds_max = static_cast<int>(parse_int(value));
    else if (key == "target_val_accuracy") config.target_val_accuracy = parse_double(value);
    else if (key == "epochs_per_round")
        config.epochs_per_round = static_cast<int>(parse_int(value));
    else if (key == "top_m") config.top_m = static_cast<int>(parse_int(value));
    else if (key == "relevance_threshold") config.relevance_threshold = parse_double(value);
    else if (key == "satisfaction_threshold")
        config.satisfaction_threshold = parse_double(value);
    else if (key == "mode") config.mode = parse_mode(value);
    else if (key == "seed") config.seed = parse_uint64(value);
    else if (key == "val_frac") config.val_frac = parse_double(value);
    else if (key == "test_frac") config.test_frac = parse_double(value);
    else if (key == "local_test_frac") config.local_test_frac = parse_double(value);
    else if (key == "max_conjunctions")
        config.max_conjunctions = static_cast<int>(parse_int(value));
    else if (key == "learning_rate") config.learning_rate = parse_double(value);
    else if (key == "tally_on_acceptance") {
        if (value == "true" || value == "1") config.tally_on_acceptance = true;
        else if (value == "false" || value == "0") config.tally_on_acceptance = false;
        else throw std::invalid_argument("config: tally_on_acceptance must be true/false");
    }
    else if (key == "gen_points") config.gen_points = static_cast<int>(parse_int(value));
    else if (key == "gen_features") config.gen_features = static_cast<int>(parse_int(value));
    else if (key == "gen_groups") config.gen_groups = static_cast<int>(parse_int(value));
    else if (key == "gen_classes") config.gen_classes = static_cast<int>(parse_int(value));
    else if (key == "gen_conjunctions")
        config.gen_conjunctions = static_cast<int>(parse_int(value));
    else if (key == "gen_conj_len") config.gen_conj_len = static_cast<int>(parse_int(value));
    else if (key == "gen_noise") config.gen_noise = parse_double(value);
    else if (key == "mix_definitely") config.gen_mix.definitely = parse_double(value);
    else if (key == "mix_probably") config.gen_mix.probably = parse_double(value);
    else if (key == "mix_guessing") config.gen_mix.guessing = parse_double(value);
    else if (key == "mix_not_visible") config.gen_mix.not_visible = parse_double(value);
    else if (key == "overlay_digits")
        config.overlay_digits = static_cast<int>(parse_int(value));
    else if (key == "degraded_clients")
        config.degraded_clients = static_cast<int>(parse_int(value));
    else if (key == "degraded_definitely") config.degraded_mix.definitely = parse_double(value);
    else if (key == "degraded_probably") config.degraded_mix.probably = parse_double(value);
    else if (key == "degraded_guessing") config.degraded_mix.guessing = parse_double(value);
    else if (key == "degraded_not_visible")
        config.degraded_mix.not_visible = parse_double(value);
    else if (key == "degraded_noise") config.degraded_noise = parse_double(value);
    else if (key == "output_dir") config.output_dir = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key = value");
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        apply_config_kv(config, key, value);
    }
    return config;
}

void write_run_outputs(const RunReport& report) {
    namespace fs = std::filesystem;
    if (report.config.output_dir.empty())
        throw std::invalid_argument("write_run_outputs: no output directory configured");
    fs::path dir(report.config.output_dir);
    fs::create_directories(dir);

    auto write_text = [](const fs::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
        out << text;
        if (!out.good()) throw std::runtime_error("failed writing: " + path.string());
    };

    write_text(dir / "report.json", run_report_to_json(report).dump(2) + "\n");
    write_text(dir / "metrics.txt", render_metrics_table(report.metrics));

    std::string rules_text;
    for (const std::optional<DnfRule>& rule : report.final_rules) {
        if (rule.has_value()) rules_text += to_text(*rule, report.schema) + "\n";
    }
    write_text(dir / "rules.txt", rules_text);

    ConceptPredictor final_model(report.schema.feature_count(), report.schema.class_count());
    restore(final_model, report.final_params);
    save_checkpoint_file((dir / "model.ckpt").string(), final_model);
}

}  // namespace fedrules
