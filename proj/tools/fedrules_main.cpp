// Command-line front end: dataset generation, single federated runs,
// mode/seed comparison sweeps, and offline rule evaluation.
//
// Exit codes: 0 success; 1 usage or configuration error; 2 I/O or runtime
// failure; 3 broken internal invariant.

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedrules/datasets.hpp"
#include "fedrules/harness.hpp"
#include "fedrules/metrics.hpp"
#include "fedrules/record_format.hpp"
#include "fedrules/rule_algebra.hpp"
#include "fedrules/text_util.hpp"

namespace {

struct GenerateArgs {
    std::string kind = "cub_like";
    std::string out;
    int points = 2000;
    std::uint64_t seed = 1;
    int features = 20;
    int groups = 5;
    int classes = 4;
    int conjunctions = 2;
    int conj_len = 2;
    double noise = 0.0;
    double definitely = 1.0;
    double probably = 0.0;
    double guessing = 0.0;
    double not_visible = 0.0;
    int digits = 10;
};

int do_generate(const GenerateArgs& args) {
    fedrules::FeatureSchema schema;
    std::vector<fedrules::ConceptDataPoint> points;
    if (args.kind == "cub_like") {
        fedrules::ConfidenceMix mix;
        mix.definitely = args.definitely;
        mix.probably = args.probably;
        mix.guessing = args.guessing;
        mix.not_visible = args.not_visible;
        fedrules::GeneratorSpec spec = fedrules::make_planted_spec(
            args.features, args.groups, args.classes, args.conjunctions, args.conj_len, mix,
            args.noise, args.points, args.seed);
        schema = spec.schema;
        points = fedrules::generate_cub_like(spec);
        std::cerr << "planted rules:\n";
        for (const fedrules::DnfRule& rule : spec.planted_rules)
            std::cerr << "  " << fedrules::to_text(rule, schema) << "\n";
    } else if (args.kind == "mnist_like") {
        fedrules::OverlaySpec spec =
            fedrules::make_overlay_spec(args.digits, args.points, args.seed);
        schema = fedrules::overlay_schema(spec);
        points = fedrules::generate_mnist_like(spec);
    } else {
        throw std::invalid_argument("unknown dataset kind: " + args.kind);
    }
    fedrules::write_dataset_file(args.out, schema, points);
    std::cout << "wrote " << points.size() << " points to " << args.out << "\n";
    return 0;
}

fedrules::RunConfig build_config(const std::string& config_path,
                                 const std::vector<std::string>& sets) {
    fedrules::RunConfig config;
    if (!config_path.empty()) config = fedrules::load_config_file(config_path);
    for (const std::string& kv : sets) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        fedrules::apply_config_kv(config, fedrules::trim(kv.substr(0, eq)),
                                  fedrules::trim(kv.substr(eq + 1)));
    }
    return config;
}

int do_run(const fedrules::RunConfig& config, int verbosity) {
    fedrules::RunReport report = fedrules::run(config, &std::cerr, verbosity);
    std::cout << "rounds executed: " << report.rounds.size() << "\n";
    for (const std::optional<fedrules::DnfRule>& rule : report.final_rules)
        if (rule.has_value())
            std::cout << fedrules::to_text(*rule, report.schema) << "\n";
    std::cout << fedrules::render_metrics_table(report.metrics);
    if (!config.output_dir.empty())
        std::cout << "report written to " << config.output_dir << "\n";
    return 0;
}

int do_compare(const fedrules::RunConfig& base, const std::string& modes_csv,
               const std::string& seeds_csv, int verbosity) {
    std::vector<fedrules::AggregationMode> modes;
    for (const std::string& tok : fedrules::split(modes_csv, ','))
        modes.push_back(fedrules::parse_mode(fedrules::trim(tok)));
    std::vector<std::uint64_t> seeds;
    for (const std::string& tok : fedrules::split(seeds_csv, ','))
        seeds.push_back(fedrules::parse_uint64(fedrules::trim(tok)));
    std::vector<fedrules::ModeSummary> summaries =
        fedrules::compare_modes(base, modes, seeds, &std::cerr, verbosity);
    std::cout << fedrules::render_comparison(summaries);
    return 0;
}

int do_eval_rule(const std::string& rules_path, const std::string& data_path,
                 double threshold) {
    fedrules::LoadedDataset loaded = fedrules::read_dataset_file(data_path);
    std::ifstream in(rules_path);
    if (!in) throw std::runtime_error("cannot open rule file: " + rules_path);

    std::vector<std::optional<fedrules::DnfRule>> per_class(
        static_cast<std::size_t>(loaded.schema.class_count()));
    std::string line;
    while (std::getline(in, line)) {
        std::string body = fedrules::trim(line);
        if (body.empty() || body[0] == '#') continue;
        fedrules::DnfRule rule = fedrules::parse_rule_text(body, loaded.schema);
        per_class[static_cast<std::size_t>(rule.class_index)] = std::move(rule);
    }

    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const std::string& name = loaded.schema.class_names[c];
        if (!per_class[c].has_value()) {
            std::cout << name << ": no rule (scored as always-false)\n";
            continue;
        }
        double score =
            fedrules::class_rule_accuracy(*per_class[c], loaded.points, threshold);
        std::cout << name << ": rule accuracy " << fedrules::format_double(score) << "\n";
    }
    std::cout << "mean rule accuracy "
              << fedrules::format_double(
                     fedrules::rule_accuracy(per_class, loaded.points, threshold))
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated training of concept classifiers with "
                 "uncertainty-scored logical-rule explanations"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset file");
    generate->add_option("--kind", gen.kind, "cub_like or mnist_like");
    generate->add_option("--out", gen.out, "output dataset file")->required();
    generate->add_option("--points", gen.points, "number of points");
    generate->add_option("--seed", gen.seed, "generator seed");
    generate->add_option("--features", gen.features, "feature count (cub_like)");
    generate->add_option("--groups", gen.groups, "feature group count (cub_like)");
    generate->add_option("--classes", gen.classes, "class count (cub_like)");
    generate->add_option("--conjunctions", gen.conjunctions,
                         "conjunctions per planted rule (cub_like)");
    generate->add_option("--conj-len", gen.conj_len,
                         "features per planted conjunction (cub_like)");
    generate->add_option("--noise", gen.noise, "feature flip probability (cub_like)");
    generate->add_option("--definitely", gen.definitely, "confidence mix fraction at 1.0");
    generate->add_option("--probably", gen.probably, "confidence mix fraction at 0.7");
    generate->add_option("--guessing", gen.guessing, "confidence mix fraction at 0.5");
    generate->add_option("--not-visible", gen.not_visible, "confidence mix fraction at 0.0");
    generate->add_option("--digits", gen.digits, "prototype count (mnist_like)");

    std::string config_path;
    std::vector<std::string> sets;
    int verbosity = 1;
    bool quiet = false;

    CLI::App* run_cmd = app.add_subcommand("run", "Execute one federated training run");
    run_cmd->add_option("--config", config_path, "key = value config file");
    run_cmd->add_option("--set", sets, "config override key=value (repeatable)");
    run_cmd->add_flag("-v,--verbose", verbosity, "increase logging (repeatable)");
    run_cmd->add_flag("--quiet", quiet, "silence progress logging");

    std::string modes_csv = "uncertainty,fedavg,no_uncertainty";
    std::string seeds_csv = "1";
    CLI::App* compare = app.add_subcommand("compare", "Sweep modes and seeds");
    compare->add_option("--config", config_path, "key = value config file");
    compare->add_option("--set", sets, "config override key=value (repeatable)");
    compare->add_option("--modes", modes_csv, "comma-separated aggregation modes");
    compare->add_option("--seeds", seeds_csv, "comma-separated seeds");
    compare->add_flag("-v,--verbose", verbosity, "increase logging (repeatable)");
    compare->add_flag("--quiet", quiet, "silence progress logging");

    std::string rules_path, data_path;
    double threshold = 0.5;
    CLI::App* eval_rule = app.add_subcommand("eval-rule", "Score a rule file on a dataset");
    eval_rule->add_option("--rules", rules_path, "rule text file (one rule per line)")
        ->required();
    eval_rule->add_option("--data", data_path, "dataset file")->required();
    eval_rule->add_option("--threshold", threshold, "satisfaction threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (quiet) verbosity = 0;

    try {
        if (*generate) return do_generate(gen);
        if (*run_cmd) return do_run(build_config(config_path, sets), verbosity);
        if (*compare) return do_compare(build_config(config_path, sets), modes_csv,
                                        seeds_csv, verbosity);
        if (*eval_rule) return do_eval_rule(rules_path, data_path, threshold);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
