#include "fedrules/record_format.hpp"

#include <stdexcept>

namespace fedrules {

using nlohmann::json;

json schema_to_json(const FeatureSchema& schema) {
    json features = json::array();
    for (int f = 0; f < schema.feature_count(); ++f)
        features.push_back({{"name", schema.feature_names[static_cast<std::size_t>(f)]},
                            {"group", schema.group_of[static_cast<std::size_t>(f)]}});
    return {{"features", features}, {"classes", schema.class_names}};
}

FeatureSchema schema_from_json(const json& j) {
    FeatureSchema schema;
    for (const json& f : j.at("features")) {
        schema.feature_names.push_back(f.at("name").get<std::string>());
        schema.group_of.push_back(f.at("group").get<int>());
    }
    schema.class_names = j.at("classes").get<std::vector<std::string>>();
    schema.validate();
    return schema;
}

json rule_to_json(const DnfRule& rule, const FeatureSchema& schema) {
    validate_rule(rule, schema);
    json conjunctions = json::array();
    for (const Conjunction& c : rule.conjunctions) {
        json names = json::array();
        for (int f : c.features)
            names.push_back(schema.feature_names[static_cast<std::size_t>(f)]);
        conjunctions.push_back({{"features", names}, {"uncertainty", c.uncertainty}});
    }
    return {{"class", schema.class_names[static_cast<std::size_t>(rule.class_index)]},
            {"conjunctions", conjunctions},
            {"uncertainty", rule.uncertainty},
            {"text", to_text(rule, schema)}};
}

DnfRule rule_from_json(const json& j, const FeatureSchema& schema) {
    DnfRule rule;
    rule.class_index = schema.class_index(j.at("class").get<std::string>());
    if (rule.class_index < 0) throw std::invalid_argument("rule record: unknown class");
    for (const json& cj : j.at("conjunctions")) {
        std::vector<int> features;
        for (const json& name : cj.at("features")) {
            int f = schema.feature_index(name.get<std::string>());
            if (f < 0) throw std::invalid_argument("rule record: unknown feature");
            features.push_back(f);
        }
        rule.conjunctions.push_back(
            Conjunction::of(std::move(features), cj.at("uncertainty").get<double>()));
    }
    rule.uncertainty = j.at("uncertainty").get<double>();
    validate_rule(rule, schema);
    return rule;
}

json rule_report_to_json(const RuleReport& report, const FeatureSchema& schema) {
    json entries = json::array();
    for (const RuleReportEntry& e : report.entries)
        entries.push_back(
            {{"rule", rule_to_json(e.rule, schema)}, {"local_accuracy", e.local_accuracy}});
    return {{"client_id", report.client_id},
            {"entries", entries},
            {"sample_count", report.sample_count},
            {"params",
             {{"feature_count", report.params.feature_count},
              {"class_count", report.params.class_count},
              {"values", report.params.values}}}};
}

RuleReport rule_report_from_json(const json& j, const FeatureSchema& schema) {
    RuleReport report;
    report.client_id = j.at("client_id").get<int>();
    for (const json& e : j.at("entries")) {
        RuleReportEntry entry;
        entry.rule = rule_from_json(e.at("rule"), schema);
        entry.local_accuracy = e.at("local_accuracy").get<double>();
        report.entries.push_back(std::move(entry));
    }
    report.sample_count = j.at("sample_count").get<long long>();
    const json& p = j.at("params");
    report.params.feature_count = p.at("feature_count").get<int>();
    report.params.class_count = p.at("class_count").get<int>();
    report.params.values = p.at("values").get<std::vector<double>>();
    return report;
}

json global_round_to_json(const GlobalRound& round, const FeatureSchema& schema) {
    json per_class = json::array();
    for (const ClassAggregation& agg : round.per_class) {
        json ranked = json::array();
        for (const RuleGroup& g : agg.ranked)
            ranked.push_back({{"rule", to_text(g.rule, schema)},
                              {"clients", g.client_ids},
                              {"score", g.score}});
        json trace = json::array();
        for (const AggregationStep& s : agg.trace)
            trace.push_back({{"rank", s.group_rank},
                             {"op", s.op},
                             {"acc_before", s.acc_before},
                             {"acc_candidate", s.acc_candidate},
                             {"accepted", s.accepted}});
        per_class.push_back(
            {{"class", schema.class_names[static_cast<std::size_t>(agg.class_index)]},
             {"ranked", ranked},
             {"trace", trace},
             {"global_rule", agg.global_rule.has_value()
                                 ? json(to_text(*agg.global_rule, schema))
                                 : json(nullptr)}});
    }
    return {{"round", round.round_index},
            {"mode", to_string(round.mode)},
            {"client_ids", round.client_ids},
            {"tallies", round.tallies},
            {"weights", round.weights},
            {"per_class", per_class}};
}

json metrics_to_json(const MetricsReport& metrics) {
    json per_class = json::array();
    for (const ClassMetrics& cm : metrics.per_class) {
        per_class.push_back(
            {{"class", cm.class_name},
             {"rule_present", cm.rule_present},
             {"rule_accuracy", cm.rule_accuracy},
             {"rule_fidelity", cm.rule_fidelity},
             {"rule_uncertainty", cm.rule_uncertainty},
             {"accuracy_counts",
              {{"satisfied_in_class", cm.accuracy_counts.satisfied_in_class},
               {"in_class", cm.accuracy_counts.in_class},
               {"rejected_outside", cm.accuracy_counts.rejected_outside},
               {"outside", cm.accuracy_counts.outside}}},
             {"fidelity_counts",
              {{"satisfied_in_class", cm.fidelity_counts.satisfied_in_class},
               {"in_class", cm.fidelity_counts.in_class},
               {"rejected_outside", cm.fidelity_counts.rejected_outside},
               {"outside", cm.fidelity_counts.outside}}},
             {"model_correct", cm.model_correct},
             {"class_points", cm.class_points}});
    }
    return {{"model_accuracy", metrics.model_accuracy},
            {"rule_accuracy", metrics.rule_accuracy},
            {"rule_fidelity", metrics.rule_fidelity},
            {"rule_uncertainty", metrics.rule_uncertainty},
            {"all_rules_present", metrics.all_rules_present},
            {"per_class", per_class}};
}

static json mix_to_json(const ConfidenceMix& mix) {
    return {{"definitely", mix.definitely},
            {"probably", mix.probably},
            {"guessing", mix.guessing},
            {"not_visible", mix.not_visible}};
}

json run_config_to_json(const RunConfig& config) {
    return {{"dataset", config.dataset},
            {"clients", config.clients},
            {"rounds_max", config.rounds_max},
            {"target_val_accuracy", config.target_val_accuracy},
            {"epochs_per_round", config.epochs_per_round},
            {"top_m", config.top_m},
            {"relevance_threshold", config.relevance_threshold},
            {"satisfaction_threshold", config.satisfaction_threshold},
            {"mode", to_string(config.mode)},
            {"seed", config.seed},
            {"val_frac", config.val_frac},
            {"test_frac", config.test_frac},
            {"local_test_frac", config.local_test_frac},
            {"max_conjunctions", config.max_conjunctions},
            {"learning_rate", config.learning_rate},
            {"tally_on_acceptance", config.tally_on_acceptance},
            {"gen_points", config.gen_points},
            {"gen_features", config.gen_features},
            {"gen_groups", config.gen_groups},
            {"gen_classes", config.gen_classes},
            {"gen_conjunctions", config.gen_conjunctions},
            {"gen_conj_len", config.gen_conj_len},
            {"gen_noise", config.gen_noise},
            {"gen_mix", mix_to_json(config.gen_mix)},
            {"overlay_digits", config.overlay_digits},
            {"degraded_clients", config.degraded_clients},
            {"degraded_mix", mix_to_json(config.degraded_mix)},
            {"degraded_noise", config.degraded_noise}};
}

json run_report_to_json(const RunReport& report) {
    json rounds = json::array();
    for (const GlobalRound& r : report.rounds)
        rounds.push_back(global_round_to_json(r, report.schema));

    json final_text = json::array();
    json final_structured = json::array();
    for (const std::optional<DnfRule>& rule : report.final_rules) {
        if (rule.has_value()) {
            final_text.push_back(to_text(*rule, report.schema));
            final_structured.push_back(rule_to_json(*rule, report.schema));
        } else {
            final_text.push_back(nullptr);
            final_structured.push_back(nullptr);
        }
    }

    return {{"config", run_config_to_json(report.config)},
            {"schema", schema_to_json(report.schema)},
            {"rounds", rounds},
            {"validation_accuracy", report.validation_accuracy},
            {"final_rules", final_text},
            {"final_rules_structured", final_structured},
            {"metrics", metrics_to_json(report.metrics)}};
}

}  // namespace fedrules
