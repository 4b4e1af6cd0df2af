#include "fedrules/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace fedrules {

double ClassRuleCounts::score() const {
    long long denom = in_class + outside;
    if (denom == 0) throw std::invalid_argument("rule score over an empty point set");
    return static_cast<double>(satisfied_in_class + rejected_outside) /
           static_cast<double>(denom);
}

ClassRuleCounts class_rule_counts(const std::optional<DnfRule>& rule, int class_index,
                                  const std::vector<ConceptDataPoint>& points,
                                  const std::vector<int>& labels, double threshold) {
    if (points.size() != labels.size())
        throw std::invalid_argument("labels do not match point count");
    ClassRuleCounts counts;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool satisfied = rule.has_value() && rule_satisfied(*rule, points[i], threshold);
        if (labels[i] == class_index) {
            ++counts.in_class;
            if (satisfied) ++counts.satisfied_in_class;
        } else {
            ++counts.outside;
            if (!satisfied) ++counts.rejected_outside;
        }
    }
    return counts;
}

double model_accuracy(const ConceptPredictor& model,
                      const std::vector<ConceptDataPoint>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("accuracy over an empty set");
    long long correct = 0;
    for (const ConceptDataPoint& p : test_set)
        if (predict(model, p) == p.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

static std::vector<int> true_labels(const std::vector<ConceptDataPoint>& points) {
    std::vector<int> labels;
    labels.reserve(points.size());
    for (const ConceptDataPoint& p : points) labels.push_back(p.label);
    return labels;
}

double class_rule_accuracy(const DnfRule& rule, const std::vector<ConceptDataPoint>& points,
                           double threshold) {
    return class_rule_counts(rule, rule.class_index, points, true_labels(points), threshold)
        .score();
}

static double mean_rule_score(const std::vector<std::optional<DnfRule>>& rules,
                              const std::vector<ConceptDataPoint>& test_set,
                              const std::vector<int>& labels, double threshold) {
    if (rules.empty()) throw std::invalid_argument("no class rules supplied");
    if (test_set.empty()) throw std::invalid_argument("rule score over an empty set");
    double total = 0.0;
    for (std::size_t c = 0; c < rules.size(); ++c)
        total += class_rule_counts(rules[c], static_cast<int>(c), test_set, labels, threshold)
                     .score();
    return total / static_cast<double>(rules.size());
}

double rule_accuracy(const std::vector<std::optional<DnfRule>>& rules,
                     const std::vector<ConceptDataPoint>& test_set, double threshold) {
    return mean_rule_score(rules, test_set, true_labels(test_set), threshold);
}

double rule_fidelity(const std::vector<std::optional<DnfRule>>& rules,
                     const ConceptPredictor& model,
                     const std::vector<ConceptDataPoint>& test_set, double threshold) {
    std::vector<int> predicted;
    predicted.reserve(test_set.size());
    for (const ConceptDataPoint& p : test_set) predicted.push_back(predict(model, p));
    return mean_rule_score(rules, test_set, predicted, threshold);
}

double rule_uncertainty(const std::vector<std::optional<DnfRule>>& rules) {
    if (rules.empty()) throw std::invalid_argument("no class rules supplied");
    double total = 0.0;
    int present = 0;
    for (const std::optional<DnfRule>& r : rules) {
        if (!r.has_value()) continue;
        total += r->uncertainty;
        ++present;
    }
    return present == 0 ? 0.0 : total / static_cast<double>(present);
}

MetricsReport compute_metrics(const std::vector<std::optional<DnfRule>>& rules,
                              const ConceptPredictor& model, const FeatureSchema& schema,
                              const std::vector<ConceptDataPoint>& test_set, double threshold) {
    if (test_set.empty()) throw std::invalid_argument("metrics over an empty test set");
    if (static_cast<int>(rules.size()) != schema.class_count())
        throw std::invalid_argument("need one rule slot per class");

    std::vector<int> truth = true_labels(test_set);
    std::vector<int> predicted;
    predicted.reserve(test_set.size());
    for (const ConceptDataPoint& p : test_set) predicted.push_back(predict(model, p));

    MetricsReport report;
    report.all_rules_present = true;
    report.per_class.resize(rules.size());

    long long correct_total = 0;
    double acc_sum = 0.0, fid_sum = 0.0, unc_sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < rules.size(); ++c) {
        ClassMetrics& cm = report.per_class[c];
        cm.class_name = schema.class_names[c];
        cm.rule_present = rules[c].has_value();
        if (!cm.rule_present) report.all_rules_present = false;

        cm.accuracy_counts =
            class_rule_counts(rules[c], static_cast<int>(c), test_set, truth, threshold);
        cm.fidelity_counts =
            class_rule_counts(rules[c], static_cast<int>(c), test_set, predicted, threshold);
        cm.rule_accuracy = cm.accuracy_counts.score();
        cm.rule_fidelity = cm.fidelity_counts.score();
        cm.rule_uncertainty = cm.rule_present ? rules[c]->uncertainty : 0.0;
        if (cm.rule_present) {
            unc_sum += cm.rule_uncertainty;
            ++present;
        }
        acc_sum += cm.rule_accuracy;
        fid_sum += cm.rule_fidelity;

        cm.class_points = cm.accuracy_counts.in_class;
        for (std::size_t i = 0; i < test_set.size(); ++i)
            if (truth[i] == static_cast<int>(c) && predicted[i] == truth[i]) ++cm.model_correct;
        correct_total += cm.model_correct;
    }

    report.model_accuracy =
        static_cast<double>(correct_total) / static_cast<double>(test_set.size());
    report.rule_accuracy = acc_sum / static_cast<double>(rules.size());
    report.rule_fidelity = fid_sum / static_cast<double>(rules.size());
    report.rule_uncertainty = present == 0 ? 0.0 : unc_sum / static_cast<double>(present);
    return report;
}

std::string render_metrics_table(const MetricsReport& report) {
    char buf[64];
    std::string out;
    auto row = [&](const char* name, double value) {
        std::snprintf(buf, sizeof(buf), "%-18s %6.2f%%\n", name, value * 100.0);
        out += buf;
    };
    row("model accuracy", report.model_accuracy);
    row("rule accuracy", report.rule_accuracy);
    row("rule fidelity", report.rule_fidelity);
    row("rule uncertainty", report.rule_uncertainty);
    return out;
}

}  // namespace fedrules
