#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedrules/concept_model.hpp"
#include "fedrules/data_point.hpp"
#include "fedrules/rule_algebra.hpp"

namespace fedrules {

// Per-class counts behind the rule-quality score: of M points belonging to
// the class, m satisfy the rule; of N points outside it, n reject the rule.
// The score is (m + n) / (M + N).
struct ClassRuleCounts {
    long long satisfied_in_class = 0;   // m
    long long in_class = 0;             // M
    long long rejected_outside = 0;     // n
    long long outside = 0;              // N
    double score() const;
};

struct ClassMetrics {
    std::string class_name;
    bool rule_present = false;
    ClassRuleCounts accuracy_counts;   // against ground-truth labels
    ClassRuleCounts fidelity_counts;   // against model predictions
    double rule_accuracy = 0.0;
    double rule_fidelity = 0.0;
    double rule_uncertainty = 0.0;     // 0 when the rule is missing
    long long model_correct = 0;       // correct predictions on this class's points
    long long class_points = 0;
};

struct MetricsReport {
    double model_accuracy = 0.0;
    double rule_accuracy = 0.0;
    double rule_fidelity = 0.0;
    double rule_uncertainty = 0.0;
    bool all_rules_present = false;
    std::vector<ClassMetrics> per_class;
};

// Counts for one class rule given arbitrary per-point labels (ground truth
// for accuracy, model predictions for fidelity). A missing rule acts as the
// always-false rule: nothing satisfies it.
ClassRuleCounts class_rule_counts(const std::optional<DnfRule>& rule, int class_index,
                                  const std::vector<ConceptDataPoint>& points,
                                  const std::vector<int>& labels, double threshold);

// Fraction of correct predictions on a non-empty evaluation set.
double model_accuracy(const ConceptPredictor& model,
                      const std::vector<ConceptDataPoint>& test_set);

// Score for a single class rule against ground-truth labels.
double class_rule_accuracy(const DnfRule& rule, const std::vector<ConceptDataPoint>& points,
                           double threshold);

// Mean per-class score against ground-truth labels; rules[c] explains
// class c, and a missing rule scores as always-false.
double rule_accuracy(const std::vector<std::optional<DnfRule>>& rules,
                     const std::vector<ConceptDataPoint>& test_set, double threshold);

// Same computation with the model's predictions in place of labels.
double rule_fidelity(const std::vector<std::optional<DnfRule>>& rules,
                     const ConceptPredictor& model,
                     const std::vector<ConceptDataPoint>& test_set, double threshold);

// Mean uncertainty of the rules that exist; 0 when none do.
double rule_uncertainty(const std::vector<std::optional<DnfRule>>& rules);

MetricsReport compute_metrics(const std::vector<std::optional<DnfRule>>& rules,
                              const ConceptPredictor& model, const FeatureSchema& schema,
                              const std::vector<ConceptDataPoint>& test_set, double threshold);

// Four-row table: one metric per line, percentages with two decimals.
std::string render_metrics_table(const MetricsReport& report);

}  // namespace fedrules
