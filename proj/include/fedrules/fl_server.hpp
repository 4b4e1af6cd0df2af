#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedrules/concept_model.hpp"
#include "fedrules/data_point.hpp"
#include "fedrules/fl_client.hpp"
#include "fedrules/rule_algebra.hpp"

namespace fedrules {

enum class AggregationMode {
    uncertainty,     // rule-quality tally weights, confidence-aware pipeline
    fedavg,          // sample-count weights, confidence-aware pipeline
    no_uncertainty,  // sample-count weights, every confidence forced to 1
};

std::string to_string(AggregationMode mode);
AggregationMode parse_mode(const std::string& text);

// Clients that submitted structurally identical rules for one class,
// with the group's quality score (mean of accuracy x confidence).
struct RuleGroup {
    int class_index = 0;
    DnfRule rule;
    std::vector<int> client_ids;  // ascending
    double score = 0.0;
};

// One decision in the greedy per-class aggregation.
struct AggregationStep {
    int group_rank = 0;       // which ranked group was considered
    std::string op;           // "init", "or", or "and"
    double acc_before = 0.0;  // validation rule score entering the step
    double acc_candidate = 0.0;
    bool accepted = false;
};

struct ClassAggregation {
    int class_index = 0;
    std::vector<RuleGroup> ranked;  // descending score, full ranking
    std::vector<AggregationStep> trace;
    std::optional<DnfRule> global_rule;
};

struct GlobalRound {
    int round_index = 0;
    AggregationMode mode = AggregationMode::uncertainty;
    std::vector<ClassAggregation> per_class;  // one per class index
    std::vector<int> client_ids;              // report order; aligns tallies/weights
    std::vector<long long> tallies;
    std::vector<double> weights;
    ParamSnapshot global_params;

    const std::optional<DnfRule>& rule_for(int class_index) const {
        return per_class[static_cast<std::size_t>(class_index)].global_rule;
    }
};

struct ServerConfig {
    int top_m = 3;
    AggregationMode mode = AggregationMode::uncertainty;
    double satisfaction_threshold = 0.5;
    // When set, a client's tally counts accepted aggregation steps instead
    // of top-m ranking membership.
    bool tally_on_acceptance = false;
};

// Groups the reports' class-c rules by structural identity and ranks the
// groups by descending score; ties prefer more contributors, then
// structural order. The representative rule's confidence is the mean of
// the contributors' scores (per-conjunction confidences keep the max).
std::vector<RuleGroup> group_and_rank(const std::vector<RuleReport>& reports, int class_index);

// Greedy aggregation: start from the top group; fold each further top-m
// group in with OR when it conflicts with the running rule and AND when it
// does not, keeping the candidate only if validation rule score strictly
// improves. Every decision is recorded.
std::pair<DnfRule, std::vector<AggregationStep>> aggregate_class_rule(
    const std::vector<RuleGroup>& ranked, int top_m,
    const std::vector<ConceptDataPoint>& validation_set, const FeatureSchema& schema,
    double satisfaction_threshold);

// w_k = t_k / sum(t); uniform when every tally is zero.
std::vector<double> client_weights(const std::vector<long long>& tallies);

// Coordinate-wise weighted average of shape-identical snapshots.
ParamSnapshot aggregate_models(const std::vector<ParamSnapshot>& snapshots,
                               const std::vector<double>& weights);

// One full server step over a round's reports: per-class ranking and
// aggregation, tallies, mode-dependent weights, and model averaging.
GlobalRound server_round(const std::vector<RuleReport>& reports,
                         const std::vector<ConceptDataPoint>& validation_set,
                         const FeatureSchema& schema, const ServerConfig& config,
                         int round_index);

}  // namespace fedrules
