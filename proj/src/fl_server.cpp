#include "fedrules/fl_server.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "fedrules/metrics.hpp"

namespace fedrules {

std::string to_string(AggregationMode mode) {
    switch (mode) {
        case AggregationMode::uncertainty: return "uncertainty";
        case AggregationMode::fedavg: return "fedavg";
        case AggregationMode::no_uncertainty: return "no_uncertainty";
    }
    throw std::invalid_argument("unknown aggregation mode");
}

AggregationMode parse_mode(const std::string& text) {
    if (text == "uncertainty") return AggregationMode::uncertainty;
    if (text == "fedavg") return AggregationMode::fedavg;
    if (text == "no_uncertainty") return AggregationMode::no_uncertainty;
    throw std::invalid_argument("unknown aggregation mode: " + text);
}

std::vector<RuleGroup> group_and_rank(const std::vector<RuleReport>& reports, int class_index) {
    struct Member {
        int client_id;
        DnfRule rule;  // canonical form
        double accuracy;
    };
    // Key = literal structure of the canonical rule.
    std::map<std::vector<std::vector<int>>, std::vector<Member>> grouped;
    for (const RuleReport& report : reports) {
        const RuleReportEntry* entry = find_entry(report, class_index);
        if (entry == nullptr) continue;
        DnfRule canon = canonicalize(entry->rule);
        std::vector<std::vector<int>> key;
        key.reserve(canon.conjunctions.size());
        for (const Conjunction& c : canon.conjunctions) key.push_back(c.features);
        grouped[std::move(key)].push_back(
            {report.client_id, std::move(canon), entry->local_accuracy});
    }

    std::vector<RuleGroup> groups;
    groups.reserve(grouped.size());
    for (auto& [key, members] : grouped) {
        (void)key;
        RuleGroup g;
        g.class_index = class_index;

        // Representative rule: per-conjunction confidence is the max seen
        // across contributors; the rule-level confidence is their mean.
        g.rule = members.front().rule;
        double score_sum = 0.0;
        double u_sum = 0.0;
        for (const Member& m : members) {
            g.client_ids.push_back(m.client_id);
            score_sum += m.accuracy * m.rule.uncertainty;
            u_sum += m.rule.uncertainty;
            for (std::size_t j = 0; j < g.rule.conjunctions.size(); ++j)
                g.rule.conjunctions[j].uncertainty = std::max(
                    g.rule.conjunctions[j].uncertainty, m.rule.conjunctions[j].uncertainty);
        }
        std::sort(g.client_ids.begin(), g.client_ids.end());
        g.rule.uncertainty = u_sum / static_cast<double>(members.size());
        g.score = score_sum / static_cast<double>(members.size());
        groups.push_back(std::move(g));
    }

    std::stable_sort(groups.begin(), groups.end(), [](const RuleGroup& a, const RuleGroup& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.client_ids.size() != b.client_ids.size())
            return a.client_ids.size() > b.client_ids.size();
        return structural_less(a.rule, b.rule);
    });
    return groups;
}

std::pair<DnfRule, std::vector<AggregationStep>> aggregate_class_rule(
    const std::vector<RuleGroup>& ranked, int top_m,
    const std::vector<ConceptDataPoint>& validation_set, const FeatureSchema& schema,
    double satisfaction_threshold) {
    if (ranked.empty()) throw std::invalid_argument("no rule groups to aggregate");
    if (validation_set.empty()) throw std::invalid_argument("empty validation set");
    if (top_m < 1) throw std::invalid_argument("top_m must be at least 1");

    std::vector<AggregationStep> trace;
    DnfRule global = ranked.front().rule;
    double acc = class_rule_accuracy(global, validation_set, satisfaction_threshold);
    trace.push_back({0, "init", acc, acc, true});

    std::size_t limit = std::min(ranked.size(), static_cast<std::size_t>(top_m));
    for (std::size_t i = 1; i < limit; ++i) {
        const DnfRule& next = ranked[i].rule;
        bool clash = conflicts(global, next, schema);
        DnfRule candidate = clash ? combine_or(global, next) : combine_and(global, next, schema);
        double cand_acc =
            class_rule_accuracy(candidate, validation_set, satisfaction_threshold);
        bool accepted = cand_acc > acc;
        trace.push_back({static_cast<int>(i), clash ? "or" : "and", acc, cand_acc, accepted});
        if (accepted) {
            global = std::move(candidate);
            acc = cand_acc;
        }
    }
    return {std::move(global), std::move(trace)};
}

std::vector<double> client_weights(const std::vector<long long>& tallies) {
    if (tallies.empty()) throw std::invalid_argument("no tallies");
    long long total = 0;
    for (long long t : tallies) {
        if (t < 0) throw std::invalid_argument("negative tally");
        total += t;
    }
    std::vector<double> weights(tallies.size());
    if (total == 0) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(tallies.size()));
    } else {
        for (std::size_t k = 0; k < tallies.size(); ++k)
            weights[k] = static_cast<double>(tallies[k]) / static_cast<double>(total);
    }
    return weights;
}

ParamSnapshot aggregate_models(const std::vector<ParamSnapshot>& snapshots,
                               const std::vector<double>& weights) {
    if (snapshots.empty()) throw std::invalid_argument("no parameter snapshots");
    if (snapshots.size() != weights.size())
        throw std::invalid_argument("weights do not match snapshot count");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("weights must sum to 1");

    ParamSnapshot out;
    out.feature_count = snapshots.front().feature_count;
    out.class_count = snapshots.front().class_count;
    out.values.assign(snapshots.front().values.size(), 0.0);
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const ParamSnapshot& s = snapshots[i];
        if (s.feature_count != out.feature_count || s.class_count != out.class_count ||
            s.values.size() != out.values.size())
            throw std::invalid_argument("parameter snapshots differ in shape");
        for (std::size_t j = 0; j < out.values.size(); ++j)
            out.values[j] += weights[i] * s.values[j];
    }
    return out;
}

// The ablation erases every confidence signal the clients sent.
static std::vector<RuleReport> force_full_confidence(std::vector<RuleReport> reports) {
    for (RuleReport& report : reports) {
        for (RuleReportEntry& entry : report.entries) {
            entry.rule.uncertainty = 1.0;
            for (Conjunction& c : entry.rule.conjunctions) c.uncertainty = 1.0;
        }
    }
    return reports;
}

GlobalRound server_round(const std::vector<RuleReport>& reports,
                         const std::vector<ConceptDataPoint>& validation_set,
                         const FeatureSchema& schema, const ServerConfig& config,
                         int round_index) {
    if (reports.empty()) throw std::invalid_argument("no client reports");
    if (validation_set.empty()) throw std::invalid_argument("empty validation set");
    schema.validate();

    std::vector<RuleReport> ablated;
    if (config.mode == AggregationMode::no_uncertainty)
        ablated = force_full_confidence(reports);
    const std::vector<RuleReport>& effective =
        config.mode == AggregationMode::no_uncertainty ? ablated : reports;

    GlobalRound round;
    round.round_index = round_index;
    round.mode = config.mode;
    for (const RuleReport& r : effective) round.client_ids.push_back(r.client_id);
    round.tallies.assign(effective.size(), 0);

    std::map<int, std::size_t> slot_of_client;
    for (std::size_t k = 0; k < round.client_ids.size(); ++k) {
        if (!slot_of_client.emplace(round.client_ids[k], k).second)
            throw std::invalid_argument("duplicate client id in reports");
    }

    round.per_class.resize(static_cast<std::size_t>(schema.class_count()));
    for (int c = 0; c < schema.class_count(); ++c) {
        ClassAggregation& agg = round.per_class[static_cast<std::size_t>(c)];
        agg.class_index = c;
        agg.ranked = group_and_rank(effective, c);
        if (agg.ranked.empty()) continue;

        auto [rule, trace] = aggregate_class_rule(agg.ranked, config.top_m, validation_set,
                                                  schema, config.satisfaction_threshold);
        agg.global_rule = std::move(rule);
        agg.trace = std::move(trace);

        std::size_t limit =
            std::min(agg.ranked.size(), static_cast<std::size_t>(config.top_m));
        for (std::size_t i = 0; i < limit; ++i) {
            if (config.tally_on_acceptance && !agg.trace[i].accepted) continue;
            for (int id : agg.ranked[i].client_ids) ++round.tallies[slot_of_client.at(id)];
        }
    }

    if (config.mode == AggregationMode::uncertainty) {
        round.weights = client_weights(round.tallies);
    } else {
        // Sample-count-proportional weights (classic federated averaging).
        double total = 0.0;
        for (const RuleReport& r : effective) {
            if (r.sample_count <= 0)
                throw std::invalid_argument("sample counts must be positive");
            total += static_cast<double>(r.sample_count);
        }
        round.weights.reserve(effective.size());
        for (const RuleReport& r : effective)
            round.weights.push_back(static_cast<double>(r.sample_count) / total);
    }

    std::vector<ParamSnapshot> snapshots;
    snapshots.reserve(effective.size());
    for (const RuleReport& r : effective) snapshots.push_back(r.params);
    round.global_params = aggregate_models(snapshots, round.weights);

    // Hard guarantee behind the conflict-handling design: no emitted rule
    // may AND together two features from one group.
    for (const ClassAggregation& agg : round.per_class)
        if (agg.global_rule.has_value() && internally_conflicted(*agg.global_rule, schema))
            throw std::logic_error("aggregation produced a same-group conjunction");

    return round;
}

}  // namespace fedrules
