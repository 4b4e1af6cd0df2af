#include "fedrules/fl_client.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "fedrules/metrics.hpp"
#include "fedrules/rng.hpp"

namespace fedrules {

const RuleReportEntry* find_entry(const RuleReport& report, int class_index) {
    for (const RuleReportEntry& e : report.entries)
        if (e.rule.class_index == class_index) return &e;
    return nullptr;
}

Client::Client(int id, const FeatureSchema& schema, std::vector<ConceptDataPoint> shard,
               const ClientConfig& config, std::uint64_t run_seed)
    : id_(id), schema_(schema), config_(config) {
    schema_.validate();
    if (shard.empty()) throw std::invalid_argument("client shard is empty");
    if (config_.local_epochs < 0) throw std::invalid_argument("negative local epochs");
    if (!(config_.local_test_frac >= 0.0 && config_.local_test_frac < 1.0))
        throw std::invalid_argument("local_test_frac outside [0,1)");
    if (config_.max_conjunctions < 1)
        throw std::invalid_argument("max_conjunctions must be at least 1");
    for (ConceptDataPoint& p : shard) {
        if (static_cast<int>(p.v.size()) != schema_.feature_count() ||
            p.u.size() != p.v.size())
            throw std::invalid_argument("shard point does not match schema");
        if (p.label < 0 || p.label >= schema_.class_count())
            throw std::invalid_argument("shard label outside class range");
        if (config_.ignore_uncertainty) std::fill(p.u.begin(), p.u.end(), 1.0);
    }

    Rng rng(derive_seed(run_seed, {kSeedClientInit, static_cast<std::uint64_t>(id)}));
    rng.shuffle(shard);
    std::size_t n = shard.size();
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(config_.local_test_frac * static_cast<double>(n)));
    if (n_test >= n) n_test = n - 1;  // always keep at least one training point
    train_.assign(shard.begin(), shard.end() - static_cast<std::ptrdiff_t>(n_test));
    test_.assign(shard.end() - static_cast<std::ptrdiff_t>(n_test), shard.end());
    if (test_.empty()) test_ = train_;  // tiny shard: score rules on the training split

    model_ = ConceptPredictor(schema_.feature_count(), schema_.class_count());
    randomize(model_, rng);
}

RuleReport Client::local_round(const std::optional<ParamSnapshot>& global_params) {
    return local_round(global_params, config_.local_epochs);
}

RuleReport Client::local_round(const std::optional<ParamSnapshot>& global_params, int epochs) {
    if (global_params.has_value()) restore(model_, *global_params);

    TrainConfig tc;
    tc.learning_rate = config_.learning_rate;
    tc.epochs = epochs;
    train(model_, train_, tc);

    // Bucket extracted sample conjunctions per predicted class, merging
    // identical structures: count occurrences and keep the highest observed
    // confidence as the structure's representative.
    struct Bucket {
        long long count = 0;
        double best_u = 0.0;
    };
    std::map<int, std::map<std::vector<int>, Bucket>> per_class;
    for (const ConceptDataPoint& p : train_) {
        std::optional<SampleRule> sample = extract_sample_rule(
            model_, schema_, p, config_.relevance_threshold, config_.satisfaction_threshold);
        if (!sample.has_value()) continue;
        Bucket& b = per_class[sample->class_index][sample->conjunction.features];
        ++b.count;
        b.best_u = std::max(b.best_u, sample->conjunction.uncertainty);
    }

    RuleReport report;
    report.client_id = id_;
    report.params = snapshot(model_);
    report.sample_count = sample_count();

    for (const auto& [cls, buckets] : per_class) {
        // Keep the conjunction budget's best structures by frequency x
        // confidence; ties resolve on structural order for determinism.
        std::vector<std::pair<const std::vector<int>*, const Bucket*>> ranked;
        ranked.reserve(buckets.size());
        for (const auto& [features, bucket] : buckets) ranked.push_back({&features, &bucket});
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            double sa = static_cast<double>(a.second->count) * a.second->best_u;
            double sb = static_cast<double>(b.second->count) * b.second->best_u;
            if (sa != sb) return sa > sb;
            return *a.first < *b.first;
        });
        if (ranked.size() > static_cast<std::size_t>(config_.max_conjunctions))
            ranked.resize(static_cast<std::size_t>(config_.max_conjunctions));

        DnfRule rule;
        rule.class_index = cls;
        double u_sum = 0.0;
        for (const auto& [features, bucket] : ranked) {
            rule.conjunctions.push_back(Conjunction::of(*features, bucket->best_u));
            u_sum += bucket->best_u;
        }
        rule.uncertainty = u_sum / static_cast<double>(rule.conjunctions.size());
        rule = canonicalize(rule);

        RuleReportEntry entry;
        entry.local_accuracy =
            class_rule_accuracy(rule, test_, config_.satisfaction_threshold);
        entry.rule = std::move(rule);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace fedrules
