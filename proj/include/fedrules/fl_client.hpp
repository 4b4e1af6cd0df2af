#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedrules/concept_model.hpp"
#include "fedrules/data_point.hpp"
#include "fedrules/rule_algebra.hpp"

namespace fedrules {

struct ClientConfig {
    int local_epochs = 30;
    double learning_rate = 0.1;
    double relevance_threshold = 0.5;
    double satisfaction_threshold = 0.5;
    double local_test_frac = 0.2;
    // Conjunction budget per class rule; the most frequent high-confidence
    // sample conjunctions are kept.
    int max_conjunctions = 5;
    // Ablation switch: treat every confidence score as 1.
    bool ignore_uncertainty = false;
};

struct RuleReportEntry {
    DnfRule rule;                // class rule; rule.uncertainty is the client's score for it
    double local_accuracy = 0.0; // measured on the client's local test split
};

// One round's upload from a client: its class rules with quality scores,
// its trained parameters, and how much data backed them.
struct RuleReport {
    int client_id = 0;
    std::vector<RuleReportEntry> entries;  // ascending class index; absent class = no rule found
    ParamSnapshot params;
    long long sample_count = 0;
};

const RuleReportEntry* find_entry(const RuleReport& report, int class_index);

class Client {
public:
    // Splits the shard into local-train/local-test deterministically from
    // the run seed and initializes the predictor.
    Client(int id, const FeatureSchema& schema, std::vector<ConceptDataPoint> shard,
           const ClientConfig& config, std::uint64_t run_seed);

    // One federated round: adopt the broadcast parameters (absent in the
    // first round), train locally, extract one rule per predicted class
    // from the training split, and score each rule on the test split.
    RuleReport local_round(const std::optional<ParamSnapshot>& global_params, int epochs);
    RuleReport local_round(const std::optional<ParamSnapshot>& global_params);

    int id() const { return id_; }
    long long sample_count() const {
        return static_cast<long long>(train_.size() + test_.size());
    }
    const ConceptPredictor& predictor() const { return model_; }
    const std::vector<ConceptDataPoint>& local_train() const { return train_; }
    const std::vector<ConceptDataPoint>& local_test() const { return test_; }

private:
    int id_;
    FeatureSchema schema_;
    ClientConfig config_;
    std::vector<ConceptDataPoint> train_;
    std::vector<ConceptDataPoint> test_;
    ConceptPredictor model_;
};

}  // namespace fedrules
