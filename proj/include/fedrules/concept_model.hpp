#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedrules/data_point.hpp"
#include "fedrules/rule_algebra.hpp"

namespace fedrules {

// Linear softmax classifier over uncertainty-scaled concept activations.
// Weights are class-major: weights[c * feature_count + f].
struct ConceptPredictor {
    int feature_count = 0;
    int class_count = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    ConceptPredictor() = default;
    ConceptPredictor(int features, int classes);

    double weight_at(int class_index, int feature) const {
        return weights[static_cast<std::size_t>(class_index) * feature_count + feature];
    }
    double& weight_at(int class_index, int feature) {
        return weights[static_cast<std::size_t>(class_index) * feature_count + feature];
    }
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 200;
};

// Flat parameter vector (all weights, then all biases) used for
// checkpointing and for weighted model averaging on the server.
struct ParamSnapshot {
    int feature_count = 0;
    int class_count = 0;
    std::vector<double> values;
};

// Element-wise product of activations and their confidence scores.
std::vector<double> apply_uncertainty(const ConceptDataPoint& point);

// Deterministic small-uniform initialization of all parameters in
// [-scale, scale), driven by the caller's seeded generator.
void randomize(ConceptPredictor& model, class Rng& rng, double scale = 0.01);

// Class scores for one already-scaled activation vector.
std::vector<double> logits(const ConceptPredictor& model, const std::vector<double>& vhat);

// Softmax probabilities for one sample (numerically stabilised).
std::vector<double> class_probabilities(const ConceptPredictor& model,
                                        const std::vector<double>& vhat);

// Predicted class for a scaled activation vector; ties break to the
// lowest class index.
int predict_scaled(const ConceptPredictor& model, const std::vector<double>& vhat);

// Predicted class for a raw data point (uncertainty applied internally).
int predict(const ConceptPredictor& model, const ConceptDataPoint& point);

// Mean cross-entropy of the model on the given data.
double cross_entropy(const ConceptPredictor& model, const std::vector<ConceptDataPoint>& data);

// Full-batch gradient descent on softmax cross-entropy. Returns the loss
// measured at the start of each epoch. Throws std::runtime_error if the
// loss or gradients stop being finite.
std::vector<double> train(ConceptPredictor& model, const std::vector<ConceptDataPoint>& data,
                          const TrainConfig& config);

// Per-class feature relevance: |weight| scaled so each class's strongest
// feature has relevance 1. Layout: result[f * class_count + c]. A class
// whose weights are all zero gets all-zero relevance.
std::vector<double> relevance_matrix(const ConceptPredictor& model);

struct SampleRule {
    int class_index = 0;
    Conjunction conjunction;
};

// Explain one sample: take the predicted class, keep features that are
// both relevant to that class (relevance > relevance_threshold) and
// active on this sample (scaled activation > satisfaction_threshold),
// and keep at most one feature per schema group (highest scaled
// activation wins; ties go to the lower feature index). Returns nullopt
// when no feature qualifies. The conjunction's uncertainty is the
// geometric mean of the kept features' scaled activations.
std::optional<SampleRule> extract_sample_rule(const ConceptPredictor& model,
                                              const FeatureSchema& schema,
                                              const ConceptDataPoint& point,
                                              double relevance_threshold = 0.5,
                                              double satisfaction_threshold = 0.5);

ParamSnapshot snapshot(const ConceptPredictor& model);
void restore(ConceptPredictor& model, const ParamSnapshot& params);

// Plain-text checkpoint with lossless round-trip of every parameter.
void save_checkpoint(std::ostream& out, const ConceptPredictor& model);
ConceptPredictor load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const ConceptPredictor& model);
ConceptPredictor load_checkpoint_file(const std::string& path);

}  // namespace fedrules
