#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedrules/data_point.hpp"
#include "fedrules/rng.hpp"
#include "fedrules/rule_algebra.hpp"

namespace fedrules {

// Fractions of points whose labeller confidence is each named level.
// Level values: definitely=1.0, probably=0.7, guessing=0.5, not_visible=0.0.
struct ConfidenceMix {
    double definitely = 1.0;
    double probably = 0.0;
    double guessing = 0.0;
    double not_visible = 0.0;

    void validate() const;
    // Draws one level value; consumes exactly one generator draw.
    double sample_value(Rng& rng) const;
};

// Synthetic generator with planted ground-truth rules: every point is built
// to satisfy one conjunction of its class's rule, then feature noise and
// per-group confidence levels are applied.
struct GeneratorSpec {
    FeatureSchema schema;
    std::vector<DnfRule> planted_rules;  // one per class, index = class index
    ConfidenceMix confidence_mix;
    double noise_rate = 0.0;
    int n_points = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Overlay generator: points start as a base-class prototype and are blended
// with another class's prototype at a known ratio, which becomes the
// confidence score. Labels are even/odd of the base class index.
struct OverlaySpec {
    std::vector<std::vector<double>> prototypes;  // one per base class
    double p_unchanged = 0.5;
    std::vector<double> mix_ratios = {0.7, 0.5};
    int n_points = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FederatedSplit {
    std::vector<std::vector<ConceptDataPoint>> client_shards;
    std::vector<ConceptDataPoint> validation;
    std::vector<ConceptDataPoint> test;
};

std::vector<ConceptDataPoint> generate_cub_like(const GeneratorSpec& spec);

std::vector<ConceptDataPoint> generate_mnist_like(const OverlaySpec& spec);

// Schema matching generate_mnist_like output: one feature per prototype
// component, all in a single feature group, classes {even, odd}.
FeatureSchema overlay_schema(const OverlaySpec& spec);

// Shuffle by seed, carve test then validation fractions, split the rest
// into K shards whose sizes differ by at most one.
FederatedSplit partition(const std::vector<ConceptDataPoint>& data, int K, double val_frac,
                         double test_frac, std::uint64_t seed);

// Re-labels confidence (per feature group, from the mix) and flips each
// feature with probability noise_rate. Used to build low-signal clients.
std::vector<ConceptDataPoint> degrade_shard(const std::vector<ConceptDataPoint>& shard,
                                            const FeatureSchema& schema,
                                            const ConfidenceMix& mix, double noise_rate,
                                            std::uint64_t seed);

// Canonical planted scenario: classes own disjoint blocks of features,
// feature groups cycle so consecutive features never share a group, and
// each class's rule is `conjunctions_per_class` runs of
// `features_per_conjunction` consecutive features from its block.
GeneratorSpec make_planted_spec(int feature_count, int group_count, int class_count,
                                int conjunctions_per_class, int features_per_conjunction,
                                const ConfidenceMix& mix, double noise_rate, int n_points,
                                std::uint64_t seed);

// One-hot digit prototypes (digit i activates feature i alone).
OverlaySpec make_overlay_spec(int digit_count, int n_points, std::uint64_t seed);

struct LoadedDataset {
    FeatureSchema schema;
    std::vector<ConceptDataPoint> points;
};

// Line format: a two-line schema header (feature `name:group` pairs, class
// names), then one point per line as `label v[0..F) u[0..F)` with exact
// decimal text for every real.
void write_dataset(std::ostream& out, const FeatureSchema& schema,
                   const std::vector<ConceptDataPoint>& points);
LoadedDataset read_dataset(std::istream& in);
void write_dataset_file(const std::string& path, const FeatureSchema& schema,
                        const std::vector<ConceptDataPoint>& points);
LoadedDataset read_dataset_file(const std::string& path);

}  // namespace fedrules
