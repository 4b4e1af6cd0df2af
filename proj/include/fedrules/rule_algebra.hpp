#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedrules/data_point.hpp"

namespace fedrules {

/// Thrown by combine_and when the operands share a feature group.
/// The caller is expected to fall back to combine_or.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Names the F features, assigns each to one of G groups, and fixes the C
/// class labels. Features in one group are mutually exclusive attributes
/// (all wing colors, all bill lengths, ...): asserting two of them inside
/// one conjunction is a conflict.
struct FeatureSchema {
    std::vector<std::string> feature_names;
    std::vector<int> group_of;  // feature index -> group index
    std::vector<std::string> class_names;

    int feature_count() const { return static_cast<int>(feature_names.size()); }
    int class_count() const { return static_cast<int>(class_names.size()); }
    int group_count() const;

    /// Throws std::invalid_argument on any structural defect: empty or
    /// duplicate names, group map size mismatch, empty groups, C < 2,
    /// or names that would not survive the rule text format.
    void validate() const;

    /// Index of a feature name, or -1.
    int feature_index(const std::string& name) const;
    int class_index(const std::string& name) const;
};

/// A positive feature assertion. Negation is not representable.
struct Literal {
    int feature_index = 0;
};

/// AND of positive literals with an uncertainty score in [0,1].
/// Features are kept sorted and unique (set semantics).
struct Conjunction {
    std::vector<int> features;
    double uncertainty = 1.0;

    /// Sorts and deduplicates; throws on empty input or uncertainty
    /// outside [0,1].
    static Conjunction of(std::vector<int> features, double uncertainty);
};

/// OR of conjunctions for one class, with a rule-level uncertainty score.
struct DnfRule {
    int class_index = 0;
    std::vector<Conjunction> conjunctions;
    double uncertainty = 1.0;
};

/// Throws std::invalid_argument unless the rule is well-formed under the
/// schema: class and feature indices in range, conjunctions non-empty,
/// uncertainties in [0,1].
void validate_rule(const DnfRule& rule, const FeatureSchema& schema);

/// Sorts literals within conjunctions, sorts conjunctions lexicographically,
/// and merges duplicate literal sets keeping the larger uncertainty. The
/// rule-level uncertainty is untouched. Idempotent.
DnfRule canonicalize(const DnfRule& rule);

/// True when the canonical literal structures are equal. Uncertainty values
/// are ignored: this is the notion of "the same rule" used for grouping.
bool same_structure(const DnfRule& a, const DnfRule& b);

/// Deterministic total order on canonical literal structure, used for
/// tie-breaking. Uncertainties are ignored.
bool structural_less(const DnfRule& a, const DnfRule& b);

/// Geometric mean (prod v_j)^(1/m) of the activated features' adjusted
/// values. Throws std::invalid_argument on an empty list or out-of-range
/// values.
double conjunction_uncertainty(const std::vector<double>& activated_values);

/// True iff some literal of a and some literal of b fall in the same
/// feature group without being the same feature. Identical literals merge,
/// they do not conflict.
bool conflicts(const Conjunction& a, const Conjunction& b, const FeatureSchema& schema);
bool conflicts(const DnfRule& a, const DnfRule& b, const FeatureSchema& schema);
bool conflicts(const DnfRule& a, const Conjunction& b, const FeatureSchema& schema);

/// True when one conjunction asserts two distinct features of one group.
bool internally_conflicted(const Conjunction& c, const FeatureSchema& schema);
bool internally_conflicted(const DnfRule& rule, const FeatureSchema& schema);

/// OR-combination: conjunction lists concatenated then canonicalized;
/// result uncertainty is the arithmetic mean of the operands'.
/// Throws std::invalid_argument on class mismatch.
DnfRule combine_or(const DnfRule& a, const DnfRule& b);

/// AND-combination: distributive cross-product of the conjunction lists.
/// Each merged conjunction takes the geometric mean of its two sources'
/// uncertainties; the rule uncertainty is the arithmetic mean over the
/// resulting conjunctions. Throws ConflictError when conflicts(a, b) holds
/// and std::invalid_argument on class mismatch.
DnfRule combine_and(const DnfRule& a, const DnfRule& b, const FeatureSchema& schema);

/// True iff some conjunction has every literal's uncertainty-adjusted value
/// v[f]*u[f] strictly above the threshold. Throws std::invalid_argument
/// when the point's dimensions do not cover the rule's features.
bool rule_satisfied(const DnfRule& rule, const ConceptDataPoint& point,
                    double satisfaction_threshold = 0.5);

/// Line form `class <-> (a AND b) [u=..] OR (c) [u=..] [u=..]`; the final
/// [u=..] is the rule's. Printing uses shortest-round-trip decimals, so
/// parse(print(r)) reproduces r exactly on canonical rules.
std::string to_text(const DnfRule& rule, const FeatureSchema& schema);

/// Parses the line form. Conjunction-level [u=..] may be omitted in
/// hand-written rules and defaults to 1. Throws std::invalid_argument with
/// a position diagnostic on malformed input.
DnfRule parse_rule_text(const std::string& line, const FeatureSchema& schema);

}  // namespace fedrules
