#include "fedrules/rule_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fedrules/text_util.hpp"

namespace fedrules {

namespace {

bool valid_identifier(const std::string& name) {
    if (name.empty() || name == "AND" || name == "OR") return false;
    for (char ch : name) {
        bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                  (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
        if (!ok) return false;
    }
    return true;
}

}  // namespace

int FeatureSchema::group_count() const {
    int g = 0;
    for (int gi : group_of) g = std::max(g, gi + 1);
    return g;
}

void FeatureSchema::validate() const {
    if (feature_names.empty())
        throw std::invalid_argument("schema: needs at least one feature");
    if (class_names.size() < 2)
        throw std::invalid_argument("schema: needs at least two classes");
    if (group_of.size() != feature_names.size())
        throw std::invalid_argument("schema: group map must cover every feature");

    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!valid_identifier(name))
            throw std::invalid_argument("schema: bad feature name '" + name + "'");
        if (!seen.insert(name).second)
            throw std::invalid_argument("schema: duplicate feature name '" + name + "'");
    }
    seen.clear();
    for (const auto& name : class_names) {
        if (!valid_identifier(name))
            throw std::invalid_argument("schema: bad class name '" + name + "'");
        if (!seen.insert(name).second)
            throw std::invalid_argument("schema: duplicate class name '" + name + "'");
    }

    const int g = group_count();
    std::vector<int> members(static_cast<std::size_t>(g), 0);
    for (int gi : group_of) {
        if (gi < 0) throw std::invalid_argument("schema: negative group index");
        ++members[static_cast<std::size_t>(gi)];
    }
    for (int i = 0; i < g; ++i)
        if (members[static_cast<std::size_t>(i)] == 0)
            throw std::invalid_argument("schema: group " + std::to_string(i) + " is empty");
}

int FeatureSchema::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
}

int FeatureSchema::class_index(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return static_cast<int>(i);
    return -1;
}

Conjunction Conjunction::of(std::vector<int> features, double uncertainty) {
    if (features.empty())
        throw std::invalid_argument("conjunction: needs at least one literal");
    if (!(uncertainty >= 0.0 && uncertainty <= 1.0))
        throw std::invalid_argument("conjunction: uncertainty outside [0,1]");
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    Conjunction c;
    c.features = std::move(features);
    c.uncertainty = uncertainty;
    return c;
}

void validate_rule(const DnfRule& rule, const FeatureSchema& schema) {
    if (rule.class_index < 0 || rule.class_index >= schema.class_count())
        throw std::invalid_argument("rule: class index out of range");
    if (rule.conjunctions.empty())
        throw std::invalid_argument("rule: needs at least one conjunction");
    if (!(rule.uncertainty >= 0.0 && rule.uncertainty <= 1.0))
        throw std::invalid_argument("rule: uncertainty outside [0,1]");
    for (const auto& c : rule.conjunctions) {
        if (c.features.empty())
            throw std::invalid_argument("rule: empty conjunction");
        if (!(c.uncertainty >= 0.0 && c.uncertainty <= 1.0))
            throw std::invalid_argument("rule: conjunction uncertainty outside [0,1]");
        for (int f : c.features)
            if (f < 0 || f >= schema.feature_count())
                throw std::invalid_argument("rule: feature index out of range");
    }
}

DnfRule canonicalize(const DnfRule& rule) {
    DnfRule out;
    out.class_index = rule.class_index;
    out.uncertainty = rule.uncertainty;
    out.conjunctions.reserve(rule.conjunctions.size());
    for (const auto& c : rule.conjunctions)
        out.conjunctions.push_back(Conjunction::of(c.features, c.uncertainty));

    std::sort(out.conjunctions.begin(), out.conjunctions.end(),
              [](const Conjunction& a, const Conjunction& b) {
                  return a.features < b.features;
              });

    // Merge duplicate literal sets, keeping the larger uncertainty.
    std::vector<Conjunction> merged;
    for (auto& c : out.conjunctions) {
        if (!merged.empty() && merged.back().features == c.features)
            merged.back().uncertainty = std::max(merged.back().uncertainty, c.uncertainty);
        else
            merged.push_back(std::move(c));
    }
    out.conjunctions = std::move(merged);
    return out;
}

namespace {

std::vector<std::vector<int>> structure_of(const DnfRule& rule) {
    DnfRule canon = canonicalize(rule);
    std::vector<std::vector<int>> s;
    s.reserve(canon.conjunctions.size());
    for (auto& c : canon.conjunctions) s.push_back(std::move(c.features));
    return s;
}

}  // namespace

bool same_structure(const DnfRule& a, const DnfRule& b) {
    return a.class_index == b.class_index && structure_of(a) == structure_of(b);
}

bool structural_less(const DnfRule& a, const DnfRule& b) {
    if (a.class_index != b.class_index) return a.class_index < b.class_index;
    return structure_of(a) < structure_of(b);
}

double conjunction_uncertainty(const std::vector<double>& activated_values) {
    if (activated_values.empty())
        throw std::invalid_argument("conjunction_uncertainty: empty value list");
    double log_sum = 0.0;
    for (double v : activated_values) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("conjunction_uncertainty: value outside [0,1]");
        if (v == 0.0) return 0.0;
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(activated_values.size()));
}

namespace {

void collect_features(const Conjunction& c, std::vector<int>& out) {
    out.insert(out.end(), c.features.begin(), c.features.end());
}

void collect_features(const DnfRule& r, std::vector<int>& out) {
    for (const auto& c : r.conjunctions) collect_features(c, out);
}

bool features_conflict(const std::vector<int>& a, const std::vector<int>& b,
                       const FeatureSchema& schema) {
    for (int fa : a) {
        for (int fb : b) {
            if (fa == fb) continue;
            if (schema.group_of.at(static_cast<std::size_t>(fa)) ==
                schema.group_of.at(static_cast<std::size_t>(fb)))
                return true;
        }
    }
    return false;
}

}  // namespace

bool conflicts(const Conjunction& a, const Conjunction& b, const FeatureSchema& schema) {
    std::vector<int> fa, fb;
    collect_features(a, fa);
    collect_features(b, fb);
    return features_conflict(fa, fb, schema);
}

bool conflicts(const DnfRule& a, const DnfRule& b, const FeatureSchema& schema) {
    std::vector<int> fa, fb;
    collect_features(a, fa);
    collect_features(b, fb);
    return features_conflict(fa, fb, schema);
}

bool conflicts(const DnfRule& a, const Conjunction& b, const FeatureSchema& schema) {
    std::vector<int> fa, fb;
    collect_features(a, fa);
    collect_features(b, fb);
    return features_conflict(fa, fb, schema);
}

bool internally_conflicted(const Conjunction& c, const FeatureSchema& schema) {
    for (std::size_t i = 0; i < c.features.size(); ++i)
        for (std::size_t j = i + 1; j < c.features.size(); ++j)
            if (schema.group_of.at(static_cast<std::size_t>(c.features[i])) ==
                schema.group_of.at(static_cast<std::size_t>(c.features[j])))
                return true;
    return false;
}

bool internally_conflicted(const DnfRule& rule, const FeatureSchema& schema) {
    for (const Conjunction& c : rule.conjunctions)
        if (internally_conflicted(c, schema)) return true;
    return false;
}

DnfRule combine_or(const DnfRule& a, const DnfRule& b) {
    if (a.class_index != b.class_index)
        throw std::invalid_argument("combine_or: class mismatch");
    DnfRule out;
    out.class_index = a.class_index;
    out.conjunctions = a.conjunctions;
    out.conjunctions.insert(out.conjunctions.end(), b.conjunctions.begin(),
                            b.conjunctions.end());
    out.uncertainty = 0.5 * (a.uncertainty + b.uncertainty);
    return canonicalize(out);
}

DnfRule combine_and(const DnfRule& a, const DnfRule& b, const FeatureSchema& schema) {
    if (a.class_index != b.class_index)
        throw std::invalid_argument("combine_and: class mismatch");
    if (conflicts(a, b, schema))
        throw ConflictError("combine_and: operands share a feature group; use combine_or");

    DnfRule out;
    out.class_index = a.class_index;
    for (const auto& ca : a.conjunctions) {
        for (const auto& cb : b.conjunctions) {
            std::vector<int> merged = ca.features;
            merged.insert(merged.end(), cb.features.begin(), cb.features.end());
            double u = conjunction_uncertainty({ca.uncertainty, cb.uncertainty});
            out.conjunctions.push_back(Conjunction::of(std::move(merged), u));
        }
    }
    out = canonicalize(out);

    double sum = 0.0;
    for (const auto& c : out.conjunctions) sum += c.uncertainty;
    out.uncertainty = sum / static_cast<double>(out.conjunctions.size());
    return out;
}

bool rule_satisfied(const DnfRule& rule, const ConceptDataPoint& point,
                    double satisfaction_threshold) {
    if (point.v.size() != point.u.size())
        throw std::invalid_argument("rule_satisfied: v/u length mismatch");
    for (const auto& c : rule.conjunctions)
        for (int f : c.features)
            if (f < 0 || static_cast<std::size_t>(f) >= point.v.size())
                throw std::invalid_argument("rule_satisfied: point dimension mismatch");

    for (const auto& c : rule.conjunctions) {
        bool all = true;
        for (int f : c.features) {
            const auto idx = static_cast<std::size_t>(f);
            if (!(point.v[idx] * point.u[idx] > satisfaction_threshold)) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

std::string to_text(const DnfRule& rule, const FeatureSchema& schema) {
    validate_rule(rule, schema);
    std::ostringstream out;
    out << schema.class_names.at(static_cast<std::size_t>(rule.class_index)) << " <-> ";
    for (std::size_t i = 0; i < rule.conjunctions.size(); ++i) {
        if (i > 0) out << " OR ";
        const auto& c = rule.conjunctions[i];
        out << '(';
        for (std::size_t j = 0; j < c.features.size(); ++j) {
            if (j > 0) out << " AND ";
            out << schema.feature_names.at(static_cast<std::size_t>(c.features[j]));
        }
        out << ") [u=" << format_double(c.uncertainty) << ']';
    }
    out << " [u=" << format_double(rule.uncertainty) << ']';
    return out.str();
}

namespace {

struct RuleLexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("rule parse error at column " +
                                    std::to_string(pos + 1) + ": " + what);
    }

    bool eat(std::string_view token) {
        skip_space();
        if (text.substr(pos, token.size()) != token) return false;
        pos += token.size();
        return true;
    }

    std::string ident() {
        skip_space();
        std::size_t start = pos;
        while (pos < text.size()) {
            char ch = text[pos];
            bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                      (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
            if (!ok) break;
            ++pos;
        }
        if (pos == start) fail("expected a name");
        return std::string(text.substr(start, pos - start));
    }

    double uncertainty_tag() {
        if (!eat("[u=")) fail("expected [u=...]");
        skip_space();
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != ']') ++pos;
        if (pos == text.size()) fail("unterminated [u=...]");
        double value = parse_double(trim(text.substr(start, pos - start)));
        ++pos;  // ']'
        return value;
    }

    bool peek_uncertainty_tag() {
        std::size_t saved = pos;
        skip_space();
        bool is_tag = text.substr(pos, 3) == "[u=";
        pos = saved;
        return is_tag;
    }

    bool at_end() {
        skip_space();
        return pos == text.size();
    }
};

}  // namespace

DnfRule parse_rule_text(const std::string& line, const FeatureSchema& schema) {
    RuleLexer lex{line};

    std::string cls = lex.ident();
    int class_index = schema.class_index(cls);
    if (class_index < 0) lex.fail("unknown class '" + cls + "'");
    if (!lex.eat("<->")) lex.fail("expected <->");

    DnfRule rule;
    rule.class_index = class_index;
    rule.uncertainty = 1.0;

    while (true) {
        if (!lex.eat("(")) lex.fail("expected (");
        std::vector<int> features;
        while (true) {
            std::string name = lex.ident();
            int f = schema.feature_index(name);
            if (f < 0) lex.fail("unknown feature '" + name + "'");
            features.push_back(f);
            if (lex.eat(")")) break;
            if (!lex.eat("AND")) lex.fail("expected AND or )");
        }

        // A tag right after a conjunction followed by OR is that
        // conjunction's. After the final conjunction, two tags are
        // (conjunction, rule) and a single tag is the rule's — matching
        // the bare hand-written form `c <-> (a) OR (b) [u=0.7]`.
        std::optional<double> tag1;
        if (lex.peek_uncertainty_tag()) tag1 = lex.uncertainty_tag();

        if (lex.eat("OR")) {
            rule.conjunctions.push_back(
                Conjunction::of(std::move(features), tag1.value_or(1.0)));
            continue;
        }

        double conj_u = 1.0;
        if (tag1.has_value()) {
            if (lex.peek_uncertainty_tag()) {
                conj_u = *tag1;
                rule.uncertainty = lex.uncertainty_tag();
            } else {
                rule.uncertainty = *tag1;
            }
        }
        rule.conjunctions.push_back(Conjunction::of(std::move(features), conj_u));
        break;
    }

    if (!lex.at_end()) lex.fail("trailing input");
    validate_rule(rule, schema);
    return rule;
}

}  // namespace fedrules
