#include "fedrules/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedrules/text_util.hpp"

namespace fedrules {

void ConfidenceMix::validate() const {
    const double parts[4] = {definitely, probably, guessing, not_visible};
    double total = 0.0;
    for (double p : parts) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("confidence mix fraction outside [0,1]");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("confidence mix fractions must sum to 1");
}

double ConfidenceMix::sample_value(Rng& rng) const {
    double x = rng.uniform01();
    if (x < definitely) return 1.0;
    x -= definitely;
    if (x < probably) return 0.7;
    x -= probably;
    if (x < guessing) return 0.5;
    return 0.0;
}

void GeneratorSpec::validate() const {
    schema.validate();
    confidence_mix.validate();
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
        throw std::invalid_argument("noise_rate outside [0,1]");
    if (n_points < 0) throw std::invalid_argument("negative n_points");
    if (static_cast<int>(planted_rules.size()) != schema.class_count())
        throw std::invalid_argument("need exactly one planted rule per class");

    for (int c = 0; c < schema.class_count(); ++c) {
        if (planted_rules[c].class_index != c)
            throw std::invalid_argument("planted rule order must follow class indices");
        validate_rule(planted_rules[c], schema);
        if (internally_conflicted(planted_rules[c], schema))
            throw std::invalid_argument(
                "planted conjunction asserts two features from one group");
    }

    // Mutual satisfiable-distinctness: a point built from one class's
    // conjunction (those features on, everything else off) must not satisfy
    // any other class's rule. That happens exactly when another class has a
    // conjunction whose feature set is a subset of this one.
    for (int c = 0; c < schema.class_count(); ++c) {
        for (const Conjunction& own : planted_rules[c].conjunctions) {
            for (int other = 0; other < schema.class_count(); ++other) {
                if (other == c) continue;
                for (const Conjunction& theirs : planted_rules[other].conjunctions) {
                    bool subset = std::includes(own.features.begin(), own.features.end(),
                                                theirs.features.begin(), theirs.features.end());
                    if (subset)
                        throw std::invalid_argument(
                            "planted rules are not satisfiable-distinct: class " +
                            schema.class_names[other] + " overlaps class " +
                            schema.class_names[c]);
                }
            }
        }
    }
}

std::vector<ConceptDataPoint> generate_cub_like(const GeneratorSpec& spec) {
    spec.validate();
    const int F = spec.schema.feature_count();
    const int G = spec.schema.group_count();
    const int C = spec.schema.class_count();
    Rng rng(derive_seed(spec.seed, {kSeedDataset}));

    std::vector<ConceptDataPoint> points;
    points.reserve(static_cast<std::size_t>(spec.n_points));
    std::vector<double> group_level(static_cast<std::size_t>(G));

    // Per-point draw order is fixed (class, conjunction, G confidence
    // draws, F noise draws) so runs differing only in noise_rate stay
    // aligned and can be compared flip-by-flip.
    for (int i = 0; i < spec.n_points; ++i) {
        ConceptDataPoint p;
        p.label = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(C)));
        const DnfRule& rule = spec.planted_rules[p.label];
        std::size_t ci = static_cast<std::size_t>(
            rng.uniform_below(static_cast<std::uint64_t>(rule.conjunctions.size())));

        p.v.assign(static_cast<std::size_t>(F), 0.0);
        for (int f : rule.conjunctions[ci].features) p.v[static_cast<std::size_t>(f)] = 1.0;

        for (int g = 0; g < G; ++g)
            group_level[static_cast<std::size_t>(g)] = spec.confidence_mix.sample_value(rng);
        p.u.resize(static_cast<std::size_t>(F));
        for (int f = 0; f < F; ++f)
            p.u[static_cast<std::size_t>(f)] =
                group_level[static_cast<std::size_t>(spec.schema.group_of[f])];

        for (int f = 0; f < F; ++f)
            if (rng.bernoulli(spec.noise_rate))
                p.v[static_cast<std::size_t>(f)] = 1.0 - p.v[static_cast<std::size_t>(f)];

        points.push_back(std::move(p));
    }
    return points;
}

void OverlaySpec::validate() const {
    if (prototypes.size() < 2)
        throw std::invalid_argument("overlay needs at least two prototype classes");
    std::size_t width = prototypes.front().size();
    if (width == 0) throw std::invalid_argument("empty prototype vector");
    for (const std::vector<double>& proto : prototypes) {
        if (proto.size() != width)
            throw std::invalid_argument("prototype vectors differ in length");
        for (double x : proto)
            if (!(x >= 0.0 && x <= 1.0))
                throw std::invalid_argument("prototype component outside [0,1]");
    }
    if (!(p_unchanged >= 0.0 && p_unchanged <= 1.0))
        throw std::invalid_argument("p_unchanged outside [0,1]");
    if (mix_ratios.empty()) throw std::invalid_argument("no mix ratios");
    for (double r : mix_ratios)
        if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("mix ratio outside (0,1]");
    if (n_points < 0) throw std::invalid_argument("negative n_points");
}

std::vector<ConceptDataPoint> generate_mnist_like(const OverlaySpec& spec) {
    spec.validate();
    const std::size_t D = spec.prototypes.size();
    const std::size_t F = spec.prototypes.front().size();
    Rng rng(derive_seed(spec.seed, {kSeedDataset}));

    std::vector<ConceptDataPoint> points;
    points.reserve(static_cast<std::size_t>(spec.n_points));
    for (int i = 0; i < spec.n_points; ++i) {
        std::size_t base = static_cast<std::size_t>(rng.uniform_below(D));
        ConceptDataPoint p;
        p.label = static_cast<int>(base % 2);  // 0 = even base digit, 1 = odd

        if (rng.bernoulli(spec.p_unchanged)) {
            p.v = spec.prototypes[base];
            p.u.assign(F, 1.0);
        } else {
            std::size_t other = static_cast<std::size_t>(rng.uniform_below(D - 1));
            if (other >= base) ++other;
            double r = spec.mix_ratios[static_cast<std::size_t>(
                rng.uniform_below(spec.mix_ratios.size()))];
            p.v.resize(F);
            for (std::size_t f = 0; f < F; ++f)
                p.v[f] = r * spec.prototypes[base][f] + (1.0 - r) * spec.prototypes[other][f];
            p.u.assign(F, r);
        }
        points.push_back(std::move(p));
    }
    return points;
}

FeatureSchema overlay_schema(const OverlaySpec& spec) {
    spec.validate();
    FeatureSchema schema;
    std::size_t F = spec.prototypes.front().size();
    for (std::size_t f = 0; f < F; ++f) {
        schema.feature_names.push_back("digit_" + std::to_string(f));
        schema.group_of.push_back(0);  // digit identity is one exclusive group
    }
    schema.class_names = {"even", "odd"};
    schema.validate();
    return schema;
}

FederatedSplit partition(const std::vector<ConceptDataPoint>& data, int K, double val_frac,
                         double test_frac, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("need at least one client");
    if (!(val_frac >= 0.0 && val_frac < 0.5) || !(test_frac >= 0.0 && test_frac < 0.5))
        throw std::invalid_argument("split fractions must lie in [0, 0.5)");

    std::vector<ConceptDataPoint> pool = data;
    Rng rng(derive_seed(seed, {kSeedPartition}));
    rng.shuffle(pool);

    std::size_t n = pool.size();
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
    if (n_test + n_val > n || n - n_test - n_val < static_cast<std::size_t>(K))
        throw std::invalid_argument("not enough points for the requested split");

    FederatedSplit split;
    auto it = pool.begin();
    split.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
    it += static_cast<std::ptrdiff_t>(n_test);
    split.validation.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);

    std::size_t n_train = n - n_test - n_val;
    std::size_t base = n_train / static_cast<std::size_t>(K);
    std::size_t extra = n_train % static_cast<std::size_t>(K);
    split.client_shards.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::size_t take = base + (static_cast<std::size_t>(k) < extra ? 1 : 0);
        split.client_shards[static_cast<std::size_t>(k)]
            .assign(it, it + static_cast<std::ptrdiff_t>(take));
        it += static_cast<std::ptrdiff_t>(take);
    }
    return split;
}

std::vector<ConceptDataPoint> degrade_shard(const std::vector<ConceptDataPoint>& shard,
                                            const FeatureSchema& schema,
                                            const ConfidenceMix& mix, double noise_rate,
                                            std::uint64_t seed) {
    schema.validate();
    mix.validate();
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
        throw std::invalid_argument("noise_rate outside [0,1]");
    const int F = schema.feature_count();
    const int G = schema.group_count();

    Rng rng(derive_seed(seed, {kSeedDegrade}));
    std::vector<ConceptDataPoint> out = shard;
    std::vector<double> group_level(static_cast<std::size_t>(G));
    for (ConceptDataPoint& p : out) {
        if (static_cast<int>(p.v.size()) != F)
            throw std::invalid_argument("shard point does not match schema");
        for (int g = 0; g < G; ++g)
            group_level[static_cast<std::size_t>(g)] = mix.sample_value(rng);
        for (int f = 0; f < F; ++f)
            p.u[static_cast<std::size_t>(f)] =
                group_level[static_cast<std::size_t>(schema.group_of[f])];
        for (int f = 0; f < F; ++f)
            if (rng.bernoulli(noise_rate))
                p.v[static_cast<std::size_t>(f)] = 1.0 - p.v[static_cast<std::size_t>(f)];
    }
    return out;
}

GeneratorSpec make_planted_spec(int feature_count, int group_count, int class_count,
                                int conjunctions_per_class, int features_per_conjunction,
                                const ConfidenceMix& mix, double noise_rate, int n_points,
                                std::uint64_t seed) {
    if (feature_count < 1 || group_count < 1 || class_count < 2)
        throw std::invalid_argument("planted spec needs >=1 feature, >=1 group, >=2 classes");
    if (conjunctions_per_class < 1 || features_per_conjunction < 1)
        throw std::invalid_argument("planted rules need >=1 conjunction of >=1 feature");
    if (features_per_conjunction > group_count)
        throw std::invalid_argument(
            "conjunction longer than the group count would repeat a group");
    int block = feature_count / class_count;
    if (block < features_per_conjunction + conjunctions_per_class - 1)
        throw std::invalid_argument("per-class feature block too small for requested rules");

    GeneratorSpec spec;
    for (int f = 0; f < feature_count; ++f) {
        spec.schema.feature_names.push_back("f" + std::to_string(f));
        spec.schema.group_of.push_back(f % group_count);
    }
    for (int c = 0; c < class_count; ++c)
        spec.schema.class_names.push_back("class_" + std::to_string(c));
    spec.schema.validate();

    // Class c owns features [c*block, (c+1)*block); conjunction j is the run
    // of features starting at offset j. Consecutive features cycle through
    // groups, so no conjunction repeats a group; disjoint blocks make the
    // rules mutually satisfiable-distinct.
    for (int c = 0; c < class_count; ++c) {
        DnfRule rule;
        rule.class_index = c;
        rule.uncertainty = 1.0;
        for (int j = 0; j < conjunctions_per_class; ++j) {
            std::vector<int> feats;
            for (int o = 0; o < features_per_conjunction; ++o)
                feats.push_back(c * block + j + o);
            rule.conjunctions.push_back(Conjunction::of(std::move(feats), 1.0));
        }
        spec.planted_rules.push_back(canonicalize(rule));
    }

    spec.confidence_mix = mix;
    spec.noise_rate = noise_rate;
    spec.n_points = n_points;
    spec.seed = seed;
    spec.validate();
    return spec;
}

OverlaySpec make_overlay_spec(int digit_count, int n_points, std::uint64_t seed) {
    if (digit_count < 2) throw std::invalid_argument("need at least two digits");
    OverlaySpec spec;
    spec.prototypes.assign(static_cast<std::size_t>(digit_count),
                           std::vector<double>(static_cast<std::size_t>(digit_count), 0.0));
    for (int d = 0; d < digit_count; ++d)
        spec.prototypes[static_cast<std::size_t>(d)][static_cast<std::size_t>(d)] = 1.0;
    spec.n_points = n_points;
    spec.seed = seed;
    return spec;
}

void write_dataset(std::ostream& out, const FeatureSchema& schema,
                   const std::vector<ConceptDataPoint>& points) {
    schema.validate();
    out << "fedrules-dataset v1\n";
    out << "features";
    for (int f = 0; f < schema.feature_count(); ++f)
        out << ' ' << schema.feature_names[static_cast<std::size_t>(f)] << ':'
            << schema.group_of[static_cast<std::size_t>(f)];
    out << "\nclasses";
    for (const std::string& name : schema.class_names) out << ' ' << name;
    out << '\n';

    const std::size_t F = static_cast<std::size_t>(schema.feature_count());
    for (const ConceptDataPoint& p : points) {
        if (p.v.size() != F || p.u.size() != F)
            throw std::invalid_argument("point does not match schema width");
        out << p.label;
        for (double x : p.v) out << ' ' << format_double(x);
        for (double x : p.u) out << ' ' << format_double(x);
        out << '\n';
    }
}

LoadedDataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "fedrules-dataset v1")
        throw std::runtime_error("dataset: bad header line");

    LoadedDataset loaded;
    if (!std::getline(in, line)) throw std::runtime_error("dataset: missing feature line");
    std::vector<std::string> toks = split(trim(line), ' ');
    if (toks.empty() || toks[0] != "features")
        throw std::runtime_error("dataset: malformed feature line");
    for (std::size_t i = 1; i < toks.size(); ++i) {
        std::size_t colon = toks[i].rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == toks[i].size())
            throw std::runtime_error("dataset: feature entry must be name:group");
        loaded.schema.feature_names.push_back(toks[i].substr(0, colon));
        loaded.schema.group_of.push_back(parse_int(toks[i].substr(colon + 1)));
    }

    if (!std::getline(in, line)) throw std::runtime_error("dataset: missing class line");
    toks = split(trim(line), ' ');
    if (toks.empty() || toks[0] != "classes")
        throw std::runtime_error("dataset: malformed class line");
    loaded.schema.class_names.assign(toks.begin() + 1, toks.end());
    loaded.schema.validate();

    const std::size_t F = static_cast<std::size_t>(loaded.schema.feature_count());
    while (std::getline(in, line)) {
        std::string body = trim(line);
        if (body.empty()) continue;
        toks = split(body, ' ');
        if (toks.size() != 1 + 2 * F)
            throw std::runtime_error("dataset: point line has wrong field count");
        ConceptDataPoint p;
        p.label = parse_int(toks[0]);
        if (p.label < 0 || p.label >= loaded.schema.class_count())
            throw std::runtime_error("dataset: label outside class range");
        p.v.resize(F);
        p.u.resize(F);
        for (std::size_t f = 0; f < F; ++f) {
            p.v[f] = parse_double(toks[1 + f]);
            p.u[f] = parse_double(toks[1 + F + f]);
            if (!(p.v[f] >= 0.0 && p.v[f] <= 1.0) || !(p.u[f] >= 0.0 && p.u[f] <= 1.0))
                throw std::runtime_error("dataset: component outside [0,1]");
        }
        loaded.points.push_back(std::move(p));
    }
    return loaded;
}

void write_dataset_file(const std::string& path, const FeatureSchema& schema,
                        const std::vector<ConceptDataPoint>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
    write_dataset(out, schema, points);
    if (!out.good()) throw std::runtime_error("failed writing dataset file: " + path);
}

LoadedDataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    return read_dataset(in);
}

}  // namespace fedrules
