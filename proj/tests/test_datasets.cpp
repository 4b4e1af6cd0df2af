#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "fedrules/datasets.hpp"
#include "fedrules/rng.hpp"
#include "fedrules/rule_algebra.hpp"

using namespace fedrules;

namespace {

ConfidenceMix mix_of(double d, double p, double g, double nv) {
    ConfidenceMix m;
    m.definitely = d;
    m.probably = p;
    m.guessing = g;
    m.not_visible = nv;
    return m;
}

// True when v is exactly the 0/1 indicator of one of the rule's conjunctions.
bool matches_some_conjunction(const std::vector<double>& v, const DnfRule& rule) {
    for (const Conjunction& c : rule.conjunctions) {
        bool match = true;
        for (std::size_t f = 0; f < v.size(); ++f) {
            bool in = std::binary_search(c.features.begin(), c.features.end(),
                                         static_cast<int>(f));
            if (v[f] != (in ? 1.0 : 0.0)) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("confidence mix validation") {
    CHECK_NOTHROW(mix_of(0.25, 0.25, 0.25, 0.25).validate());
    CHECK_NOTHROW(mix_of(1, 0, 0, 0).validate());
    CHECK_THROWS_AS(mix_of(0.5, 0.5, 0.5, -0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(mix_of(0.5, 0.3, 0.1, 0.0).validate(), std::invalid_argument);
}

TEST_CASE("confidence levels are drawn at the requested rates") {
    ConfidenceMix m = mix_of(0.25, 0.25, 0.25, 0.25);
    Rng rng(7);
    std::map<double, int> counts;
    const int N = 20000;
    for (int i = 0; i < N; ++i) counts[m.sample_value(rng)]++;
    for (double level : {1.0, 0.7, 0.5, 0.0}) {
        double frac = counts[level] / static_cast<double>(N);
        CHECK(frac == doctest::Approx(0.25).epsilon(0.1));
    }

    // Exactly one generator draw per sample: a sibling generator advanced by
    // one uniform per step stays in lock-step.
    Rng a(11), b(11);
    for (int i = 0; i < 50; ++i) {
        m.sample_value(a);
        b.uniform01();
    }
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("planted spec lays out disjoint class blocks with cycling groups") {
    ConfidenceMix all = mix_of(1, 0, 0, 0);
    GeneratorSpec spec = make_planted_spec(20, 5, 4, 2, 2, all, 0.0, 100, 42);
    CHECK(spec.schema.feature_count() == 20);
    CHECK(spec.schema.group_count() == 5);
    CHECK(spec.schema.class_count() == 4);
    REQUIRE(spec.planted_rules.size() == 4);

    std::set<int> used;
    for (int c = 0; c < 4; ++c) {
        const DnfRule& rule = spec.planted_rules[static_cast<std::size_t>(c)];
        CHECK(rule.class_index == c);
        CHECK(rule.uncertainty == 1.0);
        REQUIRE(rule.conjunctions.size() == 2);
        for (const Conjunction& conj : rule.conjunctions) {
            CHECK(conj.features.size() == 2);
            CHECK_FALSE(internally_conflicted(conj, spec.schema));
            for (int f : conj.features) {
                CHECK(f / 5 == c);  // block of 5 features per class
                used.insert(f);
            }
        }
    }
    CHECK(used.size() == 12);  // per class: features {b, b+1, b+2}

    CHECK_THROWS_AS(make_planted_spec(20, 5, 4, 2, 6, all, 0.0, 100, 1),
                    std::invalid_argument);  // conjunction longer than group count
    CHECK_THROWS_AS(make_planted_spec(8, 4, 4, 2, 2, all, 0.0, 100, 1),
                    std::invalid_argument);  // class block too small
}

TEST_CASE("generator spec validation rejects degenerate plants") {
    FeatureSchema s;
    s.feature_names = {"a", "b", "c", "d"};
    s.group_of = {0, 1, 0, 1};
    s.class_names = {"x", "y"};
    s.validate();

    GeneratorSpec spec;
    spec.schema = s;
    spec.n_points = 10;

    DnfRule rx;
    rx.class_index = 0;
    rx.conjunctions = {Conjunction::of({0, 1}, 1.0)};
    DnfRule ry;
    ry.class_index = 1;
    ry.conjunctions = {Conjunction::of({2, 3}, 1.0)};

    spec.planted_rules = {rx};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // one rule missing

    spec.planted_rules = {ry, rx};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // order mismatch

    spec.planted_rules = {rx, ry};
    CHECK_NOTHROW(spec.validate());

    // A conjunction asserting two features of one exclusive group.
    DnfRule conflicted = ry;
    conflicted.conjunctions = {Conjunction::of({1, 3}, 1.0)};
    spec.planted_rules = {rx, conflicted};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    // Subset plants: a point built for {a AND b} would also satisfy {a}.
    DnfRule subset = ry;
    subset.conjunctions = {Conjunction::of({0}, 1.0)};
    spec.planted_rules = {rx, subset};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("noiseless confident generation reproduces the planted structure") {
    GeneratorSpec spec =
        make_planted_spec(20, 5, 4, 2, 2, mix_of(1, 0, 0, 0), 0.0, 400, 2024);
    std::vector<ConceptDataPoint> data = generate_cub_like(spec);
    REQUIRE(data.size() == 400);

    std::set<int> labels_seen;
    for (const ConceptDataPoint& p : data) {
        REQUIRE(p.label >= 0);
        REQUIRE(p.label < 4);
        labels_seen.insert(p.label);
        const DnfRule& own = spec.planted_rules[static_cast<std::size_t>(p.label)];
        CHECK(matches_some_conjunction(p.v, own));
        for (double u : p.u) CHECK(u == 1.0);
        CHECK(rule_satisfied(own, p, 0.5));
        for (int c = 0; c < 4; ++c)
            if (c != p.label)
                CHECK_FALSE(
                    rule_satisfied(spec.planted_rules[static_cast<std::size_t>(c)], p, 0.5));
    }
    CHECK(labels_seen.size() == 4);
}

TEST_CASE("an all-not-visible mix zeroes every confidence score") {
    GeneratorSpec spec =
        make_planted_spec(12, 4, 2, 1, 2, mix_of(0, 0, 0, 1), 0.0, 50, 3);
    for (const ConceptDataPoint& p : generate_cub_like(spec))
        for (double u : p.u) CHECK(u == 0.0);
}

TEST_CASE("noise flips the expected fraction and leaves everything else aligned") {
    ConfidenceMix m = mix_of(0.4, 0.3, 0.2, 0.1);
    GeneratorSpec clean = make_planted_spec(20, 5, 4, 2, 2, m, 0.0, 1000, 77);
    GeneratorSpec noisy = clean;
    noisy.noise_rate = 0.1;

    std::vector<ConceptDataPoint> a = generate_cub_like(clean);
    std::vector<ConceptDataPoint> b = generate_cub_like(noisy);
    REQUIRE(a.size() == b.size());

    long flips = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == b[i].label);  // label stream unaffected by noise
        CHECK(a[i].u == b[i].u);          // confidence stream unaffected
        for (std::size_t f = 0; f < a[i].v.size(); ++f) {
            ++total;
            if (a[i].v[f] != b[i].v[f]) ++flips;
        }
    }
    double frac = static_cast<double>(flips) / static_cast<double>(total);
    CHECK(frac == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("confidence scores are constant within each feature group") {
    GeneratorSpec spec =
        make_planted_spec(20, 5, 4, 2, 2, mix_of(0.3, 0.3, 0.2, 0.2), 0.05, 200, 9);
    for (const ConceptDataPoint& p : generate_cub_like(spec)) {
        std::map<int, double> level;
        for (int f = 0; f < 20; ++f) {
            int g = spec.schema.group_of[static_cast<std::size_t>(f)];
            auto [it, fresh] = level.try_emplace(g, p.u[static_cast<std::size_t>(f)]);
            if (!fresh) CHECK(it->second == p.u[static_cast<std::size_t>(f)]);
        }
        for (auto& [g, u] : level)
            CHECK((u == 1.0 || u == 0.7 || u == 0.5 || u == 0.0));
    }
}

TEST_CASE("generation is a pure function of the spec") {
    GeneratorSpec spec =
        make_planted_spec(16, 4, 2, 2, 2, mix_of(0.5, 0.2, 0.2, 0.1), 0.07, 300, 555);
    std::vector<ConceptDataPoint> a = generate_cub_like(spec);
    std::vector<ConceptDataPoint> b = generate_cub_like(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].v == b[i].v);
        CHECK(a[i].u == b[i].u);
        CHECK(a[i].label == b[i].label);
    }
}

TEST_CASE("overlay generation blends prototypes at the confidence ratio") {
    OverlaySpec spec = make_overlay_spec(4, 2000, 11);
    REQUIRE(spec.prototypes.size() == 4);
    for (int d = 0; d < 4; ++d)
        for (int f = 0; f < 4; ++f)
            CHECK(spec.prototypes[static_cast<std::size_t>(d)][static_cast<std::size_t>(f)] ==
                  ((d == f) ? 1.0 : 0.0));

    std::vector<ConceptDataPoint> data = generate_mnist_like(spec);
    REQUIRE(data.size() == 2000);
    int unchanged = 0;
    for (const ConceptDataPoint& p : data) {
        REQUIRE(p.v.size() == 4);
        double u0 = p.u[0];
        for (double u : p.u) CHECK(u == u0);  // one score for the whole point
        if (u0 == 1.0) {
            ++unchanged;
            // Exactly one prototype; its parity is the label.
            int base = -1;
            for (int f = 0; f < 4; ++f)
                if (p.v[static_cast<std::size_t>(f)] == 1.0) base = f;
            REQUIRE(base >= 0);
            CHECK(p.label == base % 2);
        } else {
            REQUIRE((u0 == 0.7 || u0 == 0.5));
            // Blended one-hot prototypes: base carries weight r, other 1-r.
            int hi = 0, lo = 0;
            for (int f = 0; f < 4; ++f) {
                double x = p.v[static_cast<std::size_t>(f)];
                if (x == u0) ++hi;
                if (x == 1.0 - u0) ++lo;
            }
            if (u0 == 0.7) {
                CHECK(hi == 1);
                CHECK(lo == 1);
                int base = -1;
                for (int f = 0; f < 4; ++f)
                    if (p.v[static_cast<std::size_t>(f)] == u0) base = f;
                CHECK(p.label == base % 2);
            } else {
                // r = 0.5 makes both prototypes carry 0.5, so the two
                // counters see the same pair of features.
                CHECK(hi == 2);
                CHECK(lo == 2);
            }
        }
    }
    CHECK(unchanged / 2000.0 == doctest::Approx(0.5).epsilon(0.1));

    CHECK_THROWS_AS(make_overlay_spec(1, 10, 1), std::invalid_argument);
}

TEST_CASE("overlay schema names digit features in one exclusive group") {
    OverlaySpec spec = make_overlay_spec(3, 10, 1);
    FeatureSchema s = overlay_schema(spec);
    CHECK(s.feature_count() == 3);
    CHECK(s.group_count() == 1);
    CHECK(s.class_names == std::vector<std::string>{"even", "odd"});
    CHECK(s.feature_names[0] == "digit_0");
}

TEST_CASE("partition carves test, validation, and near-equal shards") {
    std::vector<ConceptDataPoint> data;
    for (int i = 0; i < 1000; ++i) {
        ConceptDataPoint p;
        p.v = {i / 1000.0};  // unique tag per point
        p.u = {1.0};
        p.label = i % 2;
        data.push_back(p);
    }

    FederatedSplit split = partition(data, 10, 0.05, 0.05, 99);
    CHECK(split.test.size() == 50);
    CHECK(split.validation.size() == 50);
    REQUIRE(split.client_shards.size() == 10);
    for (const auto& shard : split.client_shards) CHECK(shard.size() == 90);

    // Every input point lands in exactly one part.
    std::vector<double> tags;
    for (const ConceptDataPoint& p : split.test) tags.push_back(p.v[0]);
    for (const ConceptDataPoint& p : split.validation) tags.push_back(p.v[0]);
    for (const auto& shard : split.client_shards)
        for (const ConceptDataPoint& p : shard) tags.push_back(p.v[0]);
    std::sort(tags.begin(), tags.end());
    std::vector<double> expected;
    for (int i = 0; i < 1000; ++i) expected.push_back(i / 1000.0);
    CHECK(tags == expected);

    // Shard sizes differ by at most one when K does not divide the pool.
    FederatedSplit uneven = partition(data, 7, 0.05, 0.05, 99);
    std::size_t lo = uneven.client_shards[0].size(), hi = lo;
    std::size_t total = 0;
    for (const auto& shard : uneven.client_shards) {
        lo = std::min(lo, shard.size());
        hi = std::max(hi, shard.size());
        total += shard.size();
    }
    CHECK(hi - lo <= 1);
    CHECK(total == 900);

    FederatedSplit single = partition(data, 1, 0.05, 0.05, 99);
    CHECK(single.client_shards.size() == 1);
    CHECK(single.client_shards[0].size() == 900);

    FederatedSplit again = partition(data, 10, 0.05, 0.05, 99);
    for (std::size_t k = 0; k < 10; ++k)
        for (std::size_t i = 0; i < 90; ++i)
            CHECK(again.client_shards[k][i].v == split.client_shards[k][i].v);

    CHECK_THROWS_AS(partition(data, 0, 0.05, 0.05, 1), std::invalid_argument);
    CHECK_THROWS_AS(partition(data, 10, 0.5, 0.05, 1), std::invalid_argument);
    std::vector<ConceptDataPoint> tiny(data.begin(), data.begin() + 5);
    CHECK_THROWS_AS(partition(tiny, 10, 0.0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("degrade_shard rewrites confidence and flips features") {
    GeneratorSpec spec =
        make_planted_spec(12, 4, 2, 1, 2, mix_of(1, 0, 0, 0), 0.0, 80, 5);
    std::vector<ConceptDataPoint> shard = generate_cub_like(spec);

    std::vector<ConceptDataPoint> zeroed =
        degrade_shard(shard, spec.schema, mix_of(0, 0, 0, 1), 0.0, 13);
    REQUIRE(zeroed.size() == shard.size());
    for (std::size_t i = 0; i < shard.size(); ++i) {
        CHECK(zeroed[i].v == shard[i].v);  // noise 0: features untouched
        CHECK(zeroed[i].label == shard[i].label);
        for (double u : zeroed[i].u) CHECK(u == 0.0);
    }

    std::vector<ConceptDataPoint> flipped =
        degrade_shard(shard, spec.schema, mix_of(1, 0, 0, 0), 1.0, 13);
    for (std::size_t i = 0; i < shard.size(); ++i)
        for (std::size_t f = 0; f < shard[i].v.size(); ++f)
            CHECK(flipped[i].v[f] == 1.0 - shard[i].v[f]);

    std::vector<ConceptDataPoint> a =
        degrade_shard(shard, spec.schema, mix_of(0.3, 0.3, 0.2, 0.2), 0.2, 21);
    std::vector<ConceptDataPoint> b =
        degrade_shard(shard, spec.schema, mix_of(0.3, 0.3, 0.2, 0.2), 0.2, 21);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].v == b[i].v);
        CHECK(a[i].u == b[i].u);
        std::map<int, double> level;
        for (int f = 0; f < 12; ++f) {
            int g = spec.schema.group_of[static_cast<std::size_t>(f)];
            auto [it, fresh] = level.try_emplace(g, a[i].u[static_cast<std::size_t>(f)]);
            if (!fresh) CHECK(it->second == a[i].u[static_cast<std::size_t>(f)]);
        }
    }

    std::vector<ConceptDataPoint> wrong = {ConceptDataPoint{{1.0}, {1.0}, 0}};
    CHECK_THROWS_AS(degrade_shard(wrong, spec.schema, mix_of(1, 0, 0, 0), 0.0, 1),
                    std::invalid_argument);
}

TEST_CASE("dataset text round-trips exactly") {
    GeneratorSpec spec =
        make_planted_spec(10, 5, 2, 1, 3, mix_of(0.4, 0.3, 0.2, 0.1), 0.15, 60, 31);
    std::vector<ConceptDataPoint> data = generate_cub_like(spec);

    std::stringstream buf;
    write_dataset(buf, spec.schema, data);
    LoadedDataset back = read_dataset(buf);

    CHECK(back.schema.feature_names == spec.schema.feature_names);
    CHECK(back.schema.group_of == spec.schema.group_of);
    CHECK(back.schema.class_names == spec.schema.class_names);
    REQUIRE(back.points.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.points[i].v == data[i].v);
        CHECK(back.points[i].u == data[i].u);
        CHECK(back.points[i].label == data[i].label);
    }
}

TEST_CASE("dataset reader rejects malformed input") {
    auto reject = [](const std::string& text) {
        std::stringstream in(text);
        CHECK_THROWS_AS(read_dataset(in), std::runtime_error);
    };
    reject("wrong header\n");
    reject("fedrules-dataset v1\nfeatures a b\nclasses x y\n");  // missing :group
    reject("fedrules-dataset v1\nfeatures a:0 b:0\nclasses x y\n0 1\n");  // short line
    reject("fedrules-dataset v1\nfeatures a:0 b:0\nclasses x y\n5 1 0 1 1\n");  // bad label
    reject("fedrules-dataset v1\nfeatures a:0 b:0\nclasses x y\n0 2 0 1 1\n");  // v out of range
}
