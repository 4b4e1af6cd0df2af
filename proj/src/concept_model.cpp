#include "fedrules/concept_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fedrules/rng.hpp"
#include "fedrules/text_util.hpp"

namespace fedrules {

ConceptPredictor::ConceptPredictor(int features, int classes)
    : feature_count(features), class_count(classes) {
    if (features <= 0 || classes < 2)
        throw std::invalid_argument("concept predictor needs >=1 feature and >=2 classes");
    weights.assign(static_cast<std::size_t>(features) * classes, 0.0);
    bias.assign(static_cast<std::size_t>(classes), 0.0);
}

void randomize(ConceptPredictor& model, Rng& rng, double scale) {
    if (!(scale >= 0.0)) throw std::invalid_argument("negative initialization scale");
    for (double& w : model.weights) w = (2.0 * rng.uniform01() - 1.0) * scale;
    for (double& b : model.bias) b = (2.0 * rng.uniform01() - 1.0) * scale;
}

std::vector<double> apply_uncertainty(const ConceptDataPoint& point) {
    if (point.v.size() != point.u.size())
        throw std::invalid_argument("activation and confidence vectors differ in length");
    std::vector<double> vhat(point.v.size());
    for (std::size_t i = 0; i < point.v.size(); ++i) vhat[i] = point.v[i] * point.u[i];
    return vhat;
}

std::vector<double> logits(const ConceptPredictor& model, const std::vector<double>& vhat) {
    if (static_cast<int>(vhat.size()) != model.feature_count)
        throw std::invalid_argument("activation vector length does not match model");
    std::vector<double> z(static_cast<std::size_t>(model.class_count));
    for (int c = 0; c < model.class_count; ++c) {
        double acc = model.bias[c];
        const double* row = model.weights.data() + static_cast<std::size_t>(c) * model.feature_count;
        for (int f = 0; f < model.feature_count; ++f) acc += row[f] * vhat[f];
        z[c] = acc;
    }
    return z;
}

static std::vector<double> softmax(std::vector<double> z) {
    double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z) v /= total;
    return z;
}

std::vector<double> class_probabilities(const ConceptPredictor& model,
                                        const std::vector<double>& vhat) {
    return softmax(logits(model, vhat));
}

int predict_scaled(const ConceptPredictor& model, const std::vector<double>& vhat) {
    std::vector<double> z = logits(model, vhat);
    int best = 0;
    for (int c = 1; c < model.class_count; ++c)
        if (z[c] > z[best]) best = c;
    return best;
}

int predict(const ConceptPredictor& model, const ConceptDataPoint& point) {
    return predict_scaled(model, apply_uncertainty(point));
}

static void check_labels(const ConceptPredictor& model,
                         const std::vector<ConceptDataPoint>& data) {
    for (const ConceptDataPoint& p : data) {
        if (p.label < 0 || p.label >= model.class_count)
            throw std::invalid_argument("data point label outside model's class range");
        if (static_cast<int>(p.v.size()) != model.feature_count)
            throw std::invalid_argument("data point feature count does not match model");
    }
}

double cross_entropy(const ConceptPredictor& model, const std::vector<ConceptDataPoint>& data) {
    if (data.empty()) throw std::invalid_argument("cross entropy of empty dataset");
    check_labels(model, data);
    double total = 0.0;
    for (const ConceptDataPoint& p : data) {
        std::vector<double> probs = class_probabilities(model, apply_uncertainty(p));
        double q = std::max(probs[p.label], std::numeric_limits<double>::min());
        total -= std::log(q);
    }
    return total / static_cast<double>(data.size());
}

std::vector<double> train(ConceptPredictor& model, const std::vector<ConceptDataPoint>& data,
                          const TrainConfig& config) {
    if (data.empty()) throw std::invalid_argument("training on empty dataset");
    if (config.epochs < 0) throw std::invalid_argument("negative epoch count");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    check_labels(model, data);

    const int F = model.feature_count;
    const int C = model.class_count;
    const double inv_n = 1.0 / static_cast<double>(data.size());

    std::vector<std::vector<double>> scaled;
    scaled.reserve(data.size());
    for (const ConceptDataPoint& p : data) scaled.push_back(apply_uncertainty(p));

    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(config.epochs));
    std::vector<double> grad_w(model.weights.size());
    std::vector<double> grad_b(model.bias.size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;

        for (std::size_t i = 0; i < data.size(); ++i) {
            std::vector<double> probs = class_probabilities(model, scaled[i]);
            double q = std::max(probs[data[i].label], std::numeric_limits<double>::min());
            loss -= std::log(q);
            for (int c = 0; c < C; ++c) {
                double delta = probs[c] - (c == data[i].label ? 1.0 : 0.0);
                grad_b[c] += delta;
                double* grow = grad_w.data() + static_cast<std::size_t>(c) * F;
                const double* x = scaled[i].data();
                for (int f = 0; f < F; ++f) grow[f] += delta * x[f];
            }
        }

        loss *= inv_n;
        if (!std::isfinite(loss)) throw std::runtime_error("training loss is not finite");
        losses.push_back(loss);

        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            model.weights[j] -= config.learning_rate * grad_w[j] * inv_n;
            if (!std::isfinite(model.weights[j]))
                throw std::runtime_error("model weight is not finite");
        }
        for (std::size_t j = 0; j < model.bias.size(); ++j) {
            model.bias[j] -= config.learning_rate * grad_b[j] * inv_n;
            if (!std::isfinite(model.bias[j])) throw std::runtime_error("model bias is not finite");
        }
    }
    return losses;
}

std::vector<double> relevance_matrix(const ConceptPredictor& model) {
    const int F = model.feature_count;
    const int C = model.class_count;
    std::vector<double> rel(static_cast<std::size_t>(F) * C, 0.0);
    for (int c = 0; c < C; ++c) {
        double peak = 0.0;
        for (int f = 0; f < F; ++f) peak = std::max(peak, std::abs(model.weight_at(c, f)));
        if (peak == 0.0) continue;
        for (int f = 0; f < F; ++f)
            rel[static_cast<std::size_t>(f) * C + c] = std::abs(model.weight_at(c, f)) / peak;
    }
    return rel;
}

std::optional<SampleRule> extract_sample_rule(const ConceptPredictor& model,
                                              const FeatureSchema& schema,
                                              const ConceptDataPoint& point,
                                              double relevance_threshold,
                                              double satisfaction_threshold) {
    if (schema.feature_count() != model.feature_count ||
        schema.class_count() != model.class_count)
        throw std::invalid_argument("schema does not match model shape");

    std::vector<double> vhat = apply_uncertainty(point);
    int cls = predict_scaled(model, vhat);
    std::vector<double> rel = relevance_matrix(model);

    // Best qualifying feature per schema group; at most one feature per
    // group may appear in a conjunction.
    std::map<int, int> best_in_group;
    for (int f = 0; f < model.feature_count; ++f) {
        double r = rel[static_cast<std::size_t>(f) * model.class_count + cls];
        if (!(r > relevance_threshold)) continue;
        if (!(vhat[f] > satisfaction_threshold)) continue;
        auto [it, inserted] = best_in_group.try_emplace(schema.group_of[f], f);
        if (!inserted && vhat[f] > vhat[it->second]) it->second = f;
    }
    if (best_in_group.empty()) return std::nullopt;

    std::vector<int> features;
    std::vector<double> activations;
    features.reserve(best_in_group.size());
    for (const auto& [group, f] : best_in_group) {
        (void)group;
        features.push_back(f);
        activations.push_back(vhat[f]);
    }
    SampleRule out;
    out.class_index = cls;
    out.conjunction = Conjunction::of(std::move(features), conjunction_uncertainty(activations));
    return out;
}

ParamSnapshot snapshot(const ConceptPredictor& model) {
    ParamSnapshot s;
    s.feature_count = model.feature_count;
    s.class_count = model.class_count;
    s.values = model.weights;
    s.values.insert(s.values.end(), model.bias.begin(), model.bias.end());
    return s;
}

void restore(ConceptPredictor& model, const ParamSnapshot& params) {
    std::size_t expected = static_cast<std::size_t>(params.feature_count) * params.class_count +
                           params.class_count;
    if (params.feature_count <= 0 || params.class_count < 2 || params.values.size() != expected)
        throw std::invalid_argument("parameter snapshot has inconsistent shape");
    model.feature_count = params.feature_count;
    model.class_count = params.class_count;
    std::size_t w = static_cast<std::size_t>(params.feature_count) * params.class_count;
    model.weights.assign(params.values.begin(), params.values.begin() + w);
    model.bias.assign(params.values.begin() + w, params.values.end());
}

void save_checkpoint(std::ostream& out, const ConceptPredictor& model) {
    out << "concept_predictor v1\n";
    out << "shape " << model.feature_count << ' ' << model.class_count << '\n';
    for (int c = 0; c < model.class_count; ++c) {
        out << "w";
        for (int f = 0; f < model.feature_count; ++f)
            out << ' ' << format_double(model.weight_at(c, f));
        out << '\n';
    }
    out << "b";
    for (int c = 0; c < model.class_count; ++c) out << ' ' << format_double(model.bias[c]);
    out << '\n';
}

ConceptPredictor load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "concept_predictor v1")
        throw std::runtime_error("checkpoint: bad header");
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing shape");
    std::vector<std::string> parts = split(trim(line), ' ');
    if (parts.size() != 3 || parts[0] != "shape")
        throw std::runtime_error("checkpoint: malformed shape line");
    int F = parse_int(parts[1]);
    int C = parse_int(parts[2]);
    ConceptPredictor model(F, C);
    for (int c = 0; c < C; ++c) {
        if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing weight row");
        std::vector<std::string> row = split(trim(line), ' ');
        if (row.size() != static_cast<std::size_t>(F) + 1 || row[0] != "w")
            throw std::runtime_error("checkpoint: malformed weight row");
        for (int f = 0; f < F; ++f) model.weight_at(c, f) = parse_double(row[f + 1]);
    }
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing bias row");
    std::vector<std::string> row = split(trim(line), ' ');
    if (row.size() != static_cast<std::size_t>(C) + 1 || row[0] != "b")
        throw std::runtime_error("checkpoint: malformed bias row");
    for (int c = 0; c < C; ++c) model.bias[c] = parse_double(row[c + 1]);
    return model;
}

void save_checkpoint_file(const std::string& path, const ConceptPredictor& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
    save_checkpoint(out, model);
    if (!out.good()) throw std::runtime_error("failed writing checkpoint file: " + path);
}

ConceptPredictor load_checkpoint_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
    return load_checkpoint(in);
}

}  // namespace fedrules
