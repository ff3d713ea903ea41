#include "xssguard/error.hpp"
#include "xssguard/models.hpp"

#include <cmath>

namespace xssguard {

namespace {

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

Mlp::Mlp(std::size_t inputs, std::size_t hidden)
    : inputs_(inputs), hidden_(hidden), params_(hidden * inputs + 2 * hidden + 1, 0.0) {}

Mlp::Mlp(std::size_t inputs, std::size_t hidden, std::vector<double> params)
    : inputs_(inputs), hidden_(hidden), params_(std::move(params)) {
    if (params_.size() != hidden * inputs + 2 * hidden + 1) {
        throw ConfigError("MLP parameter vector has the wrong length");
    }
}

void Mlp::randomize(Rng& rng, double range) {
    for (auto& p : params_) {
        p = rng.uniform(-range, range);
    }
}

double Mlp::forward(std::span<const double> x) const {
    double z = params_[b2()];
    for (std::size_t j = 0; j < hidden_; ++j) {
        double a = params_[b1() + j];
        const double* row = params_.data() + w1() + j * inputs_;
        for (std::size_t i = 0; i < inputs_; ++i) {
            if (x[i] != 0.0) {
                a += row[i] * x[i];
            }
        }
        z += params_[w2() + j] * sigmoid(a);
    }
    return sigmoid(z);
}

double Mlp::loss(std::span<const Example> batch) const {
    double total = 0.0;
    for (const auto& e : batch) {
        // Cross-entropy on the output logit: softplus(z) - y z.
        double z = params_[b2()];
        for (std::size_t j = 0; j < hidden_; ++j) {
            double a = params_[b1() + j];
            for (std::size_t i = 0; i < inputs_; ++i) {
                a += params_[w1() + j * inputs_ + i] * e.x[i];
            }
            z += params_[w2() + j] * sigmoid(a);
        }
        total += softplus(z) - e.y * z;
    }
    return total / static_cast<double>(batch.size());
}

void Mlp::accumulate(const Example& e, double weight, std::vector<double>& grad) const {
    std::vector<double> h(hidden_);
    double z = params_[b2()];
    for (std::size_t j = 0; j < hidden_; ++j) {
        double a = params_[b1() + j];
        for (std::size_t i = 0; i < inputs_; ++i) {
            if (e.x[i] != 0.0) {
                a += params_[w1() + j * inputs_ + i] * e.x[i];
            }
        }
        h[j] = sigmoid(a);
        z += params_[w2() + j] * h[j];
    }
    const double dz = (sigmoid(z) - e.y) * weight;
    grad[b2()] += dz;
    for (std::size_t j = 0; j < hidden_; ++j) {
        grad[w2() + j] += dz * h[j];
        const double da = dz * params_[w2() + j] * h[j] * (1.0 - h[j]);
        grad[b1() + j] += da;
        for (std::size_t i = 0; i < inputs_; ++i) {
            if (e.x[i] != 0.0) {
                grad[w1() + j * inputs_ + i] += da * e.x[i];
            }
        }
    }
}

std::vector<double> Mlp::gradient(std::span<const Example> batch) const {
    std::vector<double> grad(params_.size(), 0.0);
    const double weight = 1.0 / static_cast<double>(batch.size());
    for (const auto& e : batch) {
        accumulate(e, weight, grad);
    }
    return grad;
}

void Mlp::sgd_step(const Example& e, double lr) {
    // Same arithmetic as accumulate(), applied in place. Hidden deltas are
    // taken before the output weights move.
    std::vector<double> h(hidden_);
    double z = params_[b2()];
    for (std::size_t j = 0; j < hidden_; ++j) {
        double a = params_[b1() + j];
        for (std::size_t i = 0; i < inputs_; ++i) {
            if (e.x[i] != 0.0) {
                a += params_[w1() + j * inputs_ + i] * e.x[i];
            }
        }
        h[j] = sigmoid(a);
        z += params_[w2() + j] * h[j];
    }
    const double dz = sigmoid(z) - e.y;
    params_[b2()] -= lr * dz;
    for (std::size_t j = 0; j < hidden_; ++j) {
        const double da = dz * params_[w2() + j] * h[j] * (1.0 - h[j]);
        params_[w2() + j] -= lr * dz * h[j];
        params_[b1() + j] -= lr * da;
        for (std::size_t i = 0; i < inputs_; ++i) {
            if (e.x[i] != 0.0) {
                params_[w1() + j * inputs_ + i] -= lr * da * e.x[i];
            }
        }
    }
}

NeuralNetModel::NeuralNetModel(Encoder encoder, Mlp net) : encoder_(std::move(encoder)), net_(std::move(net)) {
    if (net_.inputs() != encoder_.width()) {
        throw ConfigError("MLP input width does not match encoder width");
    }
}

NeuralNetModel::NeuralNetModel(const Json& state)
    : NeuralNetModel(encoder_from_json(state.at("encoder")),
                     Mlp(state.at("inputs").get<std::size_t>(), state.at("hidden").get<std::size_t>(),
                         state.at("params").get<std::vector<double>>())) {}

double NeuralNetModel::score(const Sample& s) const { return net_.forward(encoder_.encode_row(s)); }

Json NeuralNetModel::to_json() const {
    Json j;
    j["encoder"] = encoder_to_json(encoder_);
    j["inputs"] = net_.inputs();
    j["hidden"] = net_.hidden();
    j["params"] = net_.params();
    return j;
}

} // namespace xssguard
