#include "xssguard/error.hpp"
#include "xssguard/eval.hpp"
#include "xssguard/models.hpp"

#include <algorithm>
#include <cmath>

namespace xssguard {

Json encoder_to_json(const Encoder& enc) {
    Json j = Json::object();
    for (auto f : kFeatures) {
        j[std::string(feature_name(f))] = enc.categories(f);
    }
    return j;
}

Encoder encoder_from_json(const Json& doc) {
    std::array<std::vector<std::string>, kFeatureCount> cats;
    for (auto f : kFeatures) {
        cats[static_cast<std::size_t>(f)] = doc.at(std::string(feature_name(f))).get<std::vector<std::string>>();
    }
    return Encoder(std::move(cats));
}

namespace {

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

// ---------------------------------------------------------------------------
// Pegasos

std::vector<double> train_pegasos(const Encoder& enc, const Dataset& data, std::span<const std::size_t> rows,
                                  const PegasosParams& params, Rng& rng) {
    const std::size_t bias = enc.width();
    const std::size_t dim = bias + 1;
    const double lambda = params.lambda;
    const double radius = 1.0 / std::sqrt(lambda);

    std::vector<std::array<std::size_t, kFeatureCount + 1>> active(rows.size());
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& s = data.samples[rows[i]];
        const auto cols = enc.active_columns(s);
        std::copy(cols.begin(), cols.end(), active[i].begin());
        active[i][kFeatureCount] = bias;
        y[i] = s.label == Label::Yes ? 1.0 : -1.0;
    }

    // w = scale * v keeps the (1 - 1/t) shrink O(1) per step.
    std::vector<double> v(dim, 0.0);
    double scale = 1.0;
    double v_norm2 = 0.0;
    auto renormalize = [&] {
        v_norm2 = 0.0;
        for (auto& x : v) {
            x *= scale;
            v_norm2 += x * x;
        }
        scale = 1.0;
    };

    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (const std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            double dot = 0.0;
            for (auto c : active[i]) {
                dot += v[c];
            }
            const double margin = y[i] * scale * dot;

            scale *= 1.0 - 1.0 / static_cast<double>(t);
            if (scale == 0.0) {
                std::fill(v.begin(), v.end(), 0.0);
                v_norm2 = 0.0;
                scale = 1.0;
            }
            if (margin < 1.0) {
                const double step = eta * y[i] / scale;
                for (auto c : active[i]) {
                    v_norm2 += 2.0 * v[c] * step + step * step;
                    v[c] += step;
                }
            }
            const double norm = scale * std::sqrt(std::max(v_norm2, 0.0));
            if (norm > radius) {
                scale *= radius / norm;
            }
            if (scale < 1e-9) {
                renormalize();
            }
        }
        renormalize();
    }
    renormalize();
    return v;
}

LinearSvmModel::LinearSvmModel(Encoder encoder, std::vector<double> weights)
    : encoder_(std::move(encoder)), weights_(std::move(weights)) {
    if (weights_.size() != encoder_.width() + 1) {
        throw ConfigError("SVM weight vector does not match encoder width");
    }
}

LinearSvmModel::LinearSvmModel(const Json& state)
    : LinearSvmModel(encoder_from_json(state.at("encoder")), state.at("weights").get<std::vector<double>>()) {}

double LinearSvmModel::margin(const Sample& s) const {
    double z = weights_.back();
    for (auto c : encoder_.active_columns(s)) {
        z += weights_[c];
    }
    return z;
}

double LinearSvmModel::score(const Sample& s) const { return sigmoid(margin(s)); }

Json LinearSvmModel::to_json() const {
    Json j;
    j["encoder"] = encoder_to_json(encoder_);
    j["weights"] = weights_;
    return j;
}

LinearSvmModel fit_linear_svm(const Dataset& train, const PegasosParams& params, Rng rng) {
    Encoder enc = Encoder::fit(train);
    std::vector<std::size_t> rows(train.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
    }
    auto w = train_pegasos(enc, train, rows, params, rng);
    return LinearSvmModel(std::move(enc), std::move(w));
}

// ---------------------------------------------------------------------------
// Genetic search over (log10 lambda, epochs)

namespace {

struct Individual {
    SvmGenome genome;
    double fitness = 0.0;
};

class InnerCv {
public:
    InnerCv(const Dataset& train, std::size_t k, const Rng& rng) : data_(train), rng_(rng) {
        for (auto& fold : stratified_folds(train, k, rng.split("folds").next())) {
            encoders_.push_back(Encoder::fit(train.subset(fold.train)));
            folds_.push_back(std::move(fold));
        }
    }

    /// Pooled inner-fold accuracy. Each fold reuses a fixed stream, so the
    /// fitness is a pure function of the genome.
    double accuracy(const SvmGenome& g) const {
        const PegasosParams params{std::pow(10.0, g.log10_lambda), g.epochs};
        std::size_t correct = 0;
        std::size_t total = 0;
        for (std::size_t f = 0; f < folds_.size(); ++f) {
            Rng rng = rng_.split(f);
            const auto w = train_pegasos(encoders_[f], data_, folds_[f].train, params, rng);
            const LinearSvmModel model(encoders_[f], w);
            for (auto r : folds_[f].test) {
                const auto& s = data_.samples[r];
                const Label predicted = model.margin(s) >= 0.0 ? Label::Yes : Label::No;
                correct += predicted == s.label;
                ++total;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(total);
    }

private:
    const Dataset& data_;
    Rng rng_;
    std::vector<Fold> folds_;
    std::vector<Encoder> encoders_;
};

} // namespace

EvolutionTrace evolve_svm_genome(const Dataset& train, const EvolutionParams& params, Rng rng) {
    if (params.population < 2 || params.generations < 1) {
        throw ConfigError("ESVM needs population >= 2 and generations >= 1");
    }
    std::unique_ptr<InnerCv> cv;
    try {
        cv = std::make_unique<InnerCv>(train, params.inner_folds, rng.split("inner"));
    } catch (const DomainError& e) {
        throw TrainingError(std::string("ESVM inner cross-validation: ") + e.what());
    }

    const auto epoch_span = params.epochs_max - params.epochs_min + 1;
    auto clamp_genome = [&](SvmGenome g) {
        g.log10_lambda = std::clamp(g.log10_lambda, params.log10_lambda_min, params.log10_lambda_max);
        g.epochs = std::clamp(g.epochs, params.epochs_min, params.epochs_max);
        return g;
    };

    EvolutionTrace trace;
    Individual overall;
    bool have_overall = false;
    auto evaluate = [&](const SvmGenome& g) {
        Individual ind{g, cv->accuracy(g)};
        ++trace.evaluations;
        if (!have_overall || ind.fitness > overall.fitness) {
            overall = ind;
            have_overall = true;
        }
        return ind;
    };

    Rng init = rng.split("init");
    std::vector<Individual> population;
    for (std::size_t i = 0; i < params.population; ++i) {
        SvmGenome g;
        g.log10_lambda = init.uniform(params.log10_lambda_min, params.log10_lambda_max);
        g.epochs = params.epochs_min + init.index(epoch_span);
        population.push_back(evaluate(g));
    }

    auto best_of = [](const std::vector<Individual>& pop) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].fitness > pop[best].fitness) {
                best = i;
            }
        }
        return best;
    };
    trace.best_fitness.push_back(population[best_of(population)].fitness);

    Rng breed = rng.split("breed");
    auto tournament = [&](const std::vector<Individual>& pop) -> const Individual& {
        const auto a = breed.index(pop.size());
        const auto b = breed.index(pop.size());
        if (pop[a].fitness != pop[b].fitness) {
            return pop[a].fitness > pop[b].fitness ? pop[a] : pop[b];
        }
        return pop[std::min(a, b)];
    };

    for (std::size_t gen = 1; gen < params.generations; ++gen) {
        const Individual elite = population[best_of(population)];
        std::vector<Individual> next;
        next.reserve(params.population + 1);
        for (std::size_t i = 0; i < params.population; ++i) {
            const auto& p1 = tournament(population).genome;
            const auto& p2 = tournament(population).genome;
            const double mix = breed.uniform();
            SvmGenome child;
            child.log10_lambda = mix * p1.log10_lambda + (1.0 - mix) * p2.log10_lambda;
            child.epochs = static_cast<std::size_t>(
                std::llround(mix * static_cast<double>(p1.epochs) + (1.0 - mix) * static_cast<double>(p2.epochs)));
            if (breed.bernoulli(params.mutation_rate)) {
                child.log10_lambda += breed.uniform(-0.5, 0.5);
            }
            if (breed.bernoulli(params.mutation_rate)) {
                const auto delta = static_cast<long long>(breed.index(41)) - 20;
                child.epochs = static_cast<std::size_t>(
                    std::max<long long>(0, static_cast<long long>(child.epochs) + delta));
            }
            next.push_back(evaluate(clamp_genome(child)));
        }
        next.push_back(elite);
        ++trace.carry_overs;
        population = std::move(next);
        trace.best_fitness.push_back(population[best_of(population)].fitness);
    }

    trace.best = overall.genome;
    trace.best_fit = overall.fitness;
    return trace;
}

EvolutionarySvmModel::EvolutionarySvmModel(LinearSvmModel svm, EvolutionTrace trace)
    : LinearSvmModel(std::move(svm)), trace_(std::move(trace)) {}

EvolutionarySvmModel::EvolutionarySvmModel(const Json& state) : LinearSvmModel(state) {
    const auto& evo = state.at("evolution");
    trace_.evaluations = evo.at("evaluations").get<std::size_t>();
    trace_.carry_overs = evo.at("carry_overs").get<std::size_t>();
    trace_.best_fitness = evo.at("best_fitness").get<std::vector<double>>();
    trace_.best.log10_lambda = evo.at("best_log10_lambda").get<double>();
    trace_.best.epochs = evo.at("best_epochs").get<std::size_t>();
    trace_.best_fit = evo.at("best_fit").get<double>();
}

Json EvolutionarySvmModel::to_json() const {
    Json j = LinearSvmModel::to_json();
    Json evo;
    evo["evaluations"] = trace_.evaluations;
    evo["carry_overs"] = trace_.carry_overs;
    evo["best_fitness"] = trace_.best_fitness;
    evo["best_log10_lambda"] = trace_.best.log10_lambda;
    evo["best_epochs"] = trace_.best.epochs;
    evo["best_fit"] = trace_.best_fit;
    j["evolution"] = std::move(evo);
    return j;
}

} // namespace xssguard
