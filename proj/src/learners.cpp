#include "xssguard/learners.hpp"

#include "xssguard/error.hpp"
#include "xssguard/models.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace xssguard {

namespace {

struct KindInfo {
    ClassifierKind kind;
    std::string_view name;
    std::string_view short_name;
};

constexpr std::array<KindInfo, 7> kKindInfo = {{
    {ClassifierKind::NaiveBayes, "NaiveBayes", "nb"},
    {ClassifierKind::J48, "J48", "j48"},
    {ClassifierKind::Bagging, "Bagging", "bagging"},
    {ClassifierKind::RandomForest, "RandomForest", "rf"},
    {ClassifierKind::SVM, "SVM", "svm"},
    {ClassifierKind::ESVM, "ESVM", "esvm"},
    {ClassifierKind::NeuralNet, "NeuralNet", "mlp"},
}};

bool is_whole(double v) { return std::isfinite(v) && v == std::floor(v); }

void require(bool ok, ClassifierKind kind, const std::string& key, std::string_view rule) {
    if (!ok) {
        throw ConfigError(std::string(kind_name(kind)) + ": hyperparameter '" + key + "' must be " +
                          std::string(rule));
    }
}

void check_params(ClassifierKind kind, const std::map<std::string, double>& p) {
    for (const auto& [key, value] : p) {
        if (!std::isfinite(value)) {
            require(false, kind, key, "finite");
        }
    }
    auto positive_int = [&](const char* key) { require(is_whole(p.at(key)) && p.at(key) >= 1, kind, key, "an integer >= 1"); };
    auto positive = [&](const char* key) { require(p.at(key) > 0, kind, key, "> 0"); };
    switch (kind) {
    case ClassifierKind::NaiveBayes:
        positive("alpha");
        break;
    case ClassifierKind::J48:
        positive_int("min_leaf");
        break;
    case ClassifierKind::Bagging:
        positive_int("trees");
        positive_int("min_leaf");
        break;
    case ClassifierKind::RandomForest:
        positive_int("trees");
        positive_int("min_leaf");
        positive_int("features_per_node");
        require(p.at("features_per_node") <= static_cast<double>(kFeatureCount), kind, "features_per_node", "<= 6");
        require(p.at("bootstrap") == 0 || p.at("bootstrap") == 1, kind, "bootstrap", "0 or 1");
        break;
    case ClassifierKind::SVM:
        positive("lambda");
        positive_int("epochs");
        break;
    case ClassifierKind::ESVM:
        positive_int("population");
        positive_int("generations");
        require(p.at("population") >= 2, kind, "population", ">= 2");
        require(is_whole(p.at("inner_folds")) && p.at("inner_folds") >= 2, kind, "inner_folds", "an integer >= 2");
        require(p.at("mutation_rate") >= 0 && p.at("mutation_rate") <= 1, kind, "mutation_rate", "in [0, 1]");
        break;
    case ClassifierKind::NeuralNet:
        positive_int("hidden");
        positive_int("epochs");
        positive("learning_rate");
        positive("init_range");
        break;
    }
}

std::size_t as_size(double v) { return static_cast<std::size_t>(v); }

std::shared_ptr<const detail::Fitted> fit(const ClassifierSpec& spec, const Dataset& data) {
    const Rng rng(spec.seed());
    switch (spec.kind()) {
    case ClassifierKind::NaiveBayes:
        return std::make_shared<NaiveBayesModel>(data, spec.param("alpha"));
    case ClassifierKind::J48:
        return std::make_shared<J48Model>(data, TreeParams{as_size(spec.param("min_leaf")), kFeatureCount});
    case ClassifierKind::Bagging: {
        TreeEnsembleModel::Params p;
        p.trees = as_size(spec.param("trees"));
        p.bootstrap = true;
        p.tree = {as_size(spec.param("min_leaf")), kFeatureCount};
        return std::make_shared<TreeEnsembleModel>(data, p, rng);
    }
    case ClassifierKind::RandomForest: {
        TreeEnsembleModel::Params p;
        p.trees = as_size(spec.param("trees"));
        p.bootstrap = spec.param("bootstrap") != 0;
        p.tree = {as_size(spec.param("min_leaf")), as_size(spec.param("features_per_node"))};
        return std::make_shared<TreeEnsembleModel>(data, p, rng);
    }
    case ClassifierKind::SVM:
        return std::make_shared<LinearSvmModel>(
            fit_linear_svm(data, {spec.param("lambda"), as_size(spec.param("epochs"))}, rng));
    case ClassifierKind::ESVM: {
        EvolutionParams p;
        p.population = as_size(spec.param("population"));
        p.generations = as_size(spec.param("generations"));
        p.inner_folds = as_size(spec.param("inner_folds"));
        p.mutation_rate = spec.param("mutation_rate");
        auto trace = evolve_svm_genome(data, p, rng.split("evolve"));
        auto svm = fit_linear_svm(data, {std::pow(10.0, trace.best.log10_lambda), trace.best.epochs},
                                  rng.split("final"));
        return std::make_shared<EvolutionarySvmModel>(std::move(svm), std::move(trace));
    }
    case ClassifierKind::NeuralNet: {
        Encoder enc = Encoder::fit(data);
        Mlp net(enc.width(), as_size(spec.param("hidden")));
        Rng init = rng.split("init");
        net.randomize(init, spec.param("init_range"));
        std::vector<Mlp::Example> examples;
        examples.reserve(data.size());
        for (const auto& s : data.samples) {
            examples.push_back({enc.encode_row(s), s.label == Label::Yes ? 1.0 : 0.0});
        }
        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng shuffle = rng.split("order");
        const double lr = spec.param("learning_rate");
        for (std::size_t epoch = 0; epoch < as_size(spec.param("epochs")); ++epoch) {
            shuffle.shuffle(std::span(order));
            for (auto i : order) {
                net.sgd_step(examples[i], lr);
            }
        }
        return std::make_shared<NeuralNetModel>(std::move(enc), std::move(net));
    }
    }
    throw ConfigError("unknown classifier kind");
}

std::shared_ptr<const detail::Fitted> state_from_json(ClassifierKind kind, const Json& state) {
    switch (kind) {
    case ClassifierKind::NaiveBayes: return std::make_shared<NaiveBayesModel>(state);
    case ClassifierKind::J48: return std::make_shared<J48Model>(state);
    case ClassifierKind::Bagging:
    case ClassifierKind::RandomForest: return std::make_shared<TreeEnsembleModel>(state);
    case ClassifierKind::SVM: return std::make_shared<LinearSvmModel>(state);
    case ClassifierKind::ESVM: return std::make_shared<EvolutionarySvmModel>(state);
    case ClassifierKind::NeuralNet: return std::make_shared<NeuralNetModel>(state);
    }
    throw ConfigError("unknown classifier kind");
}

} // namespace

std::string_view kind_name(ClassifierKind kind) {
    for (const auto& info : kKindInfo) {
        if (info.kind == kind) {
            return info.name;
        }
    }
    return "?";
}

std::optional<ClassifierKind> parse_kind(std::string_view name) {
    for (const auto& info : kKindInfo) {
        if (info.name == name || info.short_name == name) {
            return info.kind;
        }
    }
    if (name == "nn") {
        return ClassifierKind::NeuralNet;
    }
    return std::nullopt;
}

const std::map<std::string, double>& ClassifierSpec::defaults(ClassifierKind kind) {
    static const std::map<ClassifierKind, std::map<std::string, double>> table = {
        {ClassifierKind::NaiveBayes, {{"alpha", 1.0}}},
        {ClassifierKind::J48, {{"min_leaf", 2}}},
        {ClassifierKind::Bagging, {{"trees", 10}, {"min_leaf", 2}}},
        {ClassifierKind::RandomForest, {{"trees", 100}, {"features_per_node", 3}, {"bootstrap", 1}, {"min_leaf", 2}}},
        {ClassifierKind::SVM, {{"lambda", 1e-3}, {"epochs", 50}}},
        {ClassifierKind::ESVM, {{"population", 20}, {"generations", 10}, {"inner_folds", 3}, {"mutation_rate", 0.2}}},
        {ClassifierKind::NeuralNet, {{"hidden", 16}, {"learning_rate", 0.1}, {"epochs", 200}, {"init_range", 0.5}}},
    };
    return table.at(kind);
}

ClassifierSpec::ClassifierSpec(ClassifierKind kind, std::map<std::string, double> overrides, std::uint64_t seed)
    : kind_(kind), params_(defaults(kind)), seed_(seed) {
    for (auto& [key, value] : overrides) {
        auto it = params_.find(key);
        if (it == params_.end()) {
            throw ConfigError(std::string(kind_name(kind)) + ": unknown hyperparameter '" + key + "'");
        }
        it->second = value;
    }
    check_params(kind_, params_);
}

std::size_t ClassifierSpec::count(const std::string& key) const { return params_.count(key); }

ClassifierSpec ClassifierSpec::with_seed(std::uint64_t seed) const {
    ClassifierSpec copy = *this;
    copy.seed_ = seed;
    return copy;
}

ClassifierModel::ClassifierModel(ClassifierSpec spec, std::shared_ptr<const detail::Fitted> fitted, TrainingInfo info)
    : spec_(std::move(spec)), fitted_(std::move(fitted)), info_(info) {}

Json ClassifierModel::to_json() const {
    Json doc;
    doc["format"] = "xssguard-model";
    doc["version"] = kModelFormatVersion;
    Json spec;
    spec["kind"] = kind_name(spec_.kind());
    spec["seed"] = spec_.seed();
    spec["hyperparameters"] = Json::object();
    for (const auto& [key, value] : spec_.hyperparameters()) {
        spec["hyperparameters"][key] = value;
    }
    doc["spec"] = std::move(spec);
    doc["training"] = {{"n", info_.n}};
    doc["state"] = fitted_->to_json();
    return doc;
}

ClassifierModel ClassifierModel::from_json(const Json& doc) {
    try {
        if (doc.at("format") != "xssguard-model") {
            throw ConfigError("not an xssguard model document");
        }
        if (doc.at("version").get<int>() != kModelFormatVersion) {
            throw ConfigError("unsupported model version " + doc.at("version").dump());
        }
        const auto& spec_doc = doc.at("spec");
        const auto kind = parse_kind(spec_doc.at("kind").get<std::string>());
        if (!kind) {
            throw ConfigError("unknown classifier kind " + spec_doc.at("kind").dump());
        }
        std::map<std::string, double> params;
        for (const auto& [key, value] : spec_doc.at("hyperparameters").items()) {
            params[key] = value.get<double>();
        }
        ClassifierSpec spec(*kind, params, spec_doc.at("seed").get<std::uint64_t>());
        TrainingInfo info;
        info.n = doc.at("training").at("n").get<std::size_t>();
        return ClassifierModel(spec, state_from_json(*kind, doc.at("state")), info);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    }
}

void ClassifierModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << to_json().dump(2) << '\n';
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open model " + path.string());
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("model " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

ClassifierModel train(const ClassifierSpec& spec, const Dataset& dataset) {
    const auto yes = dataset.count(Label::Yes);
    if (yes == 0 || yes == dataset.size()) {
        throw TrainingError(std::string(kind_name(spec.kind())) + ": training data must contain both classes");
    }
    const auto start = std::chrono::steady_clock::now();
    auto fitted = fit(spec, dataset);
    TrainingInfo info;
    info.n = dataset.size();
    info.fit_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return ClassifierModel(spec, std::move(fitted), info);
}

} // namespace xssguard
