#include "xssguard/cli.hpp"

#include "xssguard/error.hpp"
#include "xssguard/eval.hpp"
#include "xssguard/gateway.hpp"
#include "xssguard/ranker.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace xssguard::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

/// Writes `text` to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot write " + path);
    }
    f << text;
    if (!f) {
        throw Error("write to " + path + " failed");
    }
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("expected key=value, got '" + s + "'");
    }
    const std::string value = s.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) {
        throw ConfigError("value of '" + s.substr(0, eq) + "' is not a number");
    }
    return {s.substr(0, eq), v};
}

ClassifierKind kind_or_throw(const std::string& name) {
    const auto kind = parse_kind(name);
    if (!kind) {
        throw ConfigError("unknown classifier '" + name + "'");
    }
    return *kind;
}

/// `kind.key=value` overrides grouped by classifier kind.
std::map<ClassifierKind, std::map<std::string, double>> scoped_params(const std::vector<std::string>& params) {
    std::map<ClassifierKind, std::map<std::string, double>> out;
    for (const auto& p : params) {
        const auto dot = p.find('.');
        const auto eq = p.find('=');
        if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
            throw ConfigError("expected classifier.key=value, got '" + p + "'");
        }
        auto [key, value] = parse_assignment(p.substr(dot + 1));
        out[kind_or_throw(p.substr(0, dot))][key] = value;
    }
    return out;
}

std::vector<ClassifierSpec> select_specs(const std::string& list, const std::vector<std::string>& params,
                                         std::uint64_t seed) {
    const auto overrides = scoped_params(params);
    std::vector<ClassifierKind> kinds;
    if (list.empty()) {
        kinds.assign(kAllKinds.begin(), kAllKinds.end());
    } else {
        for (const auto& name : split_list(list)) {
            kinds.push_back(kind_or_throw(name));
        }
    }
    std::vector<ClassifierSpec> specs;
    for (auto kind : kinds) {
        const auto it = overrides.find(kind);
        specs.emplace_back(kind, it == overrides.end() ? std::map<std::string, double>{} : it->second, seed);
    }
    return specs;
}

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

std::string ranking_text(const std::vector<FeatureRanking>& rankings) {
    std::ostringstream out;
    out << std::left << std::setw(6) << "rank";
    for (const auto& r : rankings) {
        out << std::setw(26) << method_name(r.method);
    }
    out << '\n';
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        out << std::setw(6) << (i + 1);
        for (const auto& r : rankings) {
            const Feature f = r.order[i];
            out << std::setw(14) << feature_name(f) << std::setw(12) << fixed(r.score(f), 6);
        }
        out << '\n';
    }
    return out.str();
}

std::string ranking_csv(const std::vector<FeatureRanking>& rankings) {
    std::ostringstream out;
    out << "method,rank,feature,score\n";
    for (const auto& r : rankings) {
        for (std::size_t i = 0; i < r.order.size(); ++i) {
            out << method_name(r.method) << ',' << (i + 1) << ',' << feature_name(r.order[i]) << ','
                << fixed(r.score(r.order[i]), 9) << '\n';
        }
    }
    return out.str();
}

std::string ranking_json(const std::vector<FeatureRanking>& rankings) {
    Json doc = Json::object();
    for (const auto& r : rankings) {
        Json entry;
        Json order = Json::array();
        for (auto f : r.order) {
            order.push_back(feature_name(f));
        }
        entry["order"] = std::move(order);
        Json scores = Json::object();
        for (auto f : kFeatures) {
            scores[std::string(feature_name(f))] = r.score(f);
        }
        entry["scores"] = std::move(scores);
        doc[std::string(method_name(r.method))] = std::move(entry);
    }
    return doc.dump(2) + "\n";
}

std::string roc_csv_from_report_json(const Json& doc) {
    std::ostringstream out;
    out << "classifier,fpr,tpr\n";
    for (const auto& c : doc.at("classifiers")) {
        if (!c.contains("roc")) {
            continue;
        }
        const std::string name = c.at("classifier").get<std::string>();
        for (const auto& p : c.at("roc")) {
            out << name << ',' << fixed(p.at(0).get<double>(), 9) << ',' << fixed(p.at(1).get<double>(), 9) << '\n';
        }
    }
    return out.str();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Detection and prevention of script injection through WebView bridges", "xssguard"};
    app.require_subcommand(1);

    std::uint64_t seed = 42;
    std::string data_path;
    std::string out_path;

    // generate
    GeneratorParams gen;
    std::string vocab_path;
    auto* generate = app.add_subcommand("generate", "Write a synthetic labeled dataset as CSV");
    generate->add_option("--n", gen.n, "Number of rows")->capture_default_str();
    generate->add_option("--attack-ratio", gen.attack_ratio, "Fraction of Yes rows")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    generate->add_option("--noise", gen.noise, "Label noise rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    generate->add_option("--vocab", vocab_path, "Generator vocabulary file")->check(CLI::ExistingFile);
    generate->add_option("--seed", seed, "Random seed")->capture_default_str();
    generate->add_option("--out", out_path, "Output CSV (stdout if omitted)");

    // scenario
    std::string scenario_name = "dataset";
    std::int64_t step = 1000;
    auto* scenario_cmd = app.add_subcommand("scenario", "Turn a dataset CSV into a replay scenario");
    scenario_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    scenario_cmd->add_option("--name", scenario_name, "Scenario name")->capture_default_str();
    scenario_cmd->add_option("--step", step, "Ticks between events")->check(CLI::NonNegativeNumber)->capture_default_str();
    scenario_cmd->add_option("--out", out_path, "Output JSONL (stdout if omitted)");

    // rank
    std::string methods = "ig,gr,relieff";
    std::string format = "text";
    ReliefParams relief;
    std::size_t relief_m = 0;
    auto* rank = app.add_subcommand("rank", "Rank features by information gain, gain ratio and Relief-F");
    rank->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    rank->add_option("--methods", methods, "Comma-separated subset of ig,gr,relieff")->capture_default_str();
    rank->add_option("--neighbors", relief.k, "Relief-F neighbors per class")->capture_default_str();
    rank->add_option("--samples", relief_m, "Relief-F sampled instances (0 = all)");
    rank->add_option("--seed", seed, "Random seed")->capture_default_str();
    rank->add_option("--format", format, "text, csv or json")
        ->check(CLI::IsMember({"text", "csv", "json"}))
        ->capture_default_str();
    rank->add_option("--out", out_path, "Output file (stdout if omitted)");

    // train
    std::string classifier;
    std::vector<std::string> params;
    auto* train_cmd = app.add_subcommand("train", "Train one classifier and save it as JSON");
    train_cmd->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--classifier", classifier, "nb, j48, bagging, rf, svm, esvm or mlp")->required();
    train_cmd->add_option("--param", params, "Hyperparameter override key=value (repeatable)");
    train_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    train_cmd->add_option("--out", out_path, "Model JSON path")->required();

    // evaluate
    std::size_t k = 10;
    std::string classifiers;
    bool all = false;
    std::string table_path;
    std::string timing_path;
    auto* evaluate = app.add_subcommand("evaluate", "Stratified k-fold evaluation of the classifiers");
    evaluate->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--k", k, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
    evaluate->add_option("--seed", seed, "Random seed")->capture_default_str();
    auto* all_flag = evaluate->add_flag("--all", all, "Evaluate all seven classifiers (default)");
    evaluate->add_option("--classifiers", classifiers, "Comma-separated classifier names")->excludes(all_flag);
    evaluate->add_option("--param", params, "Override classifier.key=value (repeatable)");
    evaluate->add_option("--out", out_path, "Report JSON (stdout if omitted)");
    evaluate->add_option("--table", table_path, "Metric table CSV");
    evaluate->add_option("--timings", timing_path, "Timing table CSV");

    // roc
    std::string report_path;
    auto* roc = app.add_subcommand("roc", "ROC points per classifier as CSV");
    auto* roc_report = roc->add_option("--report", report_path, "Report JSON from evaluate")->check(CLI::ExistingFile);
    auto* roc_data = roc->add_option("--data", data_path, "Dataset CSV to evaluate")->check(CLI::ExistingFile);
    roc_report->excludes(roc_data);
    roc->add_option("--k", k, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
    roc->add_option("--seed", seed, "Random seed")->capture_default_str();
    roc->add_option("--classifiers", classifiers, "Comma-separated classifier names");
    roc->add_option("--param", params, "Override classifier.key=value (repeatable)");
    roc->add_option("--out", out_path, "Output CSV (stdout if omitted)");

    // replay
    std::string scenario_path;
    std::string model_path;
    std::string policy = "flag_sensitive";
    std::string answers_path;
    std::string blocklist_path;
    std::int64_t timeout_ms = 120'000;
    auto* replay_cmd = app.add_subcommand("replay", "Run a scenario through the prevention engine");
    replay_cmd->add_option("--scenario", scenario_path, "Scenario JSONL")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--policy", policy, "always_allow, always_block, flag_sensitive or scripted")
        ->check(CLI::IsMember({"always_allow", "always_block", "flag_sensitive", "scripted"}))
        ->capture_default_str();
    replay_cmd->add_option("--answers", answers_path, "Scripted answers (JSON array or JSONL)")
        ->check(CLI::ExistingFile);
    replay_cmd->add_option("--blocklist", blocklist_path, "Blocklist store (in memory if omitted)");
    replay_cmd->add_option("--timeout", timeout_ms, "Decision timeout in ticks")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    replay_cmd->add_option("--out", out_path, "Session log JSONL (stdout if omitted)");

    // serve
    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the live gateway for the alert console");
    serve->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--blocklist", blocklist_path, "Blocklist store (in memory if omitted)");
    serve->add_option("--timeout", timeout_ms, "Decision timeout in milliseconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*generate) {
            gen.seed = seed;
            const GeneratorVocab vocab = vocab_path.empty() ? GeneratorVocab::defaults()
                                                            : GeneratorVocab::load(std::filesystem::path(vocab_path));
            std::ostringstream csv;
            write_csv(xssguard::generate(gen, vocab), csv);
            emit(out_path, csv.str(), out);
        } else if (*scenario_cmd) {
            const Dataset ds = read_csv(std::filesystem::path(data_path));
            std::ostringstream text;
            write_scenario(scenario_from_dataset(ds, scenario_name, step), text);
            emit(out_path, text.str(), out);
        } else if (*rank) {
            const Dataset ds = read_csv(std::filesystem::path(data_path));
            relief.seed = seed;
            if (relief_m > 0) {
                relief.m = relief_m;
            }
            std::vector<FeatureRanking> rankings;
            for (const auto& name : split_list(methods)) {
                const auto method = parse_method(name);
                if (!method) {
                    throw ConfigError("unknown ranking method '" + name + "'");
                }
                rankings.push_back(rank_all(ds, *method, relief));
            }
            if (rankings.empty()) {
                throw ConfigError("no ranking method selected");
            }
            const std::string text = format == "json" ? ranking_json(rankings)
                                     : format == "csv" ? ranking_csv(rankings)
                                                       : ranking_text(rankings);
            emit(out_path, text, out);
        } else if (*train_cmd) {
            const Dataset ds = read_csv(std::filesystem::path(data_path));
            std::map<std::string, double> overrides;
            for (const auto& p : params) {
                overrides.insert(parse_assignment(p));
            }
            const ClassifierSpec spec(kind_or_throw(classifier), overrides, seed);
            const ClassifierModel model = train(spec, ds);
            model.save(out_path);
        } else if (*evaluate) {
            const Dataset ds = read_csv(std::filesystem::path(data_path));
            const auto specs = select_specs(all ? std::string() : classifiers, params, seed);
            const EvaluationReport report = evaluate_all(ds, specs, k, seed);
            emit(out_path, report_to_json(report).dump(2) + "\n", out);
            const std::string table = metrics_table_csv(report);
            if (!table_path.empty()) {
                emit(table_path, table, out);
            } else if (!out_path.empty() && out_path != "-") {
                out << table;
            }
            if (!timing_path.empty()) {
                emit(timing_path, timing_table_csv(report), out);
            }
            for (const auto& c : report.classifiers) {
                if (c.error) {
                    err << "warning: " << kind_name(c.spec.kind()) << " failed: " << *c.error << "\n";
                }
            }
        } else if (*roc) {
            std::string csv;
            if (!report_path.empty()) {
                std::ifstream in(report_path);
                Json doc;
                try {
                    doc = Json::parse(in);
                    csv = roc_csv_from_report_json(doc);
                } catch (const Json::exception& e) {
                    throw Error("malformed report " + report_path + ": " + e.what());
                }
            } else if (!data_path.empty()) {
                const Dataset ds = read_csv(std::filesystem::path(data_path));
                const auto specs = select_specs(classifiers, params, seed);
                csv = roc_csv(evaluate_all(ds, specs, k, seed));
            } else {
                err << "roc: one of --report or --data is required\n";
                return kExitUsage;
            }
            emit(out_path, csv, out);
        } else if (*replay_cmd) {
            const auto kind = *parse_policy(policy);
            if ((kind == PolicyKind::Scripted) != !answers_path.empty()) {
                err << "replay: --answers is required with, and only with, --policy scripted\n";
                return kExitUsage;
            }
            const Scenario scenario = read_scenario(std::filesystem::path(scenario_path));
            const ClassifierModel model = ClassifierModel::load(model_path);
            PolicyDecisionProvider provider(
                kind, answers_path.empty() ? std::vector<ScriptedAnswer>{}
                                           : read_answers(std::filesystem::path(answers_path)));
            auto blocklist = blocklist_path.empty() ? std::make_unique<BlockList>()
                                                    : std::make_unique<BlockList>(blocklist_path);
            for (const auto& w : blocklist->warnings()) {
                err << "warning: " << w << "\n";
            }
            ReplayOptions options;
            options.decision_timeout = std::chrono::milliseconds(timeout_ms);
            const SessionLog log = xssguard::replay(scenario, model, provider, *blocklist, options);
            std::ostringstream text;
            write_session_log(log, text);
            emit(out_path, text.str(), out);
        } else if (*serve) {
            const ClassifierModel model = ClassifierModel::load(model_path);
            auto blocklist = blocklist_path.empty() ? std::make_unique<BlockList>()
                                                    : std::make_unique<BlockList>(blocklist_path);
            for (const auto& w : blocklist->warnings()) {
                err << "warning: " << w << "\n";
            }
            GatewayOptions options;
            options.decision_timeout = std::chrono::milliseconds(timeout_ms);
            Gateway gateway(model, *blocklist, options);
            if (!gateway.bind(host, port)) {
                throw Error("cannot bind " + host + ":" + std::to_string(port));
            }
            out << "listening on http://" << host << ":" << gateway.port() << std::endl;
            gateway.run();
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace xssguard::cli
