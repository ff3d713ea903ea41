#include "xssguard/engine.hpp"
#include "xssguard/error.hpp"
#include "xssguard/eval.hpp"
#include "xssguard/gateway.hpp"
#include "xssguard/ranker.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace xssguard;

namespace {

Sample sample_from_dict(const py::dict& d) {
    Sample s;
    for (auto f : kFeatures) {
        const std::string key(feature_name(f));
        if (!d.contains(key)) {
            throw DomainError("missing field '" + key + "'");
        }
        s.value(f) = py::cast<std::string>(d[key.c_str()]);
    }
    if (d.contains("label")) {
        const auto label = parse_label(py::cast<std::string>(d["label"]));
        if (!label) {
            throw DomainError("label must be Yes or No");
        }
        s.label = *label;
    }
    return s;
}

py::dict sample_to_dict(const Sample& s) {
    py::dict d;
    for (auto f : kFeatures) {
        d[py::str(std::string(feature_name(f)))] = s.value(f);
    }
    d["label"] = std::string(label_name(s.label));
    return d;
}

ClassifierKind kind_of(const std::string& name) {
    const auto kind = parse_kind(name);
    if (!kind) {
        throw ConfigError("unknown classifier '" + name + "'");
    }
    return *kind;
}

RankMethod method_of(const std::string& name) {
    const auto m = parse_method(name);
    if (!m) {
        throw ConfigError("unknown ranking method '" + name + "'");
    }
    return *m;
}

std::vector<ClassifierSpec> specs_of(const std::optional<std::vector<std::string>>& names,
                                     const std::map<std::string, std::map<std::string, double>>& params,
                                     std::uint64_t seed) {
    std::vector<ClassifierSpec> specs;
    const auto add = [&](ClassifierKind k) {
        std::map<std::string, double> overrides;
        for (const auto& [name, values] : params) {
            if (kind_of(name) == k) {
                overrides.insert(values.begin(), values.end());
            }
        }
        specs.emplace_back(k, overrides, seed);
    };
    if (names) {
        for (const auto& n : *names) {
            add(kind_of(n));
        }
    } else {
        for (auto k : kAllKinds) {
            add(k);
        }
    }
    return specs;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "XSS bridge-attack detection: dataset generation, feature ranking, classifiers and replay.";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.attr("FEATURES") = [] {
        std::vector<std::string> names;
        for (auto f : kFeatures) {
            names.emplace_back(feature_name(f));
        }
        return names;
    }();
    m.attr("CLASSIFIERS") = [] {
        std::vector<std::string> names;
        for (auto k : kAllKinds) {
            names.emplace_back(kind_name(k));
        }
        return names;
    }();

    py::class_<Dataset>(m, "Dataset")
        .def("__len__", &Dataset::size)
        .def("count", [](const Dataset& ds, const std::string& label) {
            const auto l = parse_label(label);
            if (!l) {
                throw DomainError("label must be Yes or No");
            }
            return ds.count(*l);
        })
        .def("rows", [](const Dataset& ds) {
            py::list out;
            for (const auto& s : ds.samples) {
                out.append(sample_to_dict(s));
            }
            return out;
        })
        .def("to_csv", [](const Dataset& ds) {
            std::ostringstream out;
            write_csv(ds, out);
            return out.str();
        })
        .def("write_csv", [](const Dataset& ds, const std::filesystem::path& p) { write_csv(ds, p); })
        .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

    m.def("generate",
          [](std::size_t n, double attack_ratio, double noise, std::uint64_t seed) {
              return generate(GeneratorParams{n, attack_ratio, noise, seed});
          },
          py::arg("n") = 460, py::arg("attack_ratio") = 0.5, py::arg("noise") = 0.05, py::arg("seed") = 42);
    m.def("read_csv", [](const std::filesystem::path& p) { return read_csv(p); }, py::arg("path"));
    m.def("parse_csv", [](const std::string& text) {
        std::istringstream in(text);
        return read_csv(in);
    }, py::arg("text"));

    m.def("rank",
          [](const Dataset& ds, const std::string& method, std::size_t neighbors, std::optional<std::size_t> samples,
             std::uint64_t seed) {
              const auto r = rank_all(ds, method_of(method), ReliefParams{neighbors, samples, seed});
              std::vector<std::pair<std::string, double>> out;
              for (auto f : r.order) {
                  out.emplace_back(feature_name(f), r.score(f));
              }
              return out;
          },
          py::arg("dataset"), py::arg("method") = "ig", py::arg("neighbors") = 10, py::arg("samples") = py::none(),
          py::arg("seed") = 42);

    py::class_<ClassifierModel>(m, "Model")
        .def_property_readonly("kind", [](const ClassifierModel& mdl) { return std::string(kind_name(mdl.spec().kind())); })
        .def_property_readonly("hyperparameters", [](const ClassifierModel& mdl) { return mdl.spec().hyperparameters(); })
        .def("score", [](const ClassifierModel& mdl, const py::dict& row) { return mdl.score(sample_from_dict(row)); })
        .def("predict", [](const ClassifierModel& mdl, const py::dict& row) {
            return std::string(label_name(mdl.predict(sample_from_dict(row))));
        })
        .def("to_json", [](const ClassifierModel& mdl) { return mdl.to_json().dump(); })
        .def("save", [](const ClassifierModel& mdl, const std::filesystem::path& p) { mdl.save(p); })
        .def_static("load", [](const std::filesystem::path& p) { return ClassifierModel::load(p); });

    m.def("train",
          [](const Dataset& ds, const std::string& classifier, const std::map<std::string, double>& params,
             std::uint64_t seed) { return train(ClassifierSpec(kind_of(classifier), params, seed), ds); },
          py::arg("dataset"), py::arg("classifier"), py::arg("params") = std::map<std::string, double>{},
          py::arg("seed") = 42);

    m.def("evaluate_json",
          [](const Dataset& ds, std::optional<std::vector<std::string>> classifiers, std::size_t k, std::uint64_t seed,
             const std::map<std::string, std::map<std::string, double>>& params, bool timings) {
              const auto specs = specs_of(classifiers, params, seed);
              EvaluationReport report;
              {
                  py::gil_scoped_release release;
                  report = evaluate_all(ds, specs, k, seed);
              }
              return report_to_json(report, timings).dump();
          },
          py::arg("dataset"), py::arg("classifiers") = py::none(), py::arg("k") = 10, py::arg("seed") = 42,
          py::arg("params") = std::map<std::string, std::map<std::string, double>>{}, py::arg("timings") = false);

    m.def("metrics",
          [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
              const Metrics x = metrics({tp, tn, fp, fn});
              py::dict d;
              d["accuracy"] = x.accuracy;
              d["precision"] = x.precision;
              d["recall"] = x.recall;
              d["f_measure"] = x.f_measure;
              return d;
          },
          py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

    m.def("auc",
          [](const std::vector<double>& scores, const std::vector<bool>& positive) {
              if (scores.size() != positive.size()) {
                  throw DomainError("scores and labels differ in length");
              }
              std::vector<ScoredLabel> scored;
              for (std::size_t i = 0; i < scores.size(); ++i) {
                  scored.push_back({scores[i], positive[i] ? Label::Yes : Label::No});
              }
              return auc(roc_curve(scored));
          },
          py::arg("scores"), py::arg("positive"));

    m.def("replay_jsonl",
          [](const std::filesystem::path& scenario, const ClassifierModel& model, const std::string& policy,
             std::optional<std::filesystem::path> answers, std::int64_t timeout_ms) {
              const auto kind = parse_policy(policy);
              if (!kind) {
                  throw ConfigError("unknown policy '" + policy + "'");
              }
              if ((*kind == PolicyKind::Scripted) != answers.has_value()) {
                  throw ConfigError("answers are required for, and only for, the scripted policy");
              }
              PolicyDecisionProvider provider(*kind, answers ? read_answers(*answers) : std::vector<ScriptedAnswer>{});
              BlockList blocklist;
              ReplayOptions options;
              options.decision_timeout = std::chrono::milliseconds(timeout_ms);
              std::ostringstream out;
              write_session_log(replay(read_scenario(scenario), model, provider, blocklist, options), out);
              return out.str();
          },
          py::arg("scenario"), py::arg("model"), py::arg("policy") = "flag_sensitive",
          py::arg("answers") = py::none(), py::arg("timeout_ms") = 120000);

    m.def("write_scenario",
          [](const Dataset& ds, const std::filesystem::path& p, const std::string& name, std::int64_t step) {
              std::ofstream out(p, std::ios::binary);
              if (!out) {
                  throw Error("cannot open " + p.string() + " for writing");
              }
              write_scenario(scenario_from_dataset(ds, name, step), out);
          },
          py::arg("dataset"), py::arg("path"), py::arg("name") = "dataset", py::arg("step") = 1000);
}
