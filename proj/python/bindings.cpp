// Python module _prelude. Structured values cross the boundary as JSON text;
// the prelude package decodes them.
#include <filesystem>
#include <fstream>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "prelude/config.hpp"
#include "prelude/environments.hpp"
#include "prelude/error.hpp"
#include "prelude/metrics.hpp"
#include "prelude/prompts.hpp"
#include "prelude/text_units.hpp"

namespace py = pybind11;
using namespace prelude;
using nlohmann::json;

namespace {

// The config file with `overrides` merge-patched over it.
ExperimentConfig experiment(const std::string& path, const std::string& overrides) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
        if (!overrides.empty()) j.merge_patch(json::parse(overrides));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    auto base = std::filesystem::path(path).parent_path().string();
    return parse_experiment_config(j, base.empty() ? "." : base);
}

std::vector<RoundLog> decode_logs(const std::string& jsonl) { return parse_round_logs(jsonl); }

std::vector<std::pair<int, double>> points(const MetricSeries& s) {
    std::vector<std::pair<int, double>> out;
    for (const auto& p : s.points) out.emplace_back(p.round, p.value);
    return out;
}

}  // namespace

PYBIND11_MODULE(_prelude, m) {
    auto base = py::register_exception<Error>(m, "PreludeError");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<LoadError>(m, "LoadError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def("tokenize", [](const std::string& text) {
        std::vector<std::pair<TokenId, std::string>> out;
        for (auto& t : FallbackTokenizer().tokenize(text).tokens) out.emplace_back(t.id, std::move(t.surface));
        return out;
    }, py::arg("text"));

    m.def("levenshtein", [](const std::vector<TokenId>& a, const std::vector<TokenId>& b) { return levenshtein(a, b); },
          py::arg("a"), py::arg("b"));

    m.def("edit_distance", [](const std::string& a, const std::string& b) {
        auto c = edit_cost(FallbackTokenizer(), a, b);
        return std::make_pair(c.distance, c.normalized);
    }, py::arg("a"), py::arg("b"));

    m.def("embed", [](const std::string& text, std::size_t dimension) {
        return HashEmbedder(dimension).embed(text).values;
    }, py::arg("text"), py::arg("dimension") = 256);

    m.def("generation_prompt", [](const std::string& task, const std::string& context, const std::string& preference) {
        return prompts::generation(parse_task(task), context, preference);
    }, py::arg("task"), py::arg("context"), py::arg("preference"));

    m.def("schedule", [](const std::string& config, const std::string& overrides) {
        auto cfg = experiment(config, overrides);
        return schedule_rounds(load_experiment_corpus(cfg), cfg.rounds, cfg.seed).rounds;
    }, py::arg("config"), py::arg("overrides") = "");

    m.def("run_experiment", [](const std::string& config, const std::string& overrides,
                               std::optional<std::string> log_path) {
        auto cfg = experiment(config, overrides);
        RunResult result;
        {
            py::gil_scoped_release release;
            auto corpus = load_experiment_corpus(cfg);
            result = run_experiment(corpus, schedule_rounds(corpus, cfg.rounds, cfg.seed), cfg.components, cfg.user,
                                    {log_path});
        }
        std::string logs;
        for (const auto& l : result.logs) logs += to_json_line(l) + "\n";
        return std::make_pair(summary_json(result.summary), logs);
    }, py::arg("config"), py::arg("overrides") = "", py::arg("log_path") = py::none());

    m.def("cumulative_cost", [](const std::string& logs) { return points(cumulative_cost(decode_logs(logs))); },
          py::arg("logs"));
    m.def("binned_normalized", [](const std::string& logs, int bin) {
        return points(binned_normalized(decode_logs(logs), bin));
    }, py::arg("logs"), py::arg("bin") = 20);
    m.def("zero_cost_fraction", [](const std::string& logs, int bin) {
        return points(zero_cost_fraction(decode_logs(logs), bin));
    }, py::arg("logs"), py::arg("bin") = 20);
}
