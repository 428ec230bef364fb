// prelude: command-line front end for experiments and the session service.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prelude/config.hpp"
#include "prelude/error.hpp"
#include "prelude/session_service.hpp"

namespace fs = std::filesystem;
using namespace prelude;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "cipher-5" -> cipher with k=5, "icl-edit-3" -> icl-edit with k=3.
PolicyConfig policy_from_label(const std::string& label, PolicyConfig base) {
    auto dash = label.find_last_of('-');
    if (dash != std::string::npos && dash + 1 < label.size() &&
        label.find_first_not_of("0123456789", dash + 1) == std::string::npos) {
        auto kind = label.substr(0, dash);
        if (kind == "cipher" || kind == "icl-edit") {
            base.kind = parse_policy_kind(kind);
            base.k = std::stoi(label.substr(dash + 1));
            base.validate();
            return base;
        }
    }
    base.kind = parse_policy_kind(label);
    base.validate();
    return base;
}

void write_outputs(const RunResult& result, const ExperimentConfig& cfg, const fs::path& out) {
    auto latent = cfg.user.latent(cfg.task);
    std::vector<std::optional<bool>> hits;
    if (result.summary.accuracy) hits = accuracy_hits(result.logs, latent, *cfg.components.scorer);
    emit_run_csv(result.logs, hits, (out / "run.csv").string());
    write_text_file((out / "summary.json").string(), summary_json(result.summary) + "\n");
    write_text_file((out / "cumulative_cost.csv").string(), series_csv(cumulative_cost(result.logs)));
    write_text_file((out / "binned_normalized.csv").string(), series_csv(binned_normalized(result.logs)));
    write_text_file((out / "zero_cost_fraction.csv").string(), series_csv(zero_cost_fraction(result.logs)));
}

RunResult run_one(const ExperimentConfig& cfg, const Corpus& corpus, const fs::path& out, bool resume) {
    fs::create_directories(out);
    auto log_path = out / "logs.jsonl";
    if (!resume && fs::exists(log_path)) fs::remove(log_path);
    auto schedule = schedule_rounds(corpus, cfg.rounds, cfg.seed);
    auto result = run_experiment(corpus, schedule, cfg.components, cfg.user, RunOptions{log_path.string()});
    write_outputs(result, cfg, out);
    return result;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive preference learning from user edits"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", policy_label, policies;
    std::optional<int> rounds;
    std::optional<std::uint64_t> seed;
    bool resume = false;

    auto* run = app.add_subcommand("run", "Run one policy against the simulated user");
    run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "Output directory");
    run->add_option("-p,--policy", policy_label, "Policy label overriding the config (e.g. cipher-5, e-then-e)");
    run->add_option("-T,--rounds", rounds, "Number of rounds");
    run->add_option("-s,--seed", seed, "Schedule seed");
    run->add_flag("--resume", resume, "Continue an interrupted run from its round log");

    auto* compare = app.add_subcommand("compare", "Run several policies on the same schedule");
    compare->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    compare->add_option("-o,--out", out_dir, "Output directory");
    compare->add_option("--policies", policies, "Comma-separated policy labels")
        ->default_val("oracle,no-learning,e-then-e,continual-lpi,icl-edit-5,cipher-1,cipher-5");
    compare->add_option("-T,--rounds", rounds, "Number of rounds");
    compare->add_option("-s,--seed", seed, "Schedule seed");

    std::string logs_path;
    auto* report = app.add_subcommand("report", "Recompute metrics from a round log");
    report->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    report->add_option("-l,--logs", logs_path, "Round log (JSONL)")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--out", out_dir, "Output directory");

    std::optional<int> port;
    auto* serve_cmd = app.add_subcommand("serve", "Serve live sessions over HTTP");
    serve_cmd->add_option("-c,--config", config_path, "Service config (JSON)")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)");

    std::string tokenizer_path, text_a, text_b;
    auto* tokenize = app.add_subcommand("tokenize", "Print token ids and surfaces");
    tokenize->add_option("--bpe", tokenizer_path, "tiktoken rank file (default: fallback tokenizer)");
    tokenize->add_option("text", text_a)->required();

    auto* distance = app.add_subcommand("distance", "Token edit distance between two texts");
    distance->add_option("--bpe", tokenizer_path, "tiktoken rank file (default: fallback tokenizer)");
    distance->add_option("a", text_a)->required();
    distance->add_option("b", text_b)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        auto load_tokenizer = [&]() -> std::shared_ptr<const Tokenizer> {
            if (tokenizer_path.empty()) return std::make_shared<FallbackTokenizer>();
            return BpeTokenizer::load(tokenizer_path);
        };

        if (*run || *compare || *report) {
            auto cfg = load_experiment_config(config_path);
            if (rounds) cfg.rounds = *rounds;
            if (seed) cfg.seed = *seed;
            auto corpus = load_experiment_corpus(cfg);

            if (*run) {
                if (!policy_label.empty()) cfg.components.policy = policy_from_label(policy_label, cfg.components.policy);
                auto result = run_one(cfg, corpus, out_dir, resume);
                std::cout << summary_json(result.summary) << "\n";
            } else if (*compare) {
                std::vector<std::pair<std::string, std::vector<RoundLog>>> runs;
                nlohmann::json summaries = nlohmann::json::array();
                for (const auto& label : split_list(policies)) {
                    auto c = cfg;
                    c.components.policy = policy_from_label(label, cfg.components.policy);
                    auto result = run_one(c, corpus, fs::path(out_dir) / c.components.policy.label(), false);
                    std::cerr << c.components.policy.label() << ": total cost " << result.summary.total_cost << "\n";
                    summaries.push_back(nlohmann::json::parse(summary_json(result.summary)));
                    runs.emplace_back(c.components.policy.label(), result.logs);
                }
                emit_comparison_csv(runs, (fs::path(out_dir) / "comparison.csv").string());
                write_text_file((fs::path(out_dir) / "summaries.json").string(), summaries.dump(2) + "\n");
                std::cout << summaries.dump(2) << "\n";
            } else {
                RunResult result;
                result.logs = read_round_logs(logs_path);
                result.summary = summarize(result.logs, cfg.components, cfg.task, cfg.user.latent(cfg.task), cfg.seed);
                fs::create_directories(out_dir);
                write_outputs(result, cfg, out_dir);
                std::cout << summary_json(result.summary) << "\n";
            }
        } else if (*serve_cmd) {
            auto cfg = load_service_config(config_path);
            if (port) cfg.port = *port;
            SessionManager manager(std::move(cfg));
            serve(manager);
        } else if (*tokenize) {
            auto tok = load_tokenizer();
            for (const auto& t : tok->tokenize(text_a).tokens)
                std::cout << t.id << "\t" << nlohmann::json(t.surface).dump() << "\n";
        } else if (*distance) {
            auto tok = load_tokenizer();
            auto c = edit_cost(*tok, text_a, text_b);
            std::cout << c.distance << " " << format_double(c.normalized) << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
