#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "prelude/config.hpp"
#include "prelude/environments.hpp"

namespace prelude::testing {

std::string data_path(const std::string& name);    // data/<name>
std::string golden_path(const std::string& name);  // tests/golden/<name>
std::string read_file(const std::string& path);

// Each prompt template instantiated on fixed inputs, paired with the name of
// the golden file it must equal.
std::vector<std::pair<std::string, std::string>> golden_instantiations();

// Memoized recursive Levenshtein, independent of the library's DP.
std::size_t oracle_levenshtein(const std::vector<TokenId>& a, const std::vector<TokenId>& b);

// Brute force: sort all indices by (similarity desc, index asc), keep k.
std::vector<std::size_t> oracle_top_k(const std::vector<double>& query, const std::vector<std::vector<double>>& rows,
                                      int k);
double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b);

std::shared_ptr<const ChatBackend> closure_backend();
Corpus demo_corpus(Task task = Task::Summarization);
std::map<std::string, std::string> demo_rules();
UserConfig rule_user();
RunComponents components(PolicyConfig policy, std::shared_ptr<const ChatBackend> backend = closure_backend());
PolicyConfig policy(PolicyKind kind, int k = 5);

// Forwards to another backend and keeps every (request, reply) pair.
class RecordingBackend final : public ChatBackend {
public:
    explicit RecordingBackend(std::shared_ptr<const ChatBackend> inner) : inner_(std::move(inner)) {}
    BackendReply reply(const ChatRequest& request) const override;

    struct Call {
        ChatRequest request;
        std::string reply;
    };
    std::vector<Call> calls() const;

private:
    std::shared_ptr<const ChatBackend> inner_;
    mutable std::mutex mu_;
    mutable std::vector<Call> calls_;
};

// Unique scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace prelude::testing
