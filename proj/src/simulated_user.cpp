#include "prelude/simulated_user.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"
#include "prelude/text_transforms.hpp"

namespace prelude {

using nlohmann::json;

LatentPreferenceRegistry LatentPreferenceRegistry::defaults() {
    LatentPreferenceRegistry r;
    const auto S = Task::Summarization;
    const auto E = Task::Email;
    r.set(S, "news_article",
          "targeted to young children, storytelling, short sentences, playful language, interactive, positive");
    r.set(S, "reddit_post", "second person narrative, brief, show emotions, invoke personal reflection, immersive");
    r.set(S, "wikipedia_page", "bullet points, parallel structure, brief");
    r.set(S, "paper_abstract", "tweet style, simple English, inquisitive, skillful foreshadowing, with emojis");
    r.set(S, "movie_review", "question answering style, direct, concise");
    r.set(E, "personal_problem", "informal, conversational, short, no closing");
    r.set(E, "paper_review", "casual tone, positive, clear, call to action");
    r.set(E, "paper_tweet", "engaging, personalized, professional tone, thankful closing");
    r.set(E, "paper_summary", "structured, straight to the points, respectful, professional greeting and closing");
    return r;
}

LatentPreferenceRegistry LatentPreferenceRegistry::from_json(std::string_view text, std::string_view origin) {
    LatentPreferenceRegistry r;
    try {
        auto doc = json::parse(text);
        for (auto& [task_name, sources] : doc.items()) {
            auto task = parse_task(task_name);
            for (auto& [source, pref] : sources.items()) r.set(task, source, pref.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw LoadError(std::string(origin) + ": " + e.what());
    }
    return r;
}

LatentPreferenceRegistry LatentPreferenceRegistry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open preference registry '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), path);
}

void LatentPreferenceRegistry::set(Task task, std::string source, std::string preference) {
    entries_[task][std::move(source)] = std::move(preference);
}

const std::string& LatentPreferenceRegistry::preference(Task task, const std::string& source) const {
    auto t = entries_.find(task);
    if (t != entries_.end()) {
        auto it = t->second.find(source);
        if (it != t->second.end()) return it->second;
    }
    throw NotFoundError("no latent preference for source '" + source + "' in task " + std::string(to_string(task)));
}

bool LatentPreferenceRegistry::contains(Task task, const std::string& source) const {
    auto t = entries_.find(task);
    return t != entries_.end() && t->second.contains(source);
}

std::vector<std::string> LatentPreferenceRegistry::sources(Task task) const {
    std::vector<std::string> out;
    if (auto t = entries_.find(task); t != entries_.end())
        for (const auto& [s, _] : t->second) out.push_back(s);
    return out;
}

const std::map<std::string, std::string>& LatentPreferenceRegistry::entries(Task task) const {
    static const std::map<std::string, std::string> kEmpty;
    auto t = entries_.find(task);
    return t == entries_.end() ? kEmpty : t->second;
}

// ---------------------------------------------------------------------------

std::vector<std::string> builtin_rule_ids() { return {"uppercase", "bullets", "first-3-sentences", "closing"}; }

EditRule builtin_rule(std::string_view id) {
    namespace tf = transforms;
    if (id == "uppercase")
        return {"uppercase", "uppercase everything", [](std::string_view s) { return tf::uppercase(s); },
                [](std::string_view s) { return !tf::has_lowercase(s); }};
    if (id == "bullets")
        return {"bullets", "bullet points for each sentence", [](std::string_view s) { return tf::bulletize(s); },
                [](std::string_view s) { return tf::bulletize(s) == s; }};
    if (id == "first-3-sentences")
        return {"first-3-sentences", "at most three sentences",
                [](std::string_view s) { return tf::first_sentences(s, 3); },
                [](std::string_view s) { return tf::split_sentences(s).size() <= 3; }};
    if (id == "closing")
        return {"closing", "end with the closing line", [](std::string_view s) { return tf::append_closing(s); },
                [](std::string_view s) { return tf::ends_with_closing(s); }};
    throw ConfigError("unknown edit rule '" + std::string(id) + "'");
}

std::string rule_user_edit(std::string_view response, const EditRule& rule) {
    if (rule.satisfied(response)) return std::string(response);
    return rule.transform(response);
}

bool parse_yes_no(std::string_view reply, bool* anomaly) {
    auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    std::size_t i = 0;
    while (i < reply.size() && !is_alpha(reply[i])) ++i;
    std::string word;
    while (i < reply.size() && is_alpha(reply[i])) word += static_cast<char>(reply[i++] | 0x20);
    if (anomaly) *anomaly = word != "yes" && word != "no";
    return word == "yes";
}

// ---------------------------------------------------------------------------

RuleUser::RuleUser(std::map<std::string, std::string> source_to_rule) {
    for (const auto& [source, rule_id] : source_to_rule) rules_.emplace(source, builtin_rule(rule_id));
}

const EditRule& RuleUser::rule_for(const std::string& source) const {
    auto it = rules_.find(source);
    if (it == rules_.end()) throw NotFoundError("no edit rule for source '" + source + "'");
    return it->second;
}

UserEditResult RuleUser::edit(std::string_view, std::string_view response, const std::string& source) {
    const auto& rule = rule_for(source);
    UserEditResult out;
    out.satisfied = rule.satisfied(response);
    out.revision = out.satisfied ? std::string(response) : rule.transform(response);
    return out;
}

LatentPreferenceRegistry RuleUser::registry(Task task) const {
    LatentPreferenceRegistry r;
    for (const auto& [source, rule] : rules_) r.set(task, source, rule.description);
    return r;
}

// ---------------------------------------------------------------------------

LlmUser::LlmUser(Gateway& gateway, Task task, LatentPreferenceRegistry registry)
    : gateway_(gateway), task_(task), registry_(std::move(registry)) {}

bool LlmUser::satisfaction_check(std::string_view context, std::string_view response, std::string_view latent,
                                 bool* anomaly) {
    auto req = ChatRequest::user_prompt(prompts::user_check(task_, context, response, latent),
                                        CallerRole::UserSimulator, Purpose::UserCheck);
    auto reply = gateway_.complete(req).text;
    bool odd = false;
    bool yes = parse_yes_no(reply, &odd);
    if (odd) anomalies_.push_back(reply);
    if (anomaly) *anomaly = odd;
    return yes;
}

std::string LlmUser::revise(std::string_view response, std::string_view latent) {
    auto req = ChatRequest::user_prompt(prompts::user_revise(task_, response, latent), CallerRole::UserSimulator,
                                        Purpose::UserEdit);
    return gateway_.complete(req).text;
}

UserEditResult LlmUser::edit(std::string_view context, std::string_view response, const std::string& source) {
    const auto& latent = registry_.preference(task_, source);
    UserEditResult out;
    out.satisfied = satisfaction_check(context, response, latent, &out.parse_anomaly);
    out.revision = out.satisfied ? std::string(response) : revise(response, latent);
    return out;
}

}  // namespace prelude
