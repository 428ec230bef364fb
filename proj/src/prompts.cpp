#include "prelude/prompts.hpp"

#include "prelude/error.hpp"

namespace prelude {

std::string_view to_string(Task t) { return t == Task::Summarization ? "summarization" : "email"; }

Task parse_task(std::string_view s) {
    if (s == "summarization") return Task::Summarization;
    if (s == "email" || s == "email-writing") return Task::Email;
    throw ConfigError("unknown task '" + std::string(s) + "' (expected summarization or email)");
}

namespace prompts {

namespace {

std::string cat(std::initializer_list<std::string_view> parts) {
    std::string out;
    for (auto p : parts) out += p;
    return out;
}

constexpr std::string_view kInferQuestionSummary =
    "Based on the edits and revision by this user on the original summary in the above examples, "
    "what do you find about this user's generic preference in terms of writing style and formatting? "
    "Please answer in a short phrase and only recommend those preferences that are widely used.";

constexpr std::string_view kInferQuestionEmail =
    "Based on the edits and revision by this user on the original email in the above examples, "
    "what do you find about this user's generic preference in terms of writing style and formatting? "
    "Please answer in a short phrase and only recommend those preferences that are widely used.";

}  // namespace

std::string generation(Task task, std::string_view context, std::string_view preference) {
    if (task == Task::Summarization)
        return cat({"Article: ", context,
                    "\nAssume that you need to summarize the above article for a user, "
                    "who prefers the following style: ",
                    preference,
                    ". Please write a summary of the above article to address those specified preferences."});
    return cat({"Notes: ", context,
                "\nThese notes are written by a user who prefers the following style of emails: ", preference,
                ". Please write a short email based on the above notes to address those specified preferences."});
}

std::string inference(Task task, std::span<const EditPair> pairs) {
    std::string out;
    for (const auto& p : pairs) {
        if (task == Task::Summarization)
            out += cat({"Original summary of an article: ", p.response, "\nRevised summary by a user: ", p.revision, "\n"});
        else
            out += cat({"Original email: ", p.response, "\nRevised email: ", p.revision, "\n"});
    }
    out += task == Task::Summarization ? kInferQuestionSummary : kInferQuestionEmail;
    return out;
}

std::string aggregation(Task task, std::span<const std::string> preferences) {
    std::string out = task == Task::Summarization
                          ? "List of user preferences successfully being used to generate summaries of similar documents:\n"
                          : "List of user preferences successfully being used to generate emails of a similar kind:\n";
    for (const auto& p : preferences) out += cat({"- ", p, "\n"});
    out += task == Task::Summarization
               ? "Based on the the above examples, please come up with short phrase with the most represented "
                 "summarization preferences of the user."
               : "Based on the the above examples, please come up with short phrase with the most represented "
                 "writing preferences of this user.";
    return out;
}

std::string icl_edit(Task task, std::string_view context, std::span<const EditPair> examples) {
    std::string out;
    // The email column of the ICL template reuses the summary wording for its example blocks.
    for (const auto& e : examples)
        out += cat({"Original summary of an article: ", e.response, "\nRevised summary by a user: ", e.revision, "\n"});
    // Without examples (round 1) only the bare task instruction remains.
    const bool bare = examples.empty();
    if (task == Task::Summarization)
        out += cat({"Article: ", context,
                    bare ? "\nPlease summarize the above article:"
                         : "\nBased on the edits and revision by this user on the original summary in the above examples, "
                           "Please summarize the above article:"});
    else
        out += cat({"Notes: ", context,
                    bare ? "\nPlease write an email based on the above notes for this user:"
                         : "\nBased on the edits and revision by this user on the original email in the above examples, "
                           "Please write an email based on the above notes for this user:"});
    return out;
}

std::string user_check(Task task, std::string_view context, std::string_view response,
                       std::string_view latent_preference) {
    if (task == Task::Summarization)
        return cat({"Article: ", context, "\nSummary: ", response,
                    "\nIs the above summary of the above article good for person who would love to use the "
                    "following style: ",
                    latent_preference, "? Please answer yes or no."});
    return cat({"Notes: ", context, "\nEmail: ", response,
                "\nIs the above email based on the above notes good for a user who wants the following style: ",
                latent_preference, "? Please answer yes or no."});
}

std::string user_revise(Task task, std::string_view response, std::string_view latent_preference) {
    if (task == Task::Summarization)
        return cat({"Summary: ", response, "\nPlease revise the above summary of an article to meet your style: ",
                    latent_preference, "."});
    return cat({"Email: ", response, "\nAssume that you prefer ", latent_preference,
                ". Please revise the above email to meet your style."});
}

}  // namespace prompts

ChatRequest render_generation_prompt(std::string_view context, std::string_view preference, Task task) {
    return ChatRequest::user_prompt(prompts::generation(task, context, preference), CallerRole::Agent,
                                    Purpose::Generate);
}

}  // namespace prelude
