#include "prelude/text_transforms.hpp"

#include <algorithm>

#include "prelude/error.hpp"

namespace prelude::transforms {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_ws(text[i + 1]))) {
            auto s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) out.emplace_back(s);
            start = i + 1;
        }
    }
    if (start < text.size()) {
        auto s = trim(text.substr(start));
        if (!s.empty()) out.emplace_back(s);
    }
    return out;
}

std::string uppercase(std::string_view text) {
    std::string out(text);
    for (auto& c : out)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return out;
}

bool has_lowercase(std::string_view text) {
    return std::any_of(text.begin(), text.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string bulletize(std::string_view text) {
    std::string out;
    for (const auto& s : split_sentences(text)) {
        std::string_view body = s;
        while (body.starts_with("- ")) body = trim(body.substr(2));
        if (!out.empty()) out += '\n';
        out += "- ";
        out += body;
    }
    return out;
}

std::string first_sentences(std::string_view text, std::size_t n) {
    auto sentences = split_sentences(text);
    std::string out;
    for (std::size_t i = 0; i < std::min(n, sentences.size()); ++i) {
        if (!out.empty()) out += ' ';
        out += sentences[i];
    }
    return out;
}

bool ends_with_closing(std::string_view text) { return text.ends_with(kClosingLine); }

std::string append_closing(std::string_view text) {
    if (ends_with_closing(text)) return std::string(text);
    return std::string(text) + "\n\n" + std::string(kClosingLine);
}

bool known(std::string_view name) {
    return name == "uppercase" || name == "bullets" || name == "first-3-sentences" || name == "closing";
}

std::string apply(std::string_view name, std::string_view text) {
    if (name == "uppercase") return uppercase(text);
    if (name == "bullets") return bulletize(text);
    if (name == "first-3-sentences") return first_sentences(text, 3);
    if (name == "closing") return append_closing(text);
    throw ConfigError("unknown text transform '" + std::string(name) + "'");
}

}  // namespace prelude::transforms
