#include "rvos/difficulty.hpp"

#include <cctype>
#include <map>
#include <optional>

#include "rvos/prompts.hpp"

namespace rvos {

namespace {

constexpr std::array<const char*, 5> kScoreKeys = {"scene", "segmentation", "temporal", "motion",
                                                   "language"};

using Dict = std::map<std::string, long long>;

// Parses a flat {key: int, ...} dictionary starting at the '{' at `open`.
// Keys may be bare, single-quoted, or double-quoted.
std::optional<Dict> parse_flat_dict(std::string_view text, std::size_t open) {
    std::size_t i = open + 1;
    const auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    Dict entries;
    skip_ws();
    if (i < text.size() && text[i] == '}') {
        return entries;
    }
    while (i < text.size()) {
        skip_ws();
        std::string key;
        if (i < text.size() && (text[i] == '"' || text[i] == '\'')) {
            const char quote = text[i++];
            const auto close = text.find(quote, i);
            if (close == std::string_view::npos) return std::nullopt;
            key = std::string(text.substr(i, close - i));
            i = close + 1;
        } else {
            const auto start = i;
            while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                       text[i] == '_')) {
                ++i;
            }
            if (i == start) return std::nullopt;
            key = std::string(text.substr(start, i - start));
        }
        skip_ws();
        if (i >= text.size() || text[i] != ':') return std::nullopt;
        ++i;
        skip_ws();
        bool negative = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            negative = text[i] == '-';
            ++i;
        }
        const auto digits_start = i;
        long long value = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + (text[i] - '0');
            ++i;
        }
        if (i == digits_start) return std::nullopt;
        entries[key] = negative ? -value : value;
        skip_ws();
        if (i < text.size() && text[i] == ',') {
            ++i;
            continue;
        }
        if (i < text.size() && text[i] == '}') {
            return entries;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

bool has_all_keys(const Dict& d) {
    for (const auto* key : kScoreKeys) {
        if (!d.count(key)) return false;
    }
    return true;
}

}  // namespace

const char* to_string(DifficultyLevel level) {
    switch (level) {
        case DifficultyLevel::easy: return "easy";
        case DifficultyLevel::medium: return "medium";
        case DifficultyLevel::hard: return "hard";
    }
    return "easy";
}

DifficultyProfile aggregate_difficulty(const DifficultyScores& scores,
                                       const DifficultyConfig& cfg) {
    long long sum = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < 1 || scores[i] > 10) {
            throw ScoreOutOfRangeError("difficulty rating '" + std::string(kScoreKeys[i]) +
                                       "' is " + std::to_string(scores[i]) +
                                       ", expected 1..10");
        }
        sum += scores[i];
    }
    DifficultyProfile p;
    p.scene = scores[0];
    p.segmentation = scores[1];
    p.temporal = scores[2];
    p.motion = scores[3];
    p.language = scores[4];
    p.d_score = static_cast<double>(sum) / 5.0;
    if (p.d_score <= cfg.tau_easy) {
        p.level = DifficultyLevel::easy;
    } else if (p.d_score <= cfg.tau_hard) {
        p.level = DifficultyLevel::medium;
    } else {
        p.level = DifficultyLevel::hard;
    }
    return p;
}

std::size_t token_budget(const DifficultyProfile& p, const DifficultyConfig& cfg) {
    switch (p.level) {
        case DifficultyLevel::easy: return cfg.budget_easy;
        case DifficultyLevel::medium: return cfg.budget_medium;
        case DifficultyLevel::hard: return cfg.budget_hard;
    }
    return cfg.budget_easy;
}

std::string render_scoring_prompt(std::string_view query, std::string_view visual_desc,
                                  std::string_view textual_desc) {
    return substitute_placeholders(difficulty_scoring_template(),
                                   {{"query", query},
                                    {"visual_desc", visual_desc},
                                    {"textual_desc", textual_desc}});
}

DifficultyScores parse_difficulty_response(std::string_view text) {
    std::optional<Dict> complete;
    std::optional<Dict> any;
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos;
         pos = text.find('{', pos + 1)) {
        auto dict = parse_flat_dict(text, pos);
        if (!dict) continue;
        any = dict;
        if (has_all_keys(*dict)) {
            complete = std::move(dict);
        }
    }
    if (!any) {
        throw MissingDictError("no score dictionary found in scorer response");
    }
    if (!complete) {
        for (const auto* key : kScoreKeys) {
            if (!any->count(key)) {
                throw MissingKeyError("score dictionary is missing key '" + std::string(key) +
                                      "'");
            }
        }
    }
    DifficultyScores out{};
    for (std::size_t i = 0; i < kScoreKeys.size(); ++i) {
        const long long v = complete->at(kScoreKeys[i]);
        if (v < 1 || v > 10) {
            throw ScoreOutOfRangeError("difficulty rating '" + std::string(kScoreKeys[i]) +
                                       "' is " + std::to_string(v) + ", expected 1..10");
        }
        out[i] = static_cast<int>(v);
    }
    return out;
}

}  // namespace rvos
