#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "rvos/errors.hpp"

namespace rvos {

enum class DifficultyLevel { easy, medium, hard };

const char* to_string(DifficultyLevel level);

/// The five dimension ratings in scoring order: scene, segmentation,
/// temporal, motion, language.
using DifficultyScores = std::array<int, 5>;

struct DifficultyProfile {
    int scene = 1;
    int segmentation = 1;
    int temporal = 1;
    int motion = 1;
    int language = 1;
    double d_score = 1.0;
    DifficultyLevel level = DifficultyLevel::easy;
};

struct DifficultyConfig {
    double tau_easy = 3.0;
    double tau_hard = 6.0;
    std::size_t budget_easy = 96;
    std::size_t budget_medium = 176;
    std::size_t budget_hard = 256;
};

/// d_score is the plain mean; D <= tau_easy is easy, D <= tau_hard medium,
/// above that hard. Throws ScoreOutOfRangeError outside [1,10].
DifficultyProfile aggregate_difficulty(const DifficultyScores& scores,
                                       const DifficultyConfig& cfg = {});

std::size_t token_budget(const DifficultyProfile& p, const DifficultyConfig& cfg = {});

/// The scoring template with {query}, {visual_desc}, {textual_desc} filled in.
std::string render_scoring_prompt(std::string_view query, std::string_view visual_desc,
                                  std::string_view textual_desc);

/// Pulls the scores out of a scorer completion: the last brace-delimited
/// dictionary carrying all five keys wins, so restated aspects or partial
/// decoy dicts earlier in the text are skipped. Throws MissingDictError,
/// MissingKeyError, ScoreOutOfRangeError.
DifficultyScores parse_difficulty_response(std::string_view text);

}  // namespace rvos
