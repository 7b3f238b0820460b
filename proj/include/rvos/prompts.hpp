#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rvos {

/// Raw template texts compiled in from assets/prompts/.
std::string_view coarse_temporal_template();
std::string_view fine_percent_template();
std::string_view difficulty_scoring_template();

/// Replaces every occurrence of each {name} token with its value. Literal
/// substitution only; unrelated braces in the template are left alone.
std::string substitute_placeholders(
    std::string_view template_text,
    const std::vector<std::pair<std::string_view, std::string_view>>& values);

/// Localizer prompts with {query}, {segment_start}, {segment_end},
/// {num_frames} filled in.
std::string render_coarse_prompt(std::string_view query, int segment_start, int segment_end,
                                 int num_frames);
std::string render_fine_prompt(std::string_view query, int segment_start, int segment_end,
                               int num_frames);

}  // namespace rvos
