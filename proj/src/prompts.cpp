#include "rvos/prompts.hpp"

#include <rvos/prompts_data.hpp>

namespace rvos {

std::string_view coarse_temporal_template() {
    return prompts::kCoarseTemporal;
}

std::string_view fine_percent_template() {
    return prompts::kFinePercent;
}

std::string_view difficulty_scoring_template() {
    return prompts::kDifficultyScoring;
}

std::string substitute_placeholders(
    std::string_view template_text,
    const std::vector<std::pair<std::string_view, std::string_view>>& values) {
    std::string out(template_text);
    for (const auto& [name, value] : values) {
        const std::string token = "{" + std::string(name) + "}";
        std::size_t pos = 0;
        while ((pos = out.find(token, pos)) != std::string::npos) {
            out.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return out;
}

namespace {

std::string render_localizer_prompt(std::string_view tmpl, std::string_view query,
                                    int segment_start, int segment_end, int num_frames) {
    const std::string start = std::to_string(segment_start);
    const std::string end = std::to_string(segment_end);
    const std::string frames = std::to_string(num_frames);
    return substitute_placeholders(tmpl, {{"query", query},
                                          {"segment_start", start},
                                          {"segment_end", end},
                                          {"num_frames", frames}});
}

}  // namespace

std::string render_coarse_prompt(std::string_view query, int segment_start, int segment_end,
                                 int num_frames) {
    return render_localizer_prompt(coarse_temporal_template(), query, segment_start, segment_end,
                                   num_frames);
}

std::string render_fine_prompt(std::string_view query, int segment_start, int segment_end,
                               int num_frames) {
    return render_localizer_prompt(fine_percent_template(), query, segment_start, segment_end,
                                   num_frames);
}

}  // namespace rvos
