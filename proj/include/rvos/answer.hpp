#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvos/errors.hpp"
#include "rvos/geometry.hpp"

namespace rvos {

/// Half-open character range into RolloutText::raw.
struct TextSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// One model completion. Spans are located on construction and cover the
/// payload between the tags when exactly one well-formed block exists.
struct RolloutText {
    std::string raw;
    std::optional<TextSpan> think_span;
    std::optional<TextSpan> answer_span;

    static RolloutText scan(std::string raw);

    std::string_view think_text() const {
        return think_span ? std::string_view(raw).substr(think_span->begin,
                                                         think_span->end - think_span->begin)
                          : std::string_view{};
    }
    std::string_view answer_text() const {
        return answer_span ? std::string_view(raw).substr(answer_span->begin,
                                                          answer_span->end - answer_span->begin)
                           : std::string_view{};
    }
};

/// One parsed answer element: box plus a positive and a negative click.
struct ObjectPrediction {
    BBox bbox;
    LabeledPoint point_pos{0, 0, 1};
    LabeledPoint point_neg{0, 0, 0};

    bool operator==(const ObjectPrediction&) const = default;
};

struct FormatFlags {
    bool think_ok = false;
    bool answer_ok = false;
};

/// think_ok: exactly one <think>...</think> block followed by exactly one
/// <answer>...</answer> block. answer_ok: exactly one answer block, not
/// nested in a think block, whose payload parses.
FormatFlags validate_format(const RolloutText& t);

/// Parses the answer payload: a list of {'bbox_2d': [x1,y1,x2,y2],
/// 'point_pos': [x,y,1], 'point_neg': [x,y,0]} objects. Accepts both
/// single-quoted and double-quoted keys; numeric literals are rounded to
/// the nearest integer. Throws ParseError (with byte offset), LabelError,
/// BoxError.
std::vector<ObjectPrediction> parse_answer(std::string_view payload);

/// Canonical single-quoted rendering; parse_answer(serialize_answer(x)) == x.
std::string serialize_answer(const std::vector<ObjectPrediction>& predictions);

/// Splits on '.', '!', '?', and newline; lowercases, collapses whitespace,
/// strips surrounding punctuation, drops empty pieces.
std::vector<std::string> split_sentences(std::string_view think_text);

/// Whitespace-delimited token count; the reasoning-length unit.
std::size_t count_whitespace_tokens(std::string_view text);

}  // namespace rvos
