#include "rvos/answer.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace rvos {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::vector<std::size_t> find_all(std::string_view text, std::string_view needle) {
    std::vector<std::size_t> out;
    std::size_t pos = text.find(needle);
    while (pos != std::string_view::npos) {
        out.push_back(pos);
        pos = text.find(needle, pos + 1);
    }
    return out;
}

// Answer payload parser. Hand-rolled so errors carry byte offsets and the
// single-quoted template form is accepted alongside strict JSON.
class AnswerParser {
public:
    explicit AnswerParser(std::string_view text) : text_(text) {}

    std::vector<ObjectPrediction> parse_list() {
        skip_ws();
        expect('[');
        std::vector<ObjectPrediction> out;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
        } else {
            while (true) {
                out.push_back(parse_object());
                skip_ws();
                const char c = next("',' or ']'");
                if (c == ']') break;
                if (c != ',') fail("expected ',' or ']'", pos_ - 1);
                skip_ws();
            }
        }
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters after list", pos_);
        }
        return out;
    }

private:
    ObjectPrediction parse_object() {
        skip_ws();
        expect('{');
        std::optional<std::vector<long long>> bbox;
        std::optional<std::vector<long long>> point_pos;
        std::optional<std::vector<long long>> point_neg;
        while (true) {
            skip_ws();
            const std::size_t key_at = pos_;
            const std::string key = parse_quoted();
            skip_ws();
            expect(':');
            auto nums = parse_number_list();
            if (key == "bbox_2d") {
                store(bbox, std::move(nums), 4, key, key_at);
            } else if (key == "point_pos") {
                store(point_pos, std::move(nums), 3, key, key_at);
            } else if (key == "point_neg") {
                store(point_neg, std::move(nums), 3, key, key_at);
            } else {
                fail("unknown key '" + key + "'", key_at);
            }
            skip_ws();
            const char c = next("',' or '}'");
            if (c == '}') break;
            if (c != ',') fail("expected ',' or '}'", pos_ - 1);
        }
        if (!bbox) fail("object lacks bbox_2d", pos_);
        if (!point_pos) fail("object lacks point_pos", pos_);
        if (!point_neg) fail("object lacks point_neg", pos_);

        ObjectPrediction pred;
        pred.bbox = BBox{static_cast<int>((*bbox)[0]), static_cast<int>((*bbox)[1]),
                         static_cast<int>((*bbox)[2]), static_cast<int>((*bbox)[3])};
        if (!pred.bbox.valid()) {
            throw BoxError("invalid bbox_2d: corners must be non-negative with x1<=x2, y1<=y2");
        }
        if ((*point_pos)[2] != 1) {
            throw LabelError("point_pos label must be 1");
        }
        if ((*point_neg)[2] != 0) {
            throw LabelError("point_neg label must be 0");
        }
        pred.point_pos = LabeledPoint{static_cast<int>((*point_pos)[0]),
                                      static_cast<int>((*point_pos)[1]), 1};
        pred.point_neg = LabeledPoint{static_cast<int>((*point_neg)[0]),
                                      static_cast<int>((*point_neg)[1]), 0};
        return pred;
    }

    void store(std::optional<std::vector<long long>>& slot, std::vector<long long> nums,
               std::size_t arity, const std::string& key, std::size_t at) {
        if (slot) fail("duplicate key '" + key + "'", at);
        if (nums.size() != arity) {
            fail("'" + key + "' expects " + std::to_string(arity) + " numbers, got " +
                     std::to_string(nums.size()),
                 at);
        }
        slot = std::move(nums);
    }

    std::vector<long long> parse_number_list() {
        skip_ws();
        expect('[');
        std::vector<long long> out;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(parse_number());
            skip_ws();
            const char c = next("',' or ']'");
            if (c == ']') break;
            if (c != ',') fail("expected ',' or ']'", pos_ - 1);
            skip_ws();
        }
        return out;
    }

    long long parse_number() {
        const std::size_t start = pos_;
        if (peek() == '+' || peek() == '-') ++pos_;
        bool digits = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
            digits = true;
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                digits = true;
            }
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                fail("malformed exponent", pos_);
            }
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        }
        if (!digits) {
            fail("expected number", start);
        }
        const std::string token(text_.substr(start, pos_ - start));
        return std::llround(std::strtod(token.c_str(), nullptr));
    }

    std::string parse_quoted() {
        const char quote = next("quote");
        if (quote != '\'' && quote != '"') {
            fail("expected quoted key", pos_ - 1);
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != quote) {
            ++pos_;
        }
        if (pos_ >= text_.size()) {
            fail("unterminated key", start);
        }
        std::string out(text_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    char next(const char* what) {
        if (pos_ >= text_.size()) {
            fail(std::string("unexpected end of input, expected ") + what, pos_);
        }
        return text_[pos_++];
    }

    void expect(char c) {
        if (peek() != c) {
            fail(std::string("expected '") + c + "'", pos_);
        }
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    [[noreturn]] void fail(const std::string& message, std::size_t at) const {
        throw ParseError(message, at);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

RolloutText RolloutText::scan(std::string raw) {
    RolloutText t;
    t.raw = std::move(raw);
    const auto t_open = find_all(t.raw, kThinkOpen);
    const auto t_close = find_all(t.raw, kThinkClose);
    const auto a_open = find_all(t.raw, kAnswerOpen);
    const auto a_close = find_all(t.raw, kAnswerClose);
    if (t_open.size() == 1 && t_close.size() == 1 &&
        t_open[0] + kThinkOpen.size() <= t_close[0]) {
        t.think_span = TextSpan{t_open[0] + kThinkOpen.size(), t_close[0]};
    }
    if (a_open.size() == 1 && a_close.size() == 1 &&
        a_open[0] + kAnswerOpen.size() <= a_close[0]) {
        t.answer_span = TextSpan{a_open[0] + kAnswerOpen.size(), a_close[0]};
    }
    // Overlapping blocks are no blocks at all.
    if (t.think_span && t.answer_span) {
        const bool disjoint = t.think_span->end <= t.answer_span->begin - kAnswerOpen.size() ||
                              t.answer_span->end <= t.think_span->begin - kThinkOpen.size();
        if (!disjoint) {
            t.think_span.reset();
            t.answer_span.reset();
        }
    }
    return t;
}

FormatFlags validate_format(const RolloutText& t) {
    FormatFlags flags;
    flags.think_ok = t.think_span.has_value() && t.answer_span.has_value() &&
                     t.think_span->end <= t.answer_span->begin;
    if (t.answer_span) {
        try {
            parse_answer(t.answer_text());
            flags.answer_ok = true;
        } catch (const Error&) {
            flags.answer_ok = false;
        }
    }
    return flags;
}

std::vector<ObjectPrediction> parse_answer(std::string_view payload) {
    return AnswerParser(payload).parse_list();
}

std::string serialize_answer(const std::vector<ObjectPrediction>& predictions) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& p = predictions[i];
        if (i > 0) out << ", ";
        out << "{'bbox_2d': [" << p.bbox.x1 << ", " << p.bbox.y1 << ", " << p.bbox.x2 << ", "
            << p.bbox.y2 << "], 'point_pos': [" << p.point_pos.x << ", " << p.point_pos.y
            << ", 1], 'point_neg': [" << p.point_neg.x << ", " << p.point_neg.y << ", 0]}";
    }
    out << ']';
    return out.str();
}

std::vector<std::string> split_sentences(std::string_view think_text) {
    std::vector<std::string> out;
    std::string piece;
    auto flush = [&]() {
        // lowercase + collapse whitespace
        std::string norm;
        bool in_space = false;
        for (const char c : piece) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                in_space = !norm.empty();
            } else {
                if (in_space) norm += ' ';
                in_space = false;
                norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        // strip surrounding punctuation
        std::size_t b = 0;
        std::size_t e = norm.size();
        auto strippable = [&](char c) {
            return c == ' ' || std::ispunct(static_cast<unsigned char>(c));
        };
        while (b < e && strippable(norm[b])) ++b;
        while (e > b && strippable(norm[e - 1])) --e;
        if (e > b) {
            out.push_back(norm.substr(b, e - b));
        }
        piece.clear();
    };
    for (const char c : think_text) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            flush();
        } else {
            piece += c;
        }
    }
    flush();
    return out;
}

std::size_t count_whitespace_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (const char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

}  // namespace rvos
