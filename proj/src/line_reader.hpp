#pragma once

// Helpers shared by the line-oriented text parsers.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ptrack/errors.hpp"

namespace ptrack::detail {

/// Yields the whitespace-separated tokens of each non-blank, non-comment line.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    /// False at end of input.
    bool next(std::vector<std::string_view>& tokens) {
        while (std::getline(in_, line_)) {
            ++line_no_;
            tokens.clear();
            std::size_t i = 0;
            while (i < line_.size()) {
                while (i < line_.size() && is_space(line_[i])) ++i;
                const std::size_t start = i;
                while (i < line_.size() && !is_space(line_[i])) ++i;
                if (i > start) tokens.emplace_back(line_.data() + start, i - start);
            }
            if (tokens.empty() || tokens.front().front() == '#') continue;
            return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_no_; }

private:
    static bool is_space(char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
    }

    std::istream& in_;
    std::string line_;
    std::size_t line_no_ = 0;
};

inline long long parse_integer(std::string_view token, std::size_t line, const char* field) {
    long long value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size()) {
        throw ParseError(line, std::string("bad ") + field + " '" + std::string(token) + "'");
    }
    return value;
}

inline double parse_real(std::string_view token, std::size_t line, const char* field) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size() || !std::isfinite(value)) {
        throw ParseError(line, std::string("bad ") + field + " '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace ptrack::detail
