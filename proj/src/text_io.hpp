#pragma once

// Internal helpers for the line-oriented text formats (checkpoints, dataset
// grids, manifests, config files).

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cavat/errors.hpp"

namespace cavat::detail {

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : file_(path.string()), in_(path) {
        if (!in_) throw ParseError(file_, 0, "cannot open file");
    }

    /// Next line, or false at end of file.
    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    std::string require(const char* what) {
        std::string line;
        if (!next(line)) throw error(std::string("unexpected end of file, expected ") + what);
        return line;
    }

    ParseError error(const std::string& what) const { return ParseError(file_, line_no_, what); }
    std::size_t line() const noexcept { return line_no_; }
    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

/// Accepts decimal and C99 hex floats ("0x1.8p+1"), as produced by format_double/format_hex.
inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const std::string buf(s);
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    return end == buf.c_str() + buf.size();
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string format_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

/// Writes to `path` through a temporary file and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace cavat::detail
