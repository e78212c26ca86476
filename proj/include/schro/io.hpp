#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "schro/errors.hpp"

namespace schro {

// Shortest round-trip decimal form; used everywhere numbers reach a file so
// that reruns are byte-identical.
inline std::string double_to_string(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string int_to_string(long long v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Accumulates comma-separated rows; write the result with atomic_write.
class CsvBuilder {
  public:
    CsvBuilder& header(const std::vector<std::string>& cols) { return raw_row(cols); }

    CsvBuilder& raw_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
        return *this;
    }

    CsvBuilder& row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells) s.push_back(double_to_string(v));
        return raw_row(s);
    }

    const std::string& str() const { return body_; }

  private:
    std::string body_;
};

// Write via a temp file in the same directory, then rename: interrupted runs
// never leave a truncated file at the final path.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Error("atomic_write: cannot open " + tmp.string());
    const std::size_t n = std::fwrite(content.data(), 1, content.size(), f);
    const int flushed = std::fflush(f);
    std::fclose(f);
    if (n != content.size() || flushed != 0) {
        std::filesystem::remove(tmp);
        throw Error("atomic_write: short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw Error("read_file: cannot open " + path.string());
    std::string out;
    char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

} // namespace schro
