/**
 * @file io.hpp
 * @brief CSV output with locale-independent, round-trip number formatting,
 *        and SHA-256 file digests for run manifests.
 */
#pragma once

#include "orbitlab/core.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace orbitlab {

/// Shortest representation that parses back to the same double.
inline std::string format_number(double x) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

inline std::string format_number(std::uint64_t x) { return std::to_string(x); }
inline std::string format_number(std::int64_t x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }
inline std::string format_number(unsigned x) { return std::to_string(x); }

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Writes a header row on construction; rows end in LF.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
        : path_(path), os_(path, std::ios::binary), width_(header.size()) {
        if (!os_) throw UsageError("cannot open " + path.string() + " for writing");
        write_cells(std::vector<std::string>(header.begin(), header.end()));
    }

    template <typename... Ts>
    void row(const Ts&... cells) {
        static_assert(sizeof...(Ts) > 0);
        std::vector<std::string> out;
        (out.push_back(cell(cells)), ...);
        write_cells(out);
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <typename T>
    static std::string cell(const T& v) {
        if constexpr (std::is_floating_point_v<T>) {
            return format_number(static_cast<double>(v));
        } else {
            return std::to_string(v);
        }
    }

    void write_cells(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw UsageError("CsvWriter: row width does not match header in " + path_.string());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_field(cells[i]);
        }
        os_ << '\n';
    }

    std::filesystem::path path_;
    std::ofstream os_;
    std::size_t width_;
};

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw NumericalError("sha256: init failed");
    std::array<char, 1 << 14> buf{};
    while (is) {
        is.read(buf.data(), buf.size());
        if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

}  // namespace orbitlab
