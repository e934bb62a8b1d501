#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace absa {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent seed streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

/// Number of unicode scalar values in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

/// Decodes one code point starting at s[pos]; advances pos. Invalid bytes
/// decode as U+FFFD and advance by one.
char32_t utf8_next(std::string_view s, std::size_t& pos);

std::string to_lower_ascii(std::string_view s);

/// Lowercases ASCII letters and the Latin-1 supplement uppercase block.
std::string to_lower(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes bytes to path. When the file already exists it must hold the
/// same bytes, otherwise an Error is thrown (artifacts are write-once).
void write_once(const std::filesystem::path& path, std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);

std::vector<std::string> split(std::string_view s, char sep);

std::string trim(std::string_view s);

}  // namespace absa
