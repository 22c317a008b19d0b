#pragma once
// File plumbing shared by the loaders and the command-line tool: whole-file
// reads, JSON parsing with line numbers, a small header-addressed CSV table
// and SHA-256 digests for run manifests.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rydberg::io {

using json = nlohmann::json;

/// Raised for malformed input files. what() names the file and location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

/// Parses JSON text; syntax errors are rethrown with the line number.
inline json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte one past the offending token
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(std::string(source) + ":" + std::to_string(line_of_offset(text, byte)) +
                     ": JSON syntax error: " + e.what());
  }
}

inline json load_json(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return ss.str();
}

/// Formats a double so that reading it back gives the same value.
inline std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf.data(), end);
}

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string(what) + ": not a number: '" + std::string(s) + "'");
  return v;
}

/// "omega" for an allowed "omega_MHz": returns the allowed name the bare key lacks a unit for.
inline std::optional<std::string_view> unit_hint(std::string_view key, const std::vector<std::string_view>& allowed) {
  for (auto a : allowed)
    if (a.size() > key.size() + 1 && a.starts_with(key) && a[key.size()] == '_') return a;
  return std::nullopt;
}

/// CSV with a header row. Cells are addressed by column name and parsed as
/// numbers on access.
class CsvTable {
 public:
  static CsvTable parse(std::string_view text, std::string_view source) {
    CsvTable t;
    t.source_ = source;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      std::string_view line = text.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') {
        if (eol == text.size()) break;
        continue;
      }
      auto cells = split(line);
      if (!have_header) {
        for (auto& c : cells) t.columns_.push_back(trim(c));
        have_header = true;
      } else {
        if (cells.size() != t.columns_.size())
          throw ParseError(t.where(line_no) + ": expected " + std::to_string(t.columns_.size()) +
                           " columns, found " + std::to_string(cells.size()));
        std::vector<std::string> row;
        for (auto& c : cells) row.push_back(trim(c));
        t.rows_.push_back(std::move(row));
        t.lines_.push_back(line_no);
      }
      if (eol == text.size()) break;
    }
    if (!have_header) throw ParseError(std::string(source) + ": missing header row");
    return t;
  }

  static CsvTable load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
  }

  [[nodiscard]] std::size_t rows() const { return rows_.size(); }
  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] bool has(std::string_view col) const { return index_of(col).has_value(); }

  /// Required cell; missing column or empty cell is a ParseError.
  [[nodiscard]] double at(std::size_t row, std::string_view col) const {
    auto idx = index_of(col);
    if (!idx) throw ParseError(source_ + ": missing required column '" + std::string(col) + "'");
    const auto& cell = rows_.at(row)[*idx];
    if (cell.empty())
      throw ParseError(where(lines_[row]) + ": empty cell in column '" + std::string(col) + "'");
    return parse_double(cell, where(lines_[row]) + ", column '" + std::string(col) + "'");
  }

  /// Optional cell; absent column or empty cell gives nullopt.
  [[nodiscard]] std::optional<double> get(std::size_t row, std::string_view col) const {
    auto idx = index_of(col);
    if (!idx || rows_.at(row)[*idx].empty()) return std::nullopt;
    return at(row, col);
  }

  [[nodiscard]] const std::string& text(std::size_t row, std::string_view col) const {
    auto idx = index_of(col);
    if (!idx) throw ParseError(source_ + ": missing required column '" + std::string(col) + "'");
    return rows_.at(row)[*idx];
  }

  [[nodiscard]] std::string where(std::size_t line_no) const {
    return source_ + ":" + std::to_string(line_no);
  }
  [[nodiscard]] std::size_t line_of_row(std::size_t row) const { return lines_.at(row); }

  /// Rejects columns that are not in the allowed set, catching unit typos.
  void require_known_columns(const std::vector<std::string_view>& allowed) const {
    for (const auto& c : columns_) {
      if (std::find(allowed.begin(), allowed.end(), c) != allowed.end()) continue;
      if (auto a = unit_hint(c, allowed))
        throw ParseError(source_ + ": column '" + c + "' is missing its unit, expected '" + std::string(*a) + "'");
      throw ParseError(source_ + ": unknown column '" + c + "'");
    }
  }

 private:
  static std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }
  static std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
  }
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view col) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == col) return i;
    return std::nullopt;
  }

  std::string source_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

/// Streams rows to CSV text using round-trippable number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : ncols_(header.size()) {
    write_row(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt_double(v));
    write_row(cells);
  }
  void row(const std::vector<std::string>& cells) { write_row(cells); }
  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_) throw std::logic_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::size_t ncols_;
  std::ostringstream out_;
};

/// Object keys must come from `allowed`. A key that is a prefix of an
/// allowed key ("omega" for "omega_MHz") is reported as a missing unit.
inline void require_known_keys(const json& obj, const std::vector<std::string_view>& allowed,
                               std::string_view source) {
  if (!obj.is_object()) throw ParseError(std::string(source) + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    if (auto a = unit_hint(key, allowed))
      throw ParseError(std::string(source) + ": key '" + key + "' is missing its unit, expected '" +
                       std::string(*a) + "'");
    throw ParseError(std::string(source) + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_required(const json& obj, const std::string& key, std::string_view source) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(source) + ": missing key '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(source) + ": bad value for '" + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, std::string_view source) {
  if (!obj.contains(key)) return fallback;
  return get_required<T>(obj, key, source);
}

}  // namespace rydberg::io
