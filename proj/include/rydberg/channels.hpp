#pragma once
// Contaminant-channel data files.
//
// Schema: a JSON array of objects
//   {"label": str, "c3_abs_MHz_um3": num, "branching": num, "gamma_np_MHz": num, "note": str?}
// C3 and Gamma are ordinary frequencies in the file and angular inside.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rydberg/io.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

namespace detail {
// Line on which the n-th element of the top-level array starts.
inline std::size_t line_of_array_element(std::string_view text, std::size_t n) {
  int depth = 0;
  bool in_string = false, escaped = false;
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '{' || c == '[') {
      if (depth == 1 && count++ == n) return io::line_of_offset(text, i);
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
    }
  }
  return io::line_of_offset(text, text.size());
}
}  // namespace detail

inline std::vector<ContaminantChannel> parse_channels(std::string_view text, std::string_view source) {
  const auto doc = io::parse_json(text, source);
  if (!doc.is_array()) throw io::ParseError(std::string(source) + ":1: expected a JSON array of channels");

  std::vector<ContaminantChannel> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where =
        std::string(source) + ":" + std::to_string(detail::line_of_array_element(text, i)) +
        " (channel " + std::to_string(i) + ")";
    const auto& el = doc[i];
    io::require_known_keys(el, {"label", "c3_abs_MHz_um3", "branching", "gamma_np_MHz", "note"}, where);
    ContaminantChannel ch;
    ch.label = io::get_required<std::string>(el, "label", where);
    ch.c3_abs = mhz(io::get_required<double>(el, "c3_abs_MHz_um3", where));
    ch.branching = io::get_required<double>(el, "branching", where);
    ch.gamma_np = mhz(io::get_required<double>(el, "gamma_np_MHz", where));
    try {
      ch.validate();
    } catch (const std::domain_error& e) {
      throw io::ParseError(where + ": " + e.what());
    }
    out.push_back(std::move(ch));
  }
  return out;
}

inline std::vector<ContaminantChannel> load_channels(const std::filesystem::path& path) {
  return parse_channels(io::read_file(path), path.string());
}

inline std::string channels_to_json(const std::vector<ContaminantChannel>& channels) {
  io::json arr = io::json::array();
  for (const auto& ch : channels) {
    arr.push_back({{"label", ch.label},
                   {"c3_abs_MHz_um3", to_mhz(ch.c3_abs)},
                   {"branching", ch.branching},
                   {"gamma_np_MHz", to_mhz(ch.gamma_np)}});
  }
  return arr.dump(2);
}

}  // namespace rydberg
