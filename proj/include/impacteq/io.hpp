#pragma once

// Locale-independent text output: numbers via std::to_chars, a JSON emitter
// that prints every double with 17 significant digits, and a CSV writer.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "impacteq/errors.hpp"

namespace impacteq::io {

using json = nlohmann::ordered_json;

/// 17 significant digits
/// always, '.' as the separator, no locale lookups.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void escape(std::string& out, std::string_view s) {
  out += '"';
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch));
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

inline void emit(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case json::value_t::number_float: {
      const double x = j.get<double>();
      // JSON has no NaN/Inf.
      out += std::isfinite(x) ? format_number(x) : "null";
      break;
    }
    case json::value_t::string: escape(out, j.get_ref<const std::string&>()); break;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Short numeric rows stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && (e.is_number() || (e.is_array() && e.size() <= 4));
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) newline(depth + 1);
        emit(out, e, indent, depth + 1);
        first = false;
      }
      if (!flat) newline(depth);
      out += ']';
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        newline(depth + 1);
        escape(out, key);
        out += ": ";
        emit(out, value, indent, depth + 1);
        first = false;
      }
      newline(depth);
      out += '}';
      break;
    }
    default: out += "null";
  }
}

}  // namespace detail

inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::emit(out, j, indent, 0);
  out += '\n';
  return out;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw Error("write failed: " + path.string());
}

/// Row-wise CSV with a fixed header.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::initializer_list<double> row) { add_row(std::span<const double>(row.begin(), row.size())); }

  void add_row(std::span<const double> row) {
    if (row.size() != header_.size()) throw ContractViolation("csv: row width does not match header");
    rows_.emplace_back(row.begin(), row.end());
  }

  std::size_t rows() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (std::size_t c = 0; c < header_.size(); ++c) {
      if (c) out += ',';
      out += header_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += format_number(row[c]);
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const { write_text(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace impacteq::io
