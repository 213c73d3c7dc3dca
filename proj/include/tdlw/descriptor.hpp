#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tdlw/model.hpp"
#include "tdlw/types.hpp"

namespace tdlw {

/// Parsed system descriptor. The text format is line oriented:
///
///   # comment
///   name: oscillator
///   order: 2
///   h: 0.2
///   A: [[0, 1], [-1, 0.1]]
///   A_d: [[0, 0], [0, 0]]
///   B: [0, 1]
///
/// Values are JSON scalars or arrays and may continue over several lines
/// until their brackets balance. The delayed term is either a full matrix
/// `A_d` or a rank-one pair `b`, `c` (meaning A_d = b c^T); `B` optionally
/// names a scalar input column for controller design.
struct Descriptor {
  std::string name;
  int order = 0;
  double h = 0.0;
  std::optional<Mat> A;
  std::optional<Mat> Ad;
  std::optional<Vec> b;
  std::optional<Vec> c;
  std::optional<Vec> B;
};

namespace detail {

inline Vec parse_vector_json(const nlohmann::json& j, const std::string& key,
                             int line) {
  if (!j.is_array() || j.empty() || !j[0].is_number())
    throw ParseError(key + ": expected a flat numeric array", line);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ParseError(key + ": expected a flat numeric array", line);
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Mat parse_matrix_json(const nlohmann::json& j, const std::string& key,
                             int line) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError(key + ": expected an array of rows", line);
  const size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(j.size()),
        static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError(key + ": rows must have equal length", line);
    for (size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number())
        throw ParseError(key + ": matrix entries must be numbers", line);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j[i][k].get<double>();
    }
  }
  return m;
}

inline int bracket_balance(const std::string& s) {
  int depth = 0;
  for (char ch : s) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
  }
  return depth;
}

inline std::string strip(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r\n");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r\n");
  return s.substr(from, to - from + 1);
}

}  // namespace detail

inline Descriptor parse_descriptor(std::istream& in) {
  Descriptor d;
  std::string line;
  int line_no = 0;
  bool saw_order = false, saw_h = false;
  while (std::getline(in, line)) {
    ++line_no;
    const int key_line = line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::strip(line);
    if (stripped.empty()) continue;

    const auto colon = stripped.find(':');
    if (colon == std::string::npos)
      throw ParseError("expected `key: value`", key_line);
    const std::string key = detail::strip(stripped.substr(0, colon));
    std::string value = detail::strip(stripped.substr(colon + 1));
    if (key.empty()) throw ParseError("missing key before `:`", key_line);

    // Bracketed values continue until their brackets balance.
    int depth = detail::bracket_balance(value);
    while (depth > 0 && std::getline(in, line)) {
      ++line_no;
      const auto h2 = line.find('#');
      if (h2 != std::string::npos) line.erase(h2);
      value += " " + detail::strip(line);
      depth = detail::bracket_balance(value);
    }
    if (depth != 0) throw ParseError(key + ": unbalanced brackets", key_line);
    if (value.empty()) throw ParseError(key + ": missing value", key_line);

    try {
      if (key == "name") {
        d.name = value;
      } else if (key == "order") {
        const nlohmann::json j = nlohmann::json::parse(value);
        if (!j.is_number_integer() || j.get<int>() <= 0)
          throw ParseError("order: expected a positive integer", key_line);
        d.order = j.get<int>();
        saw_order = true;
      } else if (key == "h") {
        const nlohmann::json j = nlohmann::json::parse(value);
        if (!j.is_number() || !(j.get<double>() > 0.0))
          throw ParseError("h: expected a positive number", key_line);
        d.h = j.get<double>();
        saw_h = true;
      } else if (key == "A") {
        d.A = detail::parse_matrix_json(nlohmann::json::parse(value), key,
                                        key_line);
      } else if (key == "A_d") {
        d.Ad = detail::parse_matrix_json(nlohmann::json::parse(value), key,
                                         key_line);
      } else if (key == "b") {
        d.b = detail::parse_vector_json(nlohmann::json::parse(value), key,
                                        key_line);
      } else if (key == "c") {
        d.c = detail::parse_vector_json(nlohmann::json::parse(value), key,
                                        key_line);
      } else if (key == "B") {
        d.B = detail::parse_vector_json(nlohmann::json::parse(value), key,
                                        key_line);
      } else {
        throw ParseError("unknown key `" + key + "`", key_line);
      }
    } catch (const nlohmann::json::exception&) {
      throw ParseError(key + ": malformed value", key_line);
    }
  }

  if (!saw_order) throw ParseError("missing required key `order`", line_no);
  if (!saw_h) throw ParseError("missing required key `h`", line_no);
  if (!d.A) throw ParseError("missing required key `A`", line_no);
  if (d.Ad && (d.b || d.c))
    throw ParseError("give either A_d or the pair b, c, not both", line_no);
  if (static_cast<bool>(d.b) != static_cast<bool>(d.c))
    throw ParseError("b and c must be given together", line_no);

  const auto n = static_cast<Eigen::Index>(d.order);
  auto check_mat = [&](const std::optional<Mat>& m, const char* key) {
    if (m && (m->rows() != n || m->cols() != n))
      throw ParseError(std::string(key) + ": expected " +
                           std::to_string(d.order) + "x" +
                           std::to_string(d.order) + " entries",
                       line_no);
  };
  auto check_vec = [&](const std::optional<Vec>& v, const char* key) {
    if (v && v->size() != n)
      throw ParseError(std::string(key) + ": expected " +
                           std::to_string(d.order) + " entries",
                       line_no);
  };
  check_mat(d.A, "A");
  check_mat(d.Ad, "A_d");
  check_vec(d.b, "b");
  check_vec(d.c, "c");
  check_vec(d.B, "B");
  return d;
}

inline Descriptor load_descriptor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open descriptor file " + path, 0);
  return parse_descriptor(in);
}

/// Inverse of parse_descriptor: text that re-parses to the same descriptor.
inline std::string format_descriptor(const Descriptor& d) {
  std::ostringstream out;
  const auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const auto vec = [&](const Vec& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i)
      s += (i ? ", " : "") + num(v(i));
    return s + "]";
  };
  const auto mat = [&](const Mat& m) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      s += (i ? ", " : "") + vec(m.row(i).transpose());
    return s + "]";
  };
  if (!d.name.empty()) out << "name: " << d.name << "\n";
  out << "order: " << d.order << "\n";
  out << "h: " << num(d.h) << "\n";
  if (d.A) out << "A: " << mat(*d.A) << "\n";
  if (d.Ad) out << "A_d: " << mat(*d.Ad) << "\n";
  if (d.b) out << "b: " << vec(*d.b) << "\n";
  if (d.c) out << "c: " << vec(*d.c) << "\n";
  if (d.B) out << "B: " << vec(*d.B) << "\n";
  return out.str();
}

/// Builds the delay system a descriptor denotes. A missing delayed part
/// means A_d = 0.
inline TimeDelaySystem descriptor_system(const Descriptor& d) {
  if (!d.A) throw ParseError("descriptor lacks A", 0);
  Mat ad;
  if (d.Ad)
    ad = *d.Ad;
  else if (d.b && d.c)
    ad = *d.b * d.c->transpose();
  else
    ad = Mat::Zero(d.A->rows(), d.A->cols());
  return TimeDelaySystem(*d.A, ad, d.h);
}

}  // namespace tdlw
