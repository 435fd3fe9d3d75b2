#pragma once

#include <fmt/format.h>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "groundstate.hpp"

namespace dbec {

/// Minimal ordered JSON writer. Numbers are printed with 17 significant
/// digits and non-finite values become null; nlohmann would print the
/// shortest round-trip form instead.
class JsonWriter {
 public:
  JsonWriter& field(const std::string& key, double v) {
    return raw(key, std::isfinite(v) ? fmt::format("{:.17g}", v) : "null");
  }
  JsonWriter& field(const std::string& key, int v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, long v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, std::uint64_t v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonWriter& field(const std::string& key, const char* v) { return field(key, std::string(v)); }
  JsonWriter& field(const std::string& key, const std::string& v) {
    return raw(key, nlohmann::json(v).dump());
  }
  JsonWriter& field(const std::string& key, const JsonWriter& nested) { return raw(key, nested.str()); }
  JsonWriter& null(const std::string& key) { return raw(key, "null"); }
  JsonWriter& array(const std::string& key, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += (i ? "," : "") + (std::isfinite(v[i]) ? fmt::format("{:.17g}", v[i]) : std::string("null"));
    }
    return raw(key, s + "]");
  }
  JsonWriter& array(const std::string& key, const std::vector<std::string>& v) {
    return raw(key, nlohmann::json(v).dump());
  }
  JsonWriter& raw(const std::string& key, const std::string& text) {
    entries_.emplace_back(key, text);
    return *this;
  }

  std::string str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      s += (i ? "," : "") + nlohmann::json(entries_[i].first).dump() + ":" + entries_[i].second;
    }
    return s + "}";
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline JsonWriter report_json(const FunctionalReport& r) {
  JsonWriter w;
  w.field("mass", r.mass).field("A", r.A).field("B", r.B).field("C", r.C).field("E", r.E).field("Q", r.Q);
  return w;
}

inline JsonWriter grid_json(const Grid& g) {
  JsonWriter w;
  w.array("points", std::vector<double>{double(g.points(0)), double(g.points(1)), double(g.points(2))});
  w.array("half_length", std::vector<double>{g.half_length(0), g.half_length(1), g.half_length(2)});
  return w;
}

/// Result document of a ground-state run, including the three Pohozaev
/// defects (relative to A + C).
inline JsonWriter result_json(const GroundStateResult& r) {
  JsonWriter poh;
  poh.field("full", r.pohozaev.full)
      .field("beta_relation", r.pohozaev.beta_relation)
      .field("virial", r.pohozaev.virial);
  JsonWriter w;
  w.field("converged", r.converged)
      .field("gamma", r.gamma_estimate)
      .field("beta", r.beta)
      .field("beta_pohozaev", r.beta_estimate.pohozaev)
      .field("beta_rayleigh", r.beta_estimate.rayleigh)
      .field("residual", r.residual)
      .field("q_residual", std::abs(r.pohozaev.virial))
      .field("pohozaev", poh)
      .field("anisotropy", r.anisotropy)
      .field("iterations", r.iterations)
      .field("flow_iterations", r.flow_iterations)
      .field("report", report_json(r.report));
  return w;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline std::string iteration_csv(const std::vector<IterationRecord>& history) {
  std::string s = "iteration,E,Q,residual,mass\n";
  for (const auto& h : history) {
    s += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", h.iteration, h.E, h.Q, h.residual, h.mass);
  }
  return s;
}

inline std::string gamma_csv(const GammaCurve& curve) {
  std::string s = fmt::format("# threshold={:.17g}\n", curve.threshold);
  s += "c,gamma,beta,anisotropy,converged\n";
  auto num = [](double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : std::string("nan"); };
  for (const auto& r : curve.rows) {
    s += fmt::format("{},{},{},{},{}\n", num(r.c), num(r.gamma), num(r.beta), num(r.anisotropy),
                     r.converged ? 1 : 0);
  }
  return s;
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw StructuralError("field file truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace detail

/// Binary field: n0 n1 n2 as int64, L0 L1 L2 as float64, then re/im float64
/// pairs in row-major order. All little-endian.
inline void write_field(const std::filesystem::path& path, const Field& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const Grid& g = u.grid();
  for (int a = 0; a < 3; ++a) detail::put_le<std::int64_t>(out, g.points(a));
  for (int a = 0; a < 3; ++a) detail::put_le<double>(out, g.half_length(a));
  for (const auto& v : u.values()) {
    detail::put_le<double>(out, v.real());
    detail::put_le<double>(out, v.imag());
  }
  if (!out) throw Error("write failed for " + path.string());
}

inline Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::array<int, 3> n{};
  std::array<double, 3> half{};
  for (int a = 0; a < 3; ++a) {
    const auto v = detail::get_le<std::int64_t>(in);
    if (v < 8 || v > (1 << 14)) throw StructuralError("field file: bad grid dimension");
    n[a] = static_cast<int>(v);
  }
  for (int a = 0; a < 3; ++a) half[a] = detail::get_le<double>(in);
  Grid g(n, half);
  std::vector<complex> values(g.size());
  for (auto& v : values) {
    const double re = detail::get_le<double>(in);
    const double im = detail::get_le<double>(in);
    v = complex(re, im);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw StructuralError("field file: trailing bytes");
  return Field(std::move(g), std::move(values));
}

}  // namespace dbec
