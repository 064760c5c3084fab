#pragma once

// JSON encodings shared by the tools: complex matrices as row-major nested
// arrays of [re, im] pairs, and pulse schedules.

#include "qutrit/core.hpp"
#include "qutrit/rotations.hpp"
#include "qutrit/schedule.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace qutrit {

using Json = nlohmann::ordered_json;

/// Rounds tiny magnitudes to exact zero so -0.0 and 1e-17 noise do not leak
/// into serialized output.
inline double clean_number(double v, double tol = 1e-14) { return std::abs(v) < tol ? 0.0 : v; }

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({clean_number(m(i, j).real()), clean_number(m(i, j).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class J>
Matrix matrix_from_json(const J& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError("matrix must be a non-empty array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = static_cast<Eigen::Index>(j[0].size());
  Matrix m(r, c);
  for (Eigen::Index a = 0; a < r; ++a) {
    const auto& row = j[static_cast<std::size_t>(a)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw ValidationError("matrix rows have unequal length");
    for (Eigen::Index b = 0; b < c; ++b) {
      const auto& e = row[static_cast<std::size_t>(b)];
      if (e.is_number()) {
        m(a, b) = e.template get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(a, b) = cplx(e[0].template get<double>(), e[1].template get<double>());
      } else {
        throw ValidationError("matrix entry must be a number or [re, im]");
      }
    }
  }
  return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(clean_number(v(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Schedules

namespace detail {

inline Json pairs_to_json(const std::vector<std::pair<int, int>>& ps) {
  Json out = Json::array();
  for (const auto& [a, b] : ps) out.push_back(Json::array({a, b}));
  return out;
}

template <class J>
std::vector<std::pair<int, int>> pairs_from_json(const J& j, const std::string& where) {
  std::vector<std::pair<int, int>> out;
  if (!j.is_array()) throw ValidationError(where + ": must be an array of [i, j] pairs");
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      throw ValidationError(where + ": must be an array of [i, j] pairs");
    out.emplace_back(p[0].template get<int>(), p[1].template get<int>());
  }
  return out;
}

}  // namespace detail

/// {"sites": n, "total_ns": T, "items": [...]}; pulse angles and phases in radians.
inline Json schedule_to_json(const PulseSchedule& s) {
  Json items = Json::array();
  for (const auto& item : s.items) {
    std::visit(
        [&](const auto& it) {
          using T = std::decay_t<decltype(it)>;
          if constexpr (std::is_same_v<T, Evolve>) {
            items.push_back(Json{{"type", "evolve"}, {"pairs", detail::pairs_to_json(it.pairs)}, {"duration_ns", it.duration_ns}});
          } else if constexpr (std::is_same_v<T, LocalPulse>) {
            if (const auto* r = std::get_if<SubspaceRotation>(&it.gate)) {
              items.push_back(Json{{"type", "pulse"},
                                   {"site", it.site},
                                   {"subspace", std::string(to_string(r->subspace))},
                                   {"axis", std::string(to_string(r->axis))},
                                   {"angle", clean_number(r->angle)},
                                   {"phase", clean_number(r->phase)}});
            } else {
              items.push_back(Json{{"type", "pulse"}, {"site", it.site}, {"gate", std::string(to_string(std::get<Permutation>(it.gate)))}});
            }
          } else {
            items.push_back(Json{{"type", "cpi"},
                                 {"pairs", detail::pairs_to_json(it.pairs)},
                                 {"coupled", detail::pairs_to_json(it.coupled)},
                                 {"duration_ns", it.duration_ns}});
          }
        },
        item);
  }
  return Json{{"sites", s.sites}, {"total_ns", s.total_duration_ns()}, {"items", std::move(items)}};
}

template <class J>
PulseSchedule schedule_from_json(const J& j) {
  if (!j.is_object() || !j.contains("sites") || !j.at("sites").is_number_integer()) throw ValidationError("schedule: missing integer 'sites'");
  PulseSchedule s;
  s.sites = j.at("sites").template get<int>();
  if (s.sites < 1) throw ValidationError("schedule: 'sites' must be positive");
  if (!j.contains("items") || !j.at("items").is_array()) throw ValidationError("schedule: missing 'items' array");
  std::size_t k = 0;
  for (const auto& it : j.at("items")) {
    const std::string where = "schedule.items[" + std::to_string(k++) + "]";
    const std::string type = it.value("type", "");
    if (type == "evolve") {
      s.items.push_back(Evolve{detail::pairs_from_json(it.at("pairs"), where + ".pairs"), it.at("duration_ns").template get<double>()});
    } else if (type == "pulse") {
      const int site = it.at("site").template get<int>();
      if (it.contains("gate")) {
        s.items.push_back(LocalPulse{site, parse_permutation(it.at("gate").template get<std::string>())});
      } else {
        SubspaceRotation r{parse_subspace(it.at("subspace").template get<std::string>()), parse_axis(it.at("axis").template get<std::string>()),
                           it.at("angle").template get<double>(), it.value("phase", 0.0)};
        s.items.push_back(LocalPulse{site, r});
      }
    } else if (type == "cpi") {
      CondPi c;
      c.pairs = detail::pairs_from_json(it.at("pairs"), where + ".pairs");
      if (it.contains("coupled")) c.coupled = detail::pairs_from_json(it.at("coupled"), where + ".coupled");
      c.duration_ns = it.value("duration_ns", c.duration_ns);
      s.items.push_back(std::move(c));
    } else {
      throw ValidationError(where + ": unknown item type '" + type + "'");
    }
  }
  return s;
}

}  // namespace qutrit
