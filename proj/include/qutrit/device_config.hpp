#pragma once

// Device description loaded from JSON. Files use the units of the published
// tables (GHz, us, kHz); everything is converted to SI angular units here.

#include "qutrit/noise.hpp"
#include "qutrit/readout.hpp"
#include "qutrit/schedule.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qutrit {

enum class DephasingSource { ramsey, echo };

struct QutritSpec {
  std::string name;
  double omega01 = 0.0, omega12 = 0.0, omega_readout = 0.0;  // rad/s
  double t1_10 = 0.0, t1_21 = 0.0;                           // s
  double t2star_01 = 0.0, t2star_12 = 0.0, t2star_02 = 0.0;  // s
  double t2echo_01 = 0.0, t2echo_12 = 0.0, t2echo_02 = 0.0;  // s
  std::array<double, 3> readout_fidelity{1.0, 1.0, 1.0};
  Confusion confusion = Confusion::Identity();
  std::optional<double> clifford_error_01, clifford_error_12;
};

struct DeviceConfig {
  int schema = 1;
  std::vector<QutritSpec> qutrits;
  Couplings couplings;
  DephasingSource dephasing_source = DephasingSource::ramsey;

  int size() const { return static_cast<int>(qutrits.size()); }

  const QutritSpec& qutrit(int site) const {
    if (site < 1 || site > size()) throw ValidationError("qutrit index " + std::to_string(site) + " out of range");
    return qutrits[static_cast<std::size_t>(site - 1)];
  }

  QutritLifetimes lifetimes(int site) const {
    const auto& q = qutrit(site);
    if (dephasing_source == DephasingSource::ramsey) return {q.t1_10, q.t1_21, q.t2star_01, q.t2star_12, q.t2star_02};
    return {q.t1_10, q.t1_21, q.t2echo_01, q.t2echo_12, q.t2echo_02};
  }

  std::vector<Confusion> confusions() const {
    std::vector<Confusion> out;
    for (const auto& q : qutrits) out.push_back(q.confusion);
    return out;
  }
};

/// Outcome of validating a config document: every violation with its field path.
struct ConfigReport {
  std::vector<std::string> errors;
  std::optional<DeviceConfig> config;
  bool ok() const { return errors.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& e : errors) s += (s.empty() ? "" : "; ") + e;
    return s;
  }
};

namespace detail {

inline constexpr double kGhz = 2.0 * kPi * 1e9;
inline constexpr double kUs = 1e-6;

class FieldReader {
 public:
  explicit FieldReader(std::vector<std::string>& errors) : errors_(errors) {}

  /// Required positive number at obj[key]; returns value times `unit`.
  double positive(const nlohmann::json& obj, const std::string& path, const std::string& key, double unit) {
    const auto v = number(obj, path, key);
    if (!v) return 0.0;
    if (!(*v > 0.0)) {
      errors_.push_back(path + "." + key + ": must be > 0 (got " + fmt(*v) + ")");
      return 0.0;
    }
    return *v * unit;
  }

  std::optional<double> number(const nlohmann::json& obj, const std::string& path, const std::string& key, bool required = true) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
      if (required) errors_.push_back(path + "." + key + ": missing");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      errors_.push_back(path + "." + key + ": not a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      errors_.push_back(path + "." + key + ": not finite");
      return std::nullopt;
    }
    return d;
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

 private:
  std::vector<std::string>& errors_;
};

}  // namespace detail

inline ConfigReport parse_device_config(const nlohmann::json& doc) {
  ConfigReport rep;
  auto& err = rep.errors;
  detail::FieldReader rd(err);
  if (!doc.is_object()) {
    err.push_back("$: document must be a JSON object");
    return rep;
  }
  DeviceConfig cfg;
  if (!doc.contains("schema") || !doc.at("schema").is_number_integer() || doc.at("schema").get<int>() != 1)
    err.push_back("$.schema: must be the integer 1");

  if (doc.contains("dephasing_source")) {
    const auto& d = doc.at("dephasing_source");
    if (d == "ramsey") cfg.dephasing_source = DephasingSource::ramsey;
    else if (d == "echo") cfg.dephasing_source = DephasingSource::echo;
    else err.push_back("$.dephasing_source: must be \"ramsey\" or \"echo\"");
  }

  if (!doc.contains("qutrits") || !doc.at("qutrits").is_array() || doc.at("qutrits").empty()) {
    err.push_back("$.qutrits: missing or empty array");
  } else {
    const auto& qs = doc.at("qutrits");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const std::string path = "$.qutrits[" + std::to_string(i) + "]";
      const auto& q = qs[i];
      if (!q.is_object()) {
        err.push_back(path + ": must be an object");
        continue;
      }
      QutritSpec s;
      s.name = q.value("name", "Q" + std::to_string(i + 1));
      s.omega01 = rd.positive(q, path, "omega01_ghz", detail::kGhz);
      s.omega12 = rd.positive(q, path, "omega12_ghz", detail::kGhz);
      s.omega_readout = rd.positive(q, path, "readout_ghz", detail::kGhz);
      s.t1_10 = rd.positive(q, path, "t1_10_us", detail::kUs);
      s.t1_21 = rd.positive(q, path, "t1_21_us", detail::kUs);
      s.t2star_01 = rd.positive(q, path, "t2star_01_us", detail::kUs);
      s.t2star_12 = rd.positive(q, path, "t2star_12_us", detail::kUs);
      s.t2star_02 = rd.positive(q, path, "t2star_02_us", detail::kUs);
      s.t2echo_01 = rd.positive(q, path, "t2echo_01_us", detail::kUs);
      s.t2echo_12 = rd.positive(q, path, "t2echo_12_us", detail::kUs);
      s.t2echo_02 = rd.positive(q, path, "t2echo_02_us", detail::kUs);
      s.clifford_error_01 = rd.number(q, path, "clifford_error_01", false);
      s.clifford_error_12 = rd.number(q, path, "clifford_error_12", false);

      bool fid_ok = false;
      if (!q.contains("readout_fidelity") || !q.at("readout_fidelity").is_array() || q.at("readout_fidelity").size() != 3) {
        err.push_back(path + ".readout_fidelity: must be an array of three numbers");
      } else {
        fid_ok = true;
        for (std::size_t k = 0; k < 3; ++k) {
          const auto& v = q.at("readout_fidelity")[k];
          if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
            err.push_back(path + ".readout_fidelity[" + std::to_string(k) + "]: must be a number in [0, 1]");
            fid_ok = false;
          } else {
            s.readout_fidelity[k] = v.get<double>();
          }
        }
      }
      if (q.contains("confusion") && !q.at("confusion").is_null()) {
        const auto& c = q.at("confusion");
        bool shape = c.is_array() && c.size() == 3;
        for (std::size_t r = 0; shape && r < 3; ++r) {
          shape = c[r].is_array() && c[r].size() == 3;
          for (std::size_t col = 0; shape && col < 3; ++col) shape = c[r][col].is_number();
        }
        if (!shape) {
          err.push_back(path + ".confusion: must be a 3x3 array of numbers (rows = read outcome)");
        } else {
          for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) s.confusion(r, col) = c[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)].get<double>();
          try {
            validate_confusion(s.confusion);
          } catch (const ValidationError& e) {
            err.push_back(path + ".confusion: " + e.what());
          }
        }
      } else if (fid_ok) {
        s.confusion = confusion_from_fidelities(s.readout_fidelity);
      }
      cfg.qutrits.push_back(s);
    }
  }

  const int n = static_cast<int>(cfg.qutrits.size());
  std::vector<bool> seen(static_cast<std::size_t>(std::max(n, 1)), false);
  if (!doc.contains("couplings") || !doc.at("couplings").is_array()) {
    err.push_back("$.couplings: missing array");
  } else {
    const auto& cs = doc.at("couplings");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string path = "$.couplings[" + std::to_string(i) + "]";
      const auto& c = cs[i];
      if (!c.is_object() || !c.contains("pair") || !c.at("pair").is_array() || c.at("pair").size() != 2 ||
          !c.at("pair")[0].is_number_integer() || !c.at("pair")[1].is_number_integer()) {
        err.push_back(path + ".pair: must be two integer qutrit indices");
        continue;
      }
      const int a = c.at("pair")[0].get<int>(), b = c.at("pair")[1].get<int>();
      if (a < 1 || b < 1 || a > n || b > n || a == b) {
        err.push_back(path + ".pair: (" + std::to_string(a) + "," + std::to_string(b) + ") is not a pair of known qutrits");
        continue;
      }
      const auto k11 = rd.number(c, path, "alpha11_khz");
      const auto k12 = rd.number(c, path, "alpha12_khz");
      const auto k21 = rd.number(c, path, "alpha21_khz");
      const auto k22 = rd.number(c, path, "alpha22_khz");
      if (!k11 || !k12 || !k21 || !k22) continue;
      if (cfg.couplings.has(a, b)) {
        err.push_back(path + ".pair: duplicate coupling for (" + std::to_string(a) + "," + std::to_string(b) + ")");
        continue;
      }
      cfg.couplings.set(a, b, CrossKerrCoeffs::from_khz(*k11, *k12, *k21, *k22));
      if (std::abs(a - b) == 1) seen[static_cast<std::size_t>(std::min(a, b) - 1)] = true;
    }
  }
  for (int i = 1; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i - 1)])
      err.push_back("$.couplings: missing coefficients for adjacent pair (" + std::to_string(i) + "," + std::to_string(i + 1) + ")");

  if (err.empty()) rep.config = std::move(cfg);
  return rep;
}

inline ConfigReport validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) return ConfigReport{{"cannot open config file '" + path + "'"}, std::nullopt};
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    return ConfigReport{{"parse error in '" + path + "': " + e.what()}, std::nullopt};
  }
  return parse_device_config(doc);
}

/// Parsed and validated config; throws ValidationError listing every violation.
inline DeviceConfig load_device_config(const std::string& path) {
  auto rep = validate_config(path);
  if (!rep.ok()) throw ValidationError(rep.summary());
  return std::move(*rep.config);
}

/// Config path from the environment (QUTRIT_DEVICE_CONFIG), if set.
inline std::optional<std::string> default_config_path() {
  if (const char* p = std::getenv("QUTRIT_DEVICE_CONFIG"); p != nullptr && *p != '\0') return std::string(p);
  return std::nullopt;
}

}  // namespace qutrit
