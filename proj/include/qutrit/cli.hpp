#pragma once

// Command-line workbench: runs one experiment per invocation and writes a
// versioned JSON envelope (or a CSV for `plot`).

#include "qutrit/device_config.hpp"
#include "qutrit/scrambling.hpp"
#include "qutrit/serialization.hpp"
#include "qutrit/synthesis.hpp"
#include "qutrit/teleport.hpp"
#include "qutrit/tomography.hpp"
#include "qutrit/transmon.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qutrit::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSchema = 1;

inline const std::vector<std::string>& envelope_commands() {
  static const std::vector<std::string> c{"epr",           "scramble-qpt", "teleport", "otoc", "synth-cphase",
                                          "decouple-demo", "transmon-calc", "validate"};
  return c;
}

// ---------------------------------------------------------------------------
// Envelope

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("envelope: " + what);
}

inline void require_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  for (const char* k : keys) require(obj.contains(k), where + "." + k + " missing");
}

inline void check_payload(const std::string& command, const Json& p) {
  if (command == "teleport") {
    require_keys(p, "payload", {"scrambler", "mode", "noise_scale", "timing", "states", "F_avg"});
    require(p["states"].is_array(), "payload.states must be an array");
    for (std::size_t i = 0; i < p["states"].size(); ++i) {
      const auto& s = p["states"][i];
      const std::string w = "payload.states[" + std::to_string(i) + "]";
      require_keys(s, w, {"label", "herald_prob", "fidelity", "gell_mann"});
      require(s["label"].is_string(), w + ".label must be a string");
      require(s["fidelity"].is_number(), w + ".fidelity must be a number");
      require(s["gell_mann"].is_array() && s["gell_mann"].size() == 9, w + ".gell_mann must hold 9 numbers");
    }
    require(p["F_avg"].is_number(), "payload.F_avg must be a number");
  } else if (command == "scramble-qpt") {
    require_keys(p, "payload", {"unitary", "mode", "ptm", "labels", "restriction", "fidelity"});
    require_keys(p["restriction"], "payload.restriction", {"rows", "cols", "modulus"});
    const auto& r = p["restriction"];
    require(r["modulus"].is_array() && r["modulus"].size() == r["rows"].size(), "payload.restriction.modulus has the wrong row count");
    for (const auto& row : r["modulus"]) require(row.is_array() && row.size() == r["cols"].size(), "payload.restriction.modulus has the wrong column count");
    (void)matrix_from_json(p["ptm"]);
  } else if (command == "otoc") {
    require_keys(p, "payload", {"unitary", "average_otoc", "clifford"});
  } else if (command == "synth-cphase") {
    require_keys(p, "payload", {"pair", "method", "total_ns", "schedule"});
    (void)schedule_from_json(p["schedule"]);
  } else if (command == "epr") {
    require_keys(p, "payload", {"standalone", "simultaneous", "schedule"});
    (void)schedule_from_json(p["schedule"]);
  } else if (command == "decouple-demo") {
    require_keys(p, "payload", {"mode", "duration_ns", "schmidt_rank", "control_schmidt_rank", "schedule"});
    (void)schedule_from_json(p["schedule"]);
  } else if (command == "transmon-calc") {
    require_keys(p, "payload", {"ej_over_ec", "epsilon", "dispersion_ratio", "relative_anharmonicity"});
  } else if (command == "validate") {
    require_keys(p, "payload", {"path", "valid", "errors"});
  }
}

}  // namespace detail

/// Throws ValidationError naming the first schema violation.
inline void validate_envelope(const Json& e) {
  using detail::require;
  require(e.is_object(), "document must be an object");
  detail::require_keys(e, "$", {"schema", "toolkit_version", "command", "request", "wall_clock_s", "payload"});
  require(e["schema"].is_number_integer() && e["schema"].get<int>() == kSchema, "unsupported schema (expected 1)");
  require(e["toolkit_version"].is_string(), "toolkit_version must be a string");
  require(e["command"].is_string(), "command must be a string");
  const auto cmd = e["command"].get<std::string>();
  const auto& known = envelope_commands();
  require(std::find(known.begin(), known.end(), cmd) != known.end(), "unknown command '" + cmd + "'");
  require(e["request"].is_object(), "request must be an object");
  require(e["wall_clock_s"].is_number() && e["wall_clock_s"].get<double>() >= 0.0, "wall_clock_s must be a nonnegative number");
  require(e["payload"].is_object(), "payload must be an object");
  detail::check_payload(cmd, e["payload"]);
}

struct ResultEnvelope {
  std::string command;
  Json request = Json::object();
  std::string version = kToolkitVersion;
  double wall_clock_s = 0.0;
  Json payload = Json::object();

  Json to_json() const {
    Json j;
    j["schema"] = kSchema;
    j["toolkit_version"] = version;
    j["command"] = command;
    j["request"] = request;
    j["wall_clock_s"] = wall_clock_s;
    j["payload"] = payload;
    return j;
  }

  static ResultEnvelope from_json(const Json& j) {
    validate_envelope(j);
    ResultEnvelope e;
    e.command = j["command"].get<std::string>();
    e.request = j["request"];
    e.version = j["toolkit_version"].get<std::string>();
    e.wall_clock_s = j["wall_clock_s"].get<double>();
    e.payload = j["payload"];
    return e;
  }
};

inline ResultEnvelope load_envelope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("parse error in '" + path + "': " + ex.what());
  }
  return ResultEnvelope::from_json(j);
}

/// Write to a sibling temp file, then rename over the target.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("output path not writable: '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ValidationError("failed writing '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ValidationError("output path not writable: '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF records, fields quoted when they contain , " CR or LF)

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
  return out + "\r\n";
}

enum class PlotKind { fig5b_bars, fig5c_gellmann, fig3_ptm };

inline PlotKind parse_plot_kind(std::string_view s) {
  if (s == "fig5b-bars") return PlotKind::fig5b_bars;
  if (s == "fig5c-gellmann") return PlotKind::fig5c_gellmann;
  if (s == "fig3-ptm") return PlotKind::fig3_ptm;
  throw ValidationError("unknown plot kind '" + std::string(s) + "'");
}

inline std::string emit_plot_data(const ResultEnvelope& env, PlotKind kind) {
  const Json& p = env.payload;
  std::string out;
  if (kind == PlotKind::fig3_ptm) {
    if (env.command != "scramble-qpt") throw ValidationError("fig3-ptm needs a scramble-qpt envelope, got '" + env.command + "'");
    const auto& r = p["restriction"];
    out += csv_row({"row_pauli", "col_pauli", "modulus"});
    for (std::size_t a = 0; a < r["rows"].size(); ++a)
      for (std::size_t b = 0; b < r["cols"].size(); ++b)
        out += csv_row({r["rows"][a].get<std::string>(), r["cols"][b].get<std::string>(), csv_number(r["modulus"][a][b].get<double>())});
    return out;
  }
  if (env.command != "teleport") throw ValidationError("fig5 plots need a teleport envelope, got '" + env.command + "'");
  if (kind == PlotKind::fig5b_bars) {
    out += csv_row({"state", "F_psi"});
    for (const auto& s : p["states"]) out += csv_row({s["label"].get<std::string>(), csv_number(s["fidelity"].get<double>())});
  } else {
    out += csv_row({"state", "lambda", "coefficient"});
    for (const auto& s : p["states"])
      for (std::size_t k = 0; k < 9; ++k)
        out += csv_row({s["label"].get<std::string>(), std::to_string(k), csv_number(s["gell_mann"][k].get<double>())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct Request {
  std::string command;
  std::string config;
  std::uint64_t seed = 0;
  bool exact = false;
  std::optional<std::uint64_t> shots;
  double noise_scale = 0.0;
  std::string output;

  std::string scrambler = "us";
  std::string unitary = "us";
  std::string unitary_file;
  std::string pair = "q1q2";
  std::string method = "four";
  std::string mode = "idle";
  std::optional<double> duration_ns;
  double ratio = 73.0;
  double ec = 1.0;
  bool attribute = false;
  std::string input;
  std::string kind;

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["config"] = config.empty() ? Json(nullptr) : Json(config);
    j["seed"] = seed;
    j["shots"] = shots ? Json(*shots) : Json(nullptr);
    j["exact"] = !shots;
    j["noise_scale"] = noise_scale;
    j["output"] = output.empty() ? Json(nullptr) : Json(output);
    if (command == "teleport") {
      j["scrambler"] = scrambler;
      j["attribute"] = attribute;
    }
    if (command == "scramble-qpt" || command == "otoc") j["unitary"] = unitary_file.empty() ? unitary : "file:" + unitary_file;
    if (command == "synth-cphase") {
      j["pair"] = pair;
      j["method"] = method;
    }
    if (command == "decouple-demo") {
      j["mode"] = mode;
      j["pair"] = pair;
      j["duration_ns"] = duration_ns ? Json(*duration_ns) : Json(nullptr);
    }
    if (command == "transmon-calc") {
      j["ratio"] = ratio;
      j["ec"] = ec;
    }
    return j;
  }
};

namespace detail {

inline std::string config_path(const Request& r) {
  if (!r.config.empty()) return r.config;
  if (auto p = default_config_path()) return *p;
  return {};
}

inline DeviceConfig require_config(const Request& r) {
  const auto path = config_path(r);
  if (path.empty()) throw ValidationError(r.command + " needs --config (or QUTRIT_DEVICE_CONFIG)");
  return load_device_config(path);
}

inline std::optional<DeviceConfig> optional_config(const Request& r) {
  const auto path = config_path(r);
  if (path.empty()) return std::nullopt;
  return load_device_config(path);
}

inline void check_noise_scale(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("--noise-scale must be a finite nonnegative number");
}

inline std::pair<int, int> parse_pair(const std::string& s) {
  static const std::vector<std::string> ok{"q1q2", "q2q3", "q3q4", "q4q5"};
  for (std::size_t i = 0; i < ok.size(); ++i)
    if (s == ok[i]) return {static_cast<int>(i) + 1, static_cast<int>(i) + 2};
  throw ValidationError("unknown pair '" + s + "' (expected q1q2, q2q3, q3q4 or q4q5)");
}

inline CrossKerrCoeffs pair_coeffs(const DeviceConfig& cfg, int a, int b) {
  if (!cfg.couplings.has(a, b))
    throw ValidationError("config has no coupling for pair (" + std::to_string(a) + "," + std::to_string(b) + ")");
  return cfg.couplings.get(a, b);
}

/// Named two-qutrit unitaries, plus how many CSUM-length windows each costs.
inline std::pair<Matrix, int> named_unitary(const std::string& name) {
  if (name == "us") return {scrambler_unitary(), 2};
  if (name == "csum") return {csum_unitary(), 1};
  if (name == "identity") return {Matrix::Identity(9, 9), 2};
  if (name == "swap") return {swap_unitary(), 3};
  throw ValidationError("unknown unitary '" + name + "' (expected us, csum, identity or swap)");
}

inline Matrix unitary_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open unitary file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("parse error in '" + path + "': " + ex.what());
  }
  const Matrix u = matrix_from_json(j.is_object() && j.contains("matrix") ? j["matrix"] : j);
  if (u.rows() != 9 || u.cols() != 9 || !is_unitary(u, 1e-9)) throw ValidationError("'" + path + "' is not a 9x9 unitary");
  return u;
}

inline Json labels_json(const std::vector<PauliLabel>& ls) {
  Json j = Json::array();
  for (const auto& l : ls) j.push_back(l.str());
  return j;
}

inline Json gell_mann_json(const Matrix& rho) {
  Json j = Json::array();
  for (double c : gell_mann_coefficients(rho)) j.push_back(clean_number(c));
  return j;
}

// -- epr

inline Json cmd_epr(const Request& r) {
  const auto cfg = require_config(r);
  const PulseSchedule solo = epr_prep_schedule();
  const PulseSchedule dd = dd_epr_prep_schedule(cfg.couplings, true);
  const PulseSchedule bare = dd_epr_prep_schedule(cfg.couplings, false);
  auto pairs = [&](const PulseSchedule& s) {
    Json j;
    j["q2q3"] = prepared_pair_fidelity(s, cfg.couplings, 2, 3);
    j["q4q5"] = prepared_pair_fidelity(s, cfg.couplings, 4, 5);
    j["total_ns"] = s.total_duration_ns();
    return j;
  };
  Json p;
  p["standalone"] = {{"fidelity", prepared_pair_fidelity(solo, Couplings{}, 1, 2)}, {"total_ns", solo.total_duration_ns()}};
  p["simultaneous"] = {{"dd", pairs(dd)}, {"no_dd", pairs(bare)}};
  p["schedule"] = schedule_to_json(dd);
  return p;
}

// -- scramble-qpt

inline Json cmd_scramble_qpt(const Request& r) {
  check_noise_scale(r.noise_scale);
  const auto cfg = optional_config(r);
  if (r.noise_scale > 0.0 && !cfg) throw ValidationError("--noise-scale > 0 needs a device config");
  Matrix u;
  int windows = 2;
  if (!r.unitary_file.empty()) {
    u = unitary_from_file(r.unitary_file);
  } else {
    std::tie(u, windows) = named_unitary(r.unitary);
  }

  double duration_ns = 0.0;
  if (cfg) duration_ns = windows * solve_four_segment(pair_coeffs(*cfg, 1, 2), cphase_targets()).total_ns();

  const bool noisy = r.noise_scale > 0.0;
  const Register reg{3, 2};
  std::vector<QuantumChannel> idle;
  if (noisy)
    for (int site = 1; site <= 2; ++site)
      idle.push_back(qutrit::detail::site_noise(cfg->lifetimes(site), 0.5 * duration_ns * 1e-9 * r.noise_scale, NoiseToggles{}));
  const ChannelFn channel = [&](const Matrix& rho_in) {
    Matrix rho = rho_in;
    auto wait = [&]() {
      for (int site = 1; site <= static_cast<int>(idle.size()); ++site) {
        const int s[] = {site};
        apply_channel_in_place(idle[static_cast<std::size_t>(site - 1)], s, reg, rho);
      }
    };
    wait();
    rho = u * rho * u.adjoint();
    wait();
    return rho;
  };

  ProcessTomographyOptions opt;
  opt.shots = r.shots;
  opt.seed = r.seed;
  if (noisy) opt.confusions = {cfg->qutrit(1).confusion, cfg->qutrit(2).confusion};
  const ProcessMatrix pm = process_tomography(channel, 2, opt);
  const PtmRestriction res = ptm_restriction(pm);
  const FidelityReport f = process_fidelity(pm, u);

  Json p;
  p["unitary"] = r.unitary_file.empty() ? r.unitary : "file";
  p["mode"] = r.shots ? "shots" : "exact";
  p["noise_scale"] = r.noise_scale;
  p["duration_ns"] = duration_ns;
  std::vector<PauliLabel> all;
  for (std::size_t k = 0; k < 81; ++k) all.push_back(PauliLabel::from_index(k, 2));
  p["labels"] = labels_json(all);
  p["ptm"] = matrix_to_json(pm.ptm);
  Json mod = Json::array();
  for (Eigen::Index a = 0; a < res.block.rows(); ++a) {
    Json row = Json::array();
    for (Eigen::Index b = 0; b < res.block.cols(); ++b) row.push_back(clean_number(std::abs(res.block(a, b)), 1e-12));
    mod.push_back(std::move(row));
  }
  p["restriction"] = {{"rows", labels_json(res.rows)}, {"cols", labels_json(res.cols)}, {"modulus", std::move(mod)}};
  p["fidelity"] = {{"entanglement", f.entanglement}, {"average", f.average}};
  p["trace_preservation_error"] = pm.trace_preservation_error();
  return p;
}

// -- teleport

inline Json cmd_teleport(const Request& r) {
  check_noise_scale(r.noise_scale);
  const auto cfg = optional_config(r);
  if (r.noise_scale > 0.0 && !cfg) throw ValidationError("--noise-scale > 0 needs a device config");
  std::optional<TeleportNoise> noise;
  if (cfg) noise = TeleportNoise{*cfg, r.noise_scale, {}};
  const TeleportSetup s = TeleportSetup::make(parse_scrambler(r.scrambler), noise);

  std::optional<ShotOptions> shots;
  if (r.shots) shots = ShotOptions{*r.shots, r.seed};
  const auto outcomes = run_design_set(s, shots);
  const double f_avg = average_teleportation_fidelity(outcomes);

  Json p;
  p["scrambler"] = std::string(to_string(s.scrambler));
  p["mode"] = shots ? "shots" : "exact";
  p["noise_scale"] = r.noise_scale;
  p["timing"] = {{"epr_ns", s.timing.epr_ns}, {"scrambler_ns", s.timing.scrambler_ns}, {"unprep_ns", s.timing.unprep_ns}};
  Json states = Json::array();
  for (const auto& o : outcomes) {
    Json j;
    j["label"] = o.label;
    j["herald_prob"] = o.herald_prob;
    j["fidelity"] = o.fidelity;
    j["gell_mann"] = gell_mann_json(o.rho_out);
    j["rho_out"] = matrix_to_json(o.rho_out);
    states.push_back(std::move(j));
  }
  p["states"] = std::move(states);
  p["F_avg"] = f_avg;
  p["classical_limit"] = 0.5;
  p["otoc_bound"] = f_avg > 0.25 ? Json(otoc_bound_from_fidelity(std::min(f_avg, 1.0))) : Json(nullptr);

  // Attribution reruns the exact model three times; only when it explains something.
  const bool want = noise && r.noise_scale > 0.0 && (r.attribute || (!shots && f_avg <= 0.5));
  if (want) {
    TeleportSetup exact = s;
    const auto rep = attribute_shortfall(exact);
    Json iso;
    for (const auto& [k, v] : rep.isolated) iso[k] = v;
    p["shortfall"] = {{"f_avg_exact", rep.f_avg}, {"below_classical", rep.below_classical}, {"isolated", iso}, {"dominant", rep.dominant}};
  } else {
    p["shortfall"] = nullptr;
  }
  return p;
}

// -- otoc

inline Json cmd_otoc(const Request& r) {
  const Matrix u = r.unitary_file.empty() ? named_unitary(r.unitary).first : unitary_from_file(r.unitary_file);
  bool clifford = true;
  try {
    (void)clifford_conjugation_table(u);
  } catch (const NumericalError&) {
    clifford = false;
  }
  Json p;
  p["unitary"] = r.unitary_file.empty() ? r.unitary : "file";
  p["average_otoc"] = average_otoc(u);
  p["clifford"] = clifford;
  return p;
}

// -- synth-cphase

inline Json cmd_synth_cphase(const Request& r) {
  const auto cfg = require_config(r);
  const auto [a, b] = parse_pair(r.pair);
  const CrossKerrCoeffs c = pair_coeffs(cfg, a, b);
  Json p;
  p["pair"] = r.pair;
  p["method"] = r.method;
  if (r.method == "four") {
    const PhaseTargets want = cphase_targets();
    const FourSegmentTimes t = solve_four_segment(c, want);
    const PulseSchedule s = four_segment_schedule(t);
    const DiagonalPhaseReport rep = diagonal_phases(simulate(s, single_pair(c)));
    const double residual = phase_residual(rep.phases, want);
    if (residual > 1e-9 || rep.other_max > 1e-9 || rep.offdiag_max > 1e-9)
      throw NumericalError("synthesised schedule misses the controlled-phase target (residual " + std::to_string(residual) + ")");
    p["segments_ns"] = t.ns;
    p["branch"] = t.branch;
    p["total_ns"] = t.total_ns();
    p["phases"] = rep.phases;
    p["phase_residual"] = residual;
    p["schedule"] = schedule_to_json(s);
  } else if (r.method == "six") {
    const SixSegmentScan scan = scan_six_segment(c);
    p["segment_ns"] = scan.t_ns;
    p["total_ns"] = 6.0 * scan.t_ns;
    p["distance"] = scan.distance;
    p["orientation"] = std::string(to_string(scan.orientation));
    p["schedule"] = schedule_to_json(six_segment_schedule(scan.t_ns));
  } else {
    throw ValidationError("unknown method '" + r.method + "' (expected four or six)");
  }
  return p;
}

// -- decouple-demo

inline Json cmd_decouple(const Request& r) {
  const auto cfg = require_config(r);
  Json p;
  p["mode"] = r.mode;
  if (r.mode == "idle") {
    const double t = r.duration_ns.value_or(375.0);
    const auto [a, b] = parse_pair(r.pair);
    const CrossKerrCoeffs c = pair_coeffs(cfg, a, b);
    const PulseSchedule s = idle_decoupling_schedule(t);
    PulseSchedule bare{2, {}};
    bare.evolve({{1, 2}}, t);
    const Register reg{3, 2};
    p["pair"] = r.pair;
    p["duration_ns"] = t;
    p["cut"] = std::vector<int>{1};
    p["schmidt_rank"] = operator_schmidt_rank(simulate(s, single_pair(c)), {1}, reg);
    p["control_schmidt_rank"] = operator_schmidt_rank(simulate(bare, single_pair(c)), {1}, reg);
    p["phases"] = idle_decoupling_phases(c, t);
    p["schedule"] = schedule_to_json(s);
  } else if (r.mode == "parallel") {
    const double t = r.duration_ns.value_or(192.0);
    Couplings cpl;
    for (int i = 1; i <= 3; ++i) cpl.set(i, i + 1, pair_coeffs(cfg, i, i + 1));
    const PulseSchedule s = parallel_pair_schedule(t);
    const Register reg{3, 4};
    p["duration_ns"] = t;
    p["cut"] = std::vector<int>{1, 2};
    p["schmidt_rank"] = operator_schmidt_rank(simulate(s, cpl), {1, 2}, reg);
    p["control_schmidt_rank"] = operator_schmidt_rank(simulate(parallel_pair_schedule(t, ParallelDecoupling::none), cpl), {1, 2}, reg);
    p["schedule"] = schedule_to_json(s);
  } else {
    throw ValidationError("unknown mode '" + r.mode + "' (expected idle or parallel)");
  }
  return p;
}

// -- transmon-calc

inline Json cmd_transmon(const Request& r) {
  const TransmonParams tp = TransmonParams::from_ratio(r.ratio, r.ec);
  std::array<double, 3> eps{};
  for (int m = 0; m < 3; ++m) eps[static_cast<std::size_t>(m)] = charge_dispersion(m, tp);
  Json p;
  p["ej_over_ec"] = r.ratio;
  p["ec"] = r.ec;
  p["epsilon"] = eps;
  p["dispersion_ratio"] = eps[2] / eps[1];
  p["relative_anharmonicity"] = relative_anharmonicity(tp);
  return p;
}

// -- validate

inline Json cmd_validate(const Request& r, bool& valid) {
  const auto path = config_path(r);
  if (path.empty()) throw ValidationError("validate needs --config (or QUTRIT_DEVICE_CONFIG)");
  const ConfigReport rep = validate_config(path);
  valid = rep.ok();
  Json p;
  p["path"] = path;
  p["valid"] = valid;
  p["errors"] = rep.errors;
  if (rep.config) {
    p["qutrits"] = rep.config->size();
    Json pairs = Json::array();
    for (const auto& [a, b] : rep.config->couplings.pairs()) pairs.push_back({a, b});
    p["pairs"] = pairs;
  }
  return p;
}

inline void emit(const Request& r, const std::string& text, std::ostream& out) {
  if (r.output.empty()) out << text;
  else write_atomic(r.output, text);
}

}  // namespace detail

/// Payload for a parsed request, without the envelope. Exposed so callers can
/// check determinism without the wall-clock field.
inline Json run_payload(const Request& r, bool* valid_out = nullptr) {
  bool valid = true;
  Json p;
  if (r.command == "epr") p = detail::cmd_epr(r);
  else if (r.command == "scramble-qpt") p = detail::cmd_scramble_qpt(r);
  else if (r.command == "teleport") p = detail::cmd_teleport(r);
  else if (r.command == "otoc") p = detail::cmd_otoc(r);
  else if (r.command == "synth-cphase") p = detail::cmd_synth_cphase(r);
  else if (r.command == "decouple-demo") p = detail::cmd_decouple(r);
  else if (r.command == "transmon-calc") p = detail::cmd_transmon(r);
  else if (r.command == "validate") p = detail::cmd_validate(r, valid);
  else throw ValidationError("unknown command '" + r.command + "'");
  if (valid_out) *valid_out = valid;
  return p;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Qutrit scrambling and teleportation workbench", "qutrit_cli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);
  Request r;

  auto common = [&](CLI::App* sub, bool shots_flags, bool noise) {
    sub->add_option("--config", r.config, "Device config JSON (default: $QUTRIT_DEVICE_CONFIG)");
    sub->add_option("--output,-o", r.output, "Write result here (atomic); default stdout");
    if (shots_flags) {
      auto* ex = sub->add_flag("--exact", r.exact, "Exact expectation values (default)");
      auto* sh = sub->add_option("--shots", r.shots, "Shots per tomography setting")->check(CLI::PositiveNumber);
      ex->excludes(sh);
      sub->add_option("--seed", r.seed, "Seed for shot sampling");
    }
    if (noise) sub->add_option("--noise-scale", r.noise_scale, "Multiplier on every 1/T1 and 1/T2 (0 = noiseless)");
  };

  auto* epr = app.add_subcommand("epr", "Standalone and simultaneous EPR preparation fidelities");
  common(epr, false, false);

  auto* qpt = app.add_subcommand("scramble-qpt", "Process tomography of a two-qutrit gate on Q1/Q2");
  common(qpt, true, true);
  qpt->add_option("--unitary", r.unitary, "us, csum, identity or swap")->check(CLI::IsMember({"us", "csum", "identity", "swap"}));
  qpt->add_option("--unitary-file", r.unitary_file, "JSON 9x9 matrix instead of a named unitary");

  auto* tel = app.add_subcommand("teleport", "Five-qutrit scrambling-based teleportation of the 12 design states");
  common(tel, true, true);
  tel->add_option("--scrambler", r.scrambler, "us or identity")->check(CLI::IsMember({"us", "identity"}));
  tel->add_flag("--attribute", r.attribute, "Always report per-source shortfall attribution");

  auto* otoc = app.add_subcommand("otoc", "Averaged OTOC of a two-qutrit unitary");
  common(otoc, false, false);
  otoc->add_option("--unitary", r.unitary, "us, csum, identity or swap")->check(CLI::IsMember({"us", "csum", "identity", "swap"}));
  otoc->add_option("--unitary-file", r.unitary_file, "JSON 9x9 matrix instead of a named unitary");

  auto* syn = app.add_subcommand("synth-cphase", "Controlled-phase synthesis from cross-Kerr coefficients");
  common(syn, false, false);
  syn->add_option("--pair", r.pair, "q1q2, q2q3, q3q4 or q4q5");
  syn->add_option("--method", r.method, "four or six")->check(CLI::IsMember({"four", "six"}));

  auto* dec = app.add_subcommand("decouple-demo", "Operator Schmidt rank of decoupled schedules");
  common(dec, false, false);
  dec->add_option("--mode", r.mode, "idle or parallel")->check(CLI::IsMember({"idle", "parallel"}));
  dec->add_option("--pair", r.pair, "Pair for idle mode");
  dec->add_option("--duration-ns", r.duration_ns, "Idle time (idle) or segment time (parallel)");

  auto* tr = app.add_subcommand("transmon-calc", "Charge dispersion and anharmonicity");
  common(tr, false, false);
  tr->add_option("--ratio", r.ratio, "E_J/E_C");
  tr->add_option("--ec", r.ec, "E_C; results come back in the same unit");

  auto* val = app.add_subcommand("validate", "Check a device config and list every violation");
  common(val, false, false);

  auto* plot = app.add_subcommand("plot", "CSV plot data from a result envelope");
  plot->add_option("--input", r.input, "Result envelope JSON")->required();
  plot->add_option("--kind", r.kind, "fig5b-bars, fig5c-gellmann or fig3-ptm")->required();
  plot->add_option("--output,-o", r.output, "CSV path (atomic); default stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (plot->parsed()) {
      const ResultEnvelope env = load_envelope(r.input);
      detail::emit(r, emit_plot_data(env, parse_plot_kind(r.kind)), out);
      return 0;
    }
    r.command = app.get_subcommands().front()->get_name();
    const auto t0 = std::chrono::steady_clock::now();
    bool valid = true;
    ResultEnvelope env;
    env.command = r.command;
    env.request = r.to_json();
    env.payload = run_payload(r, &valid);
    env.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Json j = env.to_json();
    validate_envelope(j);
    detail::emit(r, j.dump(2) + "\n", out);
    if (!valid) {
      for (const auto& e : env.payload["errors"]) err << "error: " << e.get<std::string>() << "\n";
      return 1;
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
}

/// Convenience overload; args exclude the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"qutrit_cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qutrit::cli
