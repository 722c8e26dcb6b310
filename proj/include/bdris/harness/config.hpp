#pragma once

// Experiment configuration: a flat INI-style document.
//
//   experiment = rate_vs_snr
//   trials = 200
//   seed = 1
//   [geometry]   tx, rx, ris = x, y, z
//   [channel]    n_t, n_r, m, rician_k, alpha_ris, alpha_direct, wavelength,
//                direct (blocked|unblocked), direct_normalization (reference|path_loss),
//                model (geometric|iid), path_loss (true|false)
//   [sweep]      snr_db, snr_reference, direct_scale, q, m, designs, phi_steps
//   [output]     path
//
// Lists are comma separated; integer lists also accept ranges "1:10".

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/error.hpp"

namespace bdris::harness {

enum class ExperimentKind { rate_vs_snr, direct_link_sweep, qstem_sweep, m_sweep, det_family };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rate_vs_snr: return "rate_vs_snr";
    case ExperimentKind::direct_link_sweep: return "direct_link_sweep";
    case ExperimentKind::qstem_sweep: return "qstem_sweep";
    case ExperimentKind::m_sweep: return "m_sweep";
    case ExperimentKind::det_family: return "det_family";
  }
  return "rate_vs_snr";
}

/// geometric: Rician links with path loss (and optional direct link) from the geometry.
/// iid: F, G with i.i.d. CN(0, 1) entries, no path loss, direct link blocked.
enum class ChannelModel { geometric, iid };

// Design names as they appear in configs and CSV output.
namespace design {
inline constexpr std::string_view max_det = "max_det_symmetric";
inline constexpr std::string_view max_det_phase = "max_det_phase_corrected";
inline constexpr std::string_view unitary = "unitary_baseline";
inline constexpr std::string_view random_symmetric = "random_symmetric";
inline constexpr std::string_view identity = "identity";
inline constexpr std::string_view no_ris = "no_ris";
inline constexpr std::string_view rotated = "rotated";
inline constexpr std::string_view qstem = "qstem";
inline constexpr std::string_view cayley_full = "cayley_full";
}  // namespace design

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::rate_vs_snr;
  channel::Geometry geometry;
  channel::ChannelParams params;
  ChannelModel model = ChannelModel::geometric;
  std::vector<double> snr_grid_db;
  bool snr_reference = true;  // snr_db is the reference SNR with Theta = I; else 10 log10(rho)
  std::vector<double> direct_scale_grid;
  std::vector<std::size_t> q_grid;
  std::vector<std::size_t> m_grid;
  std::size_t phi_steps = 19;
  std::size_t trials = 200;
  std::uint64_t master_seed = 1;
  std::vector<std::string> designs;
  std::string output_path;

  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError(line, "malformed number '" + s + "' for key '" + key + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line, const std::string& key) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line, "malformed integer '" + s + "' for key '" + key + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s, std::size_t line, const std::string& key) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ParseError(line, "expected true/false for key '" + key + "', got '" + s + "'");
}

inline std::vector<double> parse_doubles(const std::string& s, std::size_t line, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, line, key));
  return out;
}

inline std::vector<std::size_t> parse_counts(const std::string& s, std::size_t line, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      out.push_back(parse_u64(item, line, key));
      continue;
    }
    const auto lo = parse_u64(trim(item.substr(0, colon)), line, key);
    const auto hi = parse_u64(trim(item.substr(colon + 1)), line, key);
    if (hi < lo) throw ParseError(line, "empty range '" + item + "' for key '" + key + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

inline channel::Vec3 parse_point(const std::string& s, std::size_t line, const std::string& key) {
  const auto v = parse_doubles(s, line, key);
  if (v.size() != 3) throw ParseError(line, "key '" + key + "' needs three coordinates");
  return {v[0], v[1], v[2]};
}

struct Entry {
  std::string value;
  std::size_t line;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "experiment",          "trials",           "seed",
      "geometry.tx",         "geometry.rx",      "geometry.ris",
      "channel.n_t",         "channel.n_r",      "channel.m",
      "channel.rician_k",    "channel.alpha_ris", "channel.alpha_direct",
      "channel.wavelength",  "channel.direct",   "channel.direct_normalization",
      "channel.model",       "channel.path_loss", "sweep.snr_db",
      "sweep.snr_reference", "sweep.direct_scale", "sweep.q",
      "sweep.m",             "sweep.designs",    "sweep.phi_steps",
      "output.path"};
  return keys;
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"geometry", "channel", "sweep", "output"};
  return s;
}

}  // namespace detail

inline ExperimentKind parse_experiment_kind(const std::string& s, std::size_t line = 0) {
  for (auto k : {ExperimentKind::rate_vs_snr, ExperimentKind::direct_link_sweep, ExperimentKind::qstem_sweep,
                 ExperimentKind::m_sweep, ExperimentKind::det_family}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError(line, "unknown experiment '" + s + "'");
}

/// Designs a config may request for each experiment; qstem_sweep and det_family have a
/// fixed design set.
inline std::vector<std::string_view> selectable_designs(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rate_vs_snr:
    case ExperimentKind::direct_link_sweep:
    case ExperimentKind::m_sweep:
      return {design::max_det, design::max_det_phase, design::unitary, design::random_symmetric, design::identity,
              design::no_ris};
    case ExperimentKind::qstem_sweep:
    case ExperimentKind::det_family:
      return {};
  }
  return {};
}

inline void ExperimentConfig::validate() const {
  geometry.validate();
  params.validate();
  if (trials < 1) throw InvalidInput("config: trials must be >= 1");
  if (snr_grid_db.empty()) throw InvalidInput("config: snr_db grid is empty");
  switch (experiment) {
    case ExperimentKind::rate_vs_snr:
    case ExperimentKind::m_sweep:
      if (m_grid.empty()) throw InvalidInput("config: m grid is empty");
      break;
    case ExperimentKind::direct_link_sweep:
      if (direct_scale_grid.empty()) throw InvalidInput("config: direct_scale grid is empty");
      if (params.direct_blocked || model == ChannelModel::iid) {
        throw InvalidInput("config: direct_link_sweep needs an unblocked direct link and the geometric model");
      }
      for (double a : direct_scale_grid) {
        if (!(a >= 0.0)) throw InvalidInput("config: direct_scale values must be >= 0");
      }
      break;
    case ExperimentKind::qstem_sweep:
      if (q_grid.empty()) throw InvalidInput("config: q grid is empty");
      for (auto q : q_grid) {
        if (q < 1 || q > params.m) throw InvalidInput("config: q values must lie in [1, M]");
      }
      break;
    case ExperimentKind::det_family:
      if (phi_steps < 2) throw InvalidInput("config: phi_steps must be >= 2");
      if (std::min(params.n_t, params.n_r) < 2) throw InvalidInput("config: det_family needs min(N_t, N_r) >= 2");
      break;
  }
  for (auto m : m_grid) {
    if (m < 1) throw InvalidInput("config: M values must be >= 1");
  }
  const auto allowed = selectable_designs(experiment);
  for (const auto& d : designs) {
    if (std::find(allowed.begin(), allowed.end(), d) == allowed.end()) {
      throw InvalidInput("config: design '" + d + "' is not available for " + std::string(to_string(experiment)));
    }
    const bool direct = !params.direct_blocked && model == ChannelModel::geometric;
    if (d == design::max_det_phase && !direct) {
      throw InvalidInput("config: max_det_phase_corrected needs an unblocked direct link");
    }
  }
}

/// Parses and validates; unspecified keys take the scenario defaults (default geometry,
/// K = 2, alpha 2 / 4, 200 trials) and per-experiment sweep defaults.
inline ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, detail::Entry> entries;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "malformed section header '" + line + "'");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!detail::known_sections().count(section)) throw ParseError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    if (key.empty()) throw ParseError(line_no, "missing key before '='");
    if (!detail::known_keys().count(full)) throw ParseError(line_no, "unknown key '" + full + "'");
    if (value.empty()) throw ParseError(line_no, "empty value for key '" + full + "'");
    if (entries.count(full)) {
      throw ParseError(line_no, "duplicate key '" + full + "' (first set on line " +
                                    std::to_string(entries[full].line) + ")");
    }
    entries[full] = {value, line_no};
  }

  auto get = [&](const std::string& key) -> const detail::Entry* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  ExperimentConfig cfg;
  const auto* exp = get("experiment");
  if (!exp) throw ParseError(line_no, "missing required key 'experiment'");
  cfg.experiment = parse_experiment_kind(exp->value, exp->line);
  const auto kind = cfg.experiment;
  const bool small_iid = kind == ExperimentKind::m_sweep || kind == ExperimentKind::det_family;

  // Per-experiment defaults first; explicit keys override below.
  cfg.model = small_iid ? ChannelModel::iid : ChannelModel::geometric;
  if (small_iid) {
    cfg.params.n_t = 2;
    cfg.params.n_r = 2;
  }
  cfg.snr_reference = !small_iid;
  switch (kind) {
    case ExperimentKind::rate_vs_snr:
      cfg.snr_grid_db = {0, 5, 10, 15, 20, 25, 30};
      cfg.m_grid = {16, 64};
      cfg.designs = {std::string(design::unitary), std::string(design::max_det)};
      break;
    case ExperimentKind::direct_link_sweep:
      cfg.snr_grid_db = {10};
      cfg.direct_scale_grid = {1e-3, 1e-2, 1e-1, 0.5, 1, 2, 5, 10, 20};
      cfg.params.direct_blocked = false;
      cfg.params.direct_normalization = channel::DirectNormalization::reference;
      cfg.designs = {std::string(design::max_det), std::string(design::max_det_phase),
                     std::string(design::random_symmetric)};
      break;
    case ExperimentKind::qstem_sweep:
      cfg.snr_grid_db = {10};
      cfg.q_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
      break;
    case ExperimentKind::m_sweep:
      cfg.snr_grid_db = {10};
      cfg.m_grid = {8, 16, 32, 64};
      cfg.designs = {std::string(design::max_det), std::string(design::unitary)};
      break;
    case ExperimentKind::det_family:
      cfg.snr_grid_db = {10};
      break;
  }

  if (const auto* e = get("trials")) cfg.trials = detail::parse_u64(e->value, e->line, "trials");
  if (const auto* e = get("seed")) cfg.master_seed = detail::parse_u64(e->value, e->line, "seed");
  if (const auto* e = get("geometry.tx")) cfg.geometry.tx_pos = detail::parse_point(e->value, e->line, "tx");
  if (const auto* e = get("geometry.rx")) cfg.geometry.rx_pos = detail::parse_point(e->value, e->line, "rx");
  if (const auto* e = get("geometry.ris")) cfg.geometry.ris_pos = detail::parse_point(e->value, e->line, "ris");
  if (const auto* e = get("channel.n_t")) cfg.params.n_t = detail::parse_u64(e->value, e->line, "n_t");
  if (const auto* e = get("channel.n_r")) cfg.params.n_r = detail::parse_u64(e->value, e->line, "n_r");
  if (const auto* e = get("channel.m")) cfg.params.m = detail::parse_u64(e->value, e->line, "m");
  if (const auto* e = get("channel.rician_k")) cfg.params.rician_k = detail::parse_double(e->value, e->line, "rician_k");
  if (const auto* e = get("channel.alpha_ris")) cfg.params.alpha_ris = detail::parse_double(e->value, e->line, "alpha_ris");
  if (const auto* e = get("channel.alpha_direct")) {
    cfg.params.alpha_direct = detail::parse_double(e->value, e->line, "alpha_direct");
  }
  if (const auto* e = get("channel.wavelength")) {
    cfg.params.carrier_wavelength = detail::parse_double(e->value, e->line, "wavelength");
  }
  if (const auto* e = get("channel.direct")) {
    if (e->value == "blocked") cfg.params.direct_blocked = true;
    else if (e->value == "unblocked") cfg.params.direct_blocked = false;
    else throw ParseError(e->line, "channel.direct must be 'blocked' or 'unblocked'");
  }
  if (const auto* e = get("channel.direct_normalization")) {
    if (e->value == "reference") cfg.params.direct_normalization = channel::DirectNormalization::reference;
    else if (e->value == "path_loss") cfg.params.direct_normalization = channel::DirectNormalization::path_loss;
    else throw ParseError(e->line, "channel.direct_normalization must be 'reference' or 'path_loss'");
  }
  if (const auto* e = get("channel.model")) {
    if (e->value == "geometric") cfg.model = ChannelModel::geometric;
    else if (e->value == "iid") cfg.model = ChannelModel::iid;
    else throw ParseError(e->line, "channel.model must be 'geometric' or 'iid'");
  }
  if (const auto* e = get("channel.path_loss")) cfg.params.apply_path_loss = detail::parse_bool(e->value, e->line, "path_loss");
  if (const auto* e = get("sweep.snr_db")) cfg.snr_grid_db = detail::parse_doubles(e->value, e->line, "snr_db");
  if (const auto* e = get("sweep.snr_reference")) cfg.snr_reference = detail::parse_bool(e->value, e->line, "snr_reference");
  if (const auto* e = get("sweep.direct_scale")) {
    cfg.direct_scale_grid = detail::parse_doubles(e->value, e->line, "direct_scale");
  }
  if (const auto* e = get("sweep.q")) cfg.q_grid = detail::parse_counts(e->value, e->line, "q");
  if (const auto* e = get("sweep.m")) cfg.m_grid = detail::parse_counts(e->value, e->line, "m");
  if (const auto* e = get("sweep.phi_steps")) cfg.phi_steps = detail::parse_u64(e->value, e->line, "phi_steps");
  if (const auto* e = get("sweep.designs")) {
    if (selectable_designs(kind).empty()) {
      throw ParseError(e->line, "sweep.designs is fixed for " + std::string(to_string(kind)));
    }
    cfg.designs = detail::split_list(e->value);
    for (const auto& d : cfg.designs) {
      if (d.empty()) throw ParseError(e->line, "empty design name in sweep.designs");
    }
  }
  if (const auto* e = get("output.path")) cfg.output_path = e->value;

  if (kind != ExperimentKind::rate_vs_snr && kind != ExperimentKind::m_sweep && !get("sweep.m")) {
    cfg.m_grid = {cfg.params.m};
  }
  if (cfg.model == ChannelModel::iid) {
    cfg.params.rician_k = 0.0;
    cfg.params.apply_path_loss = false;
    cfg.params.direct_blocked = true;
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace bdris::harness
