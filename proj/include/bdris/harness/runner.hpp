#pragma once

// Monte-Carlo driver. Trial t draws every random quantity from derive_seed(seed, t),
// so results do not depend on the thread count or on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/designs.hpp"
#include "bdris/error.hpp"
#include "bdris/harness/config.hpp"
#include "bdris/harness/records.hpp"
#include "bdris/metrics.hpp"
#include "bdris/qstem.hpp"
#include "bdris/rng.hpp"

namespace bdris::harness {

using channel::ChannelSet;
using linalg::ComplexMatrix;

inline std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial) {
  return rng::derive_seed(master_seed, static_cast<std::uint64_t>(trial));
}

inline ChannelSet generate_channels(const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed) {
  channel::ChannelParams p = cfg.params;
  p.m = m;
  if (cfg.model == ChannelModel::iid) {
    p.validate();
    ChannelSet set;
    set.f = channel::gen_rayleigh(p.n_r, m, rng::derive_seed(seed, rng::Stream::forward));
    set.g = channel::gen_rayleigh(p.n_t, m, rng::derive_seed(seed, rng::Stream::backward));
    return set;
  }
  return channel::build_channel_set(cfg.geometry, p, seed);
}

inline double rho_for(const ExperimentConfig& cfg, const ChannelSet& channels, double snr_db) {
  return cfg.snr_reference ? channel::rho_for_reference_snr(channels, snr_db) : std::pow(10.0, snr_db / 10.0);
}

namespace detail {

struct TrialContext {
  const ExperimentConfig& cfg;
  std::size_t trial;
  std::vector<ResultRecord>& out;

  ResultRecord base(std::string_view design, std::size_t m, double snr_db, std::string_view var, double value) const {
    ResultRecord r;
    r.experiment = std::string(to_string(cfg.experiment));
    r.trial = trial;
    r.design = std::string(design);
    r.m = m;
    r.snr_db = snr_db;
    r.sweep_variable = std::string(var);
    r.sweep_value = value;
    return r;
  }
};

inline void fill_metrics(ResultRecord& r, const ChannelSet& channels, const ComplexMatrix& theta, double rho,
                         double phase = 0.0) {
  const auto m = metrics::evaluate(channels, theta, rho, phase);
  r.rate_bits = m.rate_bits;
  r.abs_det = m.abs_det;
  r.d_max = m.d_max;
  r.rate_gap_bound_bits = m.rate_gap_bound_bits;
  r.sigma_h = m.sigma_h;
  if (!m.sigma_h.empty()) r.sigma_min_h = m.sigma_h.back();
}

/// Runs `body` and turns library errors into an error-column row.
template <class Body>
void guarded(ResultRecord r, std::vector<ResultRecord>& out, Body&& body) {
  try {
    body(r);
  } catch (const Error& e) {
    r.rate_bits = r.abs_det = r.d_max = r.rate_gap_bound_bits = kNaN;
    r.sigma_h.clear();
    r.sigma_min_h.reset();
    r.qstem_residual.reset();
    r.error = e.what();
  }
  out.push_back(std::move(r));
}

/// Scattering matrix of a fixed (rho-independent) design; nullopt for designs that must
/// be built per SNR point.
inline std::optional<designs::ScatteringMatrix> fixed_design(std::string_view name, const ChannelSet& channels,
                                                             std::uint64_t seed) {
  if (name == design::max_det) return designs::solve_maxdet(channels).theta;
  if (name == design::unitary) return designs::unitary_baseline(channels);
  if (name == design::random_symmetric) {
    return designs::random_symmetric_unitary(channels.m(), rng::derive_seed(seed, rng::Stream::surface));
  }
  if (name == design::identity) return designs::identity_surface(channels.m());
  if (name == design::no_ris) return designs::no_ris(channels.m());
  return std::nullopt;
}

inline std::vector<std::string> design_set(const ExperimentConfig& cfg, const ChannelSet& channels) {
  std::vector<std::string> out = cfg.designs;
  if (channels.h_direct) {
    for (auto d : {design::identity, design::no_ris}) {
      if (std::find(out.begin(), out.end(), d) == out.end()) out.emplace_back(d);
    }
  }
  return out;
}

/// One row per design at each SNR point; shared by rate_vs_snr, direct_link_sweep and
/// m_sweep. Without `value` the SNR itself is the sweep value.
inline void evaluate_designs(const TrialContext& ctx, const ChannelSet& channels, std::uint64_t seed,
                             std::string_view var, std::optional<double> value) {
  const auto names = design_set(ctx.cfg, channels);
  std::map<std::string, designs::ScatteringMatrix> cache;
  std::map<std::string, std::string> failures;
  for (const auto& n : names) {
    if (n == design::max_det_phase) continue;
    try {
      if (auto s = fixed_design(n, channels, seed)) cache.emplace(n, std::move(*s));
    } catch (const Error& e) {
      failures.emplace(n, e.what());
    }
  }
  if (std::find(names.begin(), names.end(), design::max_det_phase) != names.end() && !cache.count(std::string(design::max_det))) {
    try {
      cache.emplace(std::string(design::max_det), designs::solve_maxdet(channels).theta);
    } catch (const Error& e) {
      failures.emplace(std::string(design::max_det), e.what());
    }
  }

  for (double snr : ctx.cfg.snr_grid_db) {
    double rho = kNaN;
    std::string rho_error;
    try {
      rho = rho_for(ctx.cfg, channels, snr);
    } catch (const Error& e) {
      rho_error = e.what();
    }
    for (const auto& n : names) {
      ResultRecord r = ctx.base(n, channels.m(), snr, var, value.value_or(snr));
      r.rho = rho;
      guarded(std::move(r), ctx.out, [&](ResultRecord& rec) {
        if (!rho_error.empty()) throw NumericalError(rho_error);
        if (n == design::max_det_phase) {
          const auto it = cache.find(std::string(design::max_det));
          if (it == cache.end()) throw NumericalError(failures.at(std::string(design::max_det)));
          const auto pc = designs::phase_correction(channels, it->second, rho);
          fill_metrics(rec, channels, it->second.theta, rho, pc.phi);
          rec.phase = pc.phi;
          return;
        }
        const auto it = cache.find(n);
        if (it == cache.end()) throw NumericalError(failures.at(n));
        fill_metrics(rec, channels, it->second.theta, rho);
      });
    }
  }
}

inline void run_rate_vs_snr(const TrialContext& ctx, std::uint64_t seed) {
  for (auto m : ctx.cfg.m_grid) {
    const ChannelSet channels = generate_channels(ctx.cfg, m, seed);
    evaluate_designs(ctx, channels, seed, "snr_db", std::nullopt);
  }
}

inline void run_direct_link_sweep(const TrialContext& ctx, std::uint64_t seed) {
  ExperimentConfig unit = ctx.cfg;
  unit.params.direct_scale = 1.0;
  const ChannelSet base = generate_channels(unit, ctx.cfg.params.m, seed);
  for (double a : ctx.cfg.direct_scale_grid) {
    ChannelSet channels = base;
    *channels.h_direct *= linalg::cplx{a};
    evaluate_designs(ctx, channels, seed, "direct_scale", a);
  }
}

inline void run_m_sweep(const TrialContext& ctx, std::uint64_t seed) {
  for (auto m : ctx.cfg.m_grid) {
    const ChannelSet channels = generate_channels(ctx.cfg, m, seed);
    evaluate_designs(ctx, channels, seed, "m", static_cast<double>(m));
  }
}

inline void run_qstem_sweep(const TrialContext& ctx, std::uint64_t seed) {
  const std::size_t m = ctx.cfg.params.m;
  const ChannelSet channels = generate_channels(ctx.cfg, m, seed);

  std::optional<designs::MaxDetSolution> sol;
  std::string sol_error;
  try {
    sol = designs::solve_maxdet(channels);
  } catch (const Error& e) {
    sol_error = e.what();
  }

  struct Realized {
    std::optional<designs::ScatteringMatrix> theta;
    double residual = kNaN;
    double phase = 0.0;
    std::string error;
  };
  auto realize = [&](auto&& build) {
    Realized out;
    try {
      if (!sol) throw NumericalError(sol_error);
      build(out);
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  };

  const Realized full = realize([&](Realized& out) {
    const auto completed = qstem::complete_to_unitary(sol->frame);
    const auto cayley = qstem::theta_to_b_with_fallback(completed.theta);
    out.theta = qstem::b_to_theta(cayley.b);
    out.phase = cayley.applied_phase;
  });
  std::vector<Realized> stems;
  for (auto q : ctx.cfg.q_grid) {
    stems.push_back(realize([&](Realized& out) {
      const auto syn = qstem::synthesize_qstem(sol->frame, q);
      out.residual = syn.residual;
      out.theta = qstem::b_to_theta(syn.b);
    }));
  }

  for (double snr : ctx.cfg.snr_grid_db) {
    const double rho = rho_for(ctx.cfg, channels, snr);
    for (std::size_t k = 0; k < ctx.cfg.q_grid.size(); ++k) {
      const double q = static_cast<double>(ctx.cfg.q_grid[k]);
      auto emit = [&](std::string_view name, const Realized& real, bool with_residual) {
        ResultRecord r = ctx.base(name, m, snr, "q", q);
        r.rho = rho;
        guarded(std::move(r), ctx.out, [&](ResultRecord& rec) {
          if (!real.error.empty()) throw NumericalError(real.error);
          fill_metrics(rec, channels, real.theta->theta, rho);
          if (with_residual) rec.qstem_residual = real.residual;
          if (real.phase != 0.0) rec.phase = real.phase;
        });
      };
      emit(design::qstem, stems[k], true);
      emit(design::cayley_full, full, false);
      ResultRecord r = ctx.base(design::max_det, m, snr, "q", q);
      r.rho = rho;
      guarded(std::move(r), ctx.out, [&](ResultRecord& rec) {
        if (!sol) throw NumericalError(sol_error);
        fill_metrics(rec, channels, sol->theta.theta, rho);
      });
    }
  }
}

inline void run_det_family(const TrialContext& ctx, std::uint64_t seed) {
  const std::size_t m = ctx.cfg.params.m;
  const ChannelSet channels = generate_channels(ctx.cfg, m, seed);
  const std::size_t steps = ctx.cfg.phi_steps;
  for (double snr : ctx.cfg.snr_grid_db) {
    const double rho = rho_for(ctx.cfg, channels, snr);
    for (std::size_t k = 0; k < steps; ++k) {
      const double phi = (std::numbers::pi / 2.0) * static_cast<double>(k) / static_cast<double>(steps - 1);
      auto emit = [&](std::string_view name, auto&& build) {
        ResultRecord r = ctx.base(name, m, snr, "phi", phi);
        r.rho = rho;
        guarded(std::move(r), ctx.out, [&](ResultRecord& rec) { fill_metrics(rec, channels, build().theta, rho); });
      };
      emit(design::rotated, [&] {
        return designs::rotated_family(channels, designs::planar_rotation(channels.dof(), phi));
      });
      emit(design::unitary, [&] { return designs::unitary_baseline(channels); });
      emit(design::max_det, [&] { return designs::solve_maxdet(channels).theta; });
    }
  }
}

}  // namespace detail

/// Records of one trial, in canonical order.
inline std::vector<ResultRecord> run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  std::vector<ResultRecord> out;
  const detail::TrialContext ctx{cfg, trial, out};
  const std::uint64_t seed = trial_seed(cfg.master_seed, trial);
  switch (cfg.experiment) {
    case ExperimentKind::rate_vs_snr: detail::run_rate_vs_snr(ctx, seed); break;
    case ExperimentKind::direct_link_sweep: detail::run_direct_link_sweep(ctx, seed); break;
    case ExperimentKind::qstem_sweep: detail::run_qstem_sweep(ctx, seed); break;
    case ExperimentKind::m_sweep: detail::run_m_sweep(ctx, seed); break;
    case ExperimentKind::det_family: detail::run_det_family(ctx, seed); break;
  }
  return out;
}

/// All trials, trial-major. `threads` = 0 picks the hardware concurrency.
inline std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.trials);

  std::vector<std::vector<ResultRecord>> per_trial(cfg.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      try {
        per_trial[t] = run_trial(cfg, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cfg.trials);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRecord> out;
  for (auto& rows : per_trial) {
    for (auto& r : rows) out.push_back(std::move(r));
  }
  return out;
}

/// Mean over trials per (design, M, SNR, sweep point), in first-appearance order.
struct SummaryRow {
  std::string design;
  std::size_t m = 0;
  double snr_db = kNaN;
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::size_t count = 0;
  std::size_t errors = 0;
  double mean_rate_bits = 0.0;
  double mean_abs_det = 0.0;
  double mean_rate_gap_bound_bits = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
  using Key = std::tuple<std::string, std::size_t, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<SummaryRow> rows;
  for (const auto& r : records) {
    const Key key{r.design, r.m, std::isnan(r.snr_db) ? 0.0 : r.snr_db, r.sweep_value};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      SummaryRow s;
      s.design = r.design;
      s.m = r.m;
      s.snr_db = r.snr_db;
      s.sweep_variable = r.sweep_variable;
      s.sweep_value = r.sweep_value;
      rows.push_back(s);
    }
    auto& s = rows[it->second];
    if (!r.ok()) {
      ++s.errors;
      continue;
    }
    ++s.count;
    s.mean_rate_bits += r.rate_bits;
    s.mean_abs_det += r.abs_det;
    s.mean_rate_gap_bound_bits += r.rate_gap_bound_bits;
  }
  for (auto& s : rows) {
    if (s.count == 0) continue;
    const double n = static_cast<double>(s.count);
    s.mean_rate_bits /= n;
    s.mean_abs_det /= n;
    s.mean_rate_gap_bound_bits /= n;
  }
  return rows;
}

struct MSweepSummary {
  std::size_t m = 0;
  std::size_t trials = 0;
  double mean_sigma_min_over_m = 0.0;
  double mean_sigma_min_sq = 0.0;
  double mean_rate_gap_bits = kNaN;  // mean of rate(unitary_baseline) - rate(max_det), when both present
};

/// Per-M aggregates of sigma_min(H(Theta_maxdet)) from an m_sweep run, ascending in M.
inline std::vector<MSweepSummary> m_sweep_summary(const std::vector<ResultRecord>& records) {
  std::map<std::size_t, MSweepSummary> by_m;
  std::map<std::tuple<std::size_t, std::size_t, double>, double> unitary_rate;
  std::map<std::size_t, std::pair<double, std::size_t>> gaps;
  for (const auto& r : records) {
    if (r.experiment != to_string(ExperimentKind::m_sweep)) {
      throw InvalidInput("m_sweep_summary: record from experiment '" + r.experiment + "'");
    }
    if (r.ok() && r.design == design::unitary) unitary_rate[{r.trial, r.m, r.snr_db}] = r.rate_bits;
  }
  for (const auto& r : records) {
    if (!r.ok() || r.design != design::max_det || !r.sigma_min_h) continue;
    auto& s = by_m[r.m];
    s.m = r.m;
    ++s.trials;
    s.mean_sigma_min_over_m += *r.sigma_min_h / static_cast<double>(r.m);
    s.mean_sigma_min_sq += *r.sigma_min_h * *r.sigma_min_h;
    const auto u = unitary_rate.find({r.trial, r.m, r.snr_db});
    if (u != unitary_rate.end()) {
      auto& g = gaps[r.m];
      g.first += u->second - r.rate_bits;
      ++g.second;
    }
  }
  std::vector<MSweepSummary> out;
  for (auto& [m, s] : by_m) {
    const double n = static_cast<double>(s.trials);
    s.mean_sigma_min_over_m /= n;
    s.mean_sigma_min_sq /= n;
    if (const auto g = gaps.find(m); g != gaps.end() && g->second.second > 0) {
      s.mean_rate_gap_bits = g->second.first / static_cast<double>(g->second.second);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace bdris::harness
