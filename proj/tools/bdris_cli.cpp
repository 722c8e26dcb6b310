// bdris: command-line front end.
//
//   bdris solve --f F.csv --g G.csv [--out theta.csv] [--snr-db 10]
//   bdris run   --config exp.ini [--seed N] [--out results.csv] [--threads N] [--format csv]
//   bdris qstem (--theta theta.csv | --f F.csv --g G.csv) [--q N] [--z0 50] [--out B.csv]
//               [--full [--phase-fallback]]
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bdris/bdris.hpp"

namespace {

using namespace bdris;

void print_solve(const channel::ChannelSet& channels, const designs::MaxDetSolution& sol,
                 std::optional<double> snr_db) {
  const auto h = metrics::equivalent_channel(channels, sol.theta.theta);
  const auto feas = designs::feasibility(sol.theta.theta);
  const auto blocks = designs::verify_block_structure(sol);
  const double dmax = metrics::d_max(channels);
  const double det = metrics::abs_det(h);
  std::printf("M                    %zu\n", channels.m());
  std::printf("r                    %zu\n", channels.dof());
  std::printf("rank(Theta)          %zu\n", sol.theta.rank);
  std::printf("D_max                %.12g\n", dmax);
  std::printf("|det|                %.12g\n", det);
  std::printf("relative det error   %.3e\n", dmax > 0.0 ? std::abs(det - dmax) / dmax : 0.0);
  std::printf("symmetry defect      %.3e\n", feas.symmetry_defect);
  std::printf("sigma_max(Theta)     %.15g\n", feas.max_singular_value);
  std::printf("off-diagonal norm    %.3e\n", blocks.off_diag_norm);
  std::printf("T1 unitarity defect  %.3e\n", blocks.t1_unitarity_defect);
  if (sol.dropped > 0) std::printf("dropped pairs        %zu (collinear subspaces)\n", sol.dropped);
  if (snr_db) {
    const double rho = channel::rho_for_reference_snr(channels, *snr_db);
    const auto base = designs::unitary_baseline(channels);
    const double r_sym = metrics::achievable_rate(h, rho);
    const double r_uni = metrics::achievable_rate(metrics::equivalent_channel(channels, base.theta), rho);
    const auto lead = metrics::leading_singular_values(channels);
    std::printf("rho                  %.12g\n", rho);
    std::printf("rate max-det         %.12g bits\n", r_sym);
    std::printf("rate unitary         %.12g bits\n", r_uni);
    std::printf("rate-gap bound       %.12g bits\n", metrics::rate_gap_bound(lead.f, lead.g, rho));
  }
}

int cmd_solve(const std::string& f_path, const std::string& g_path, const std::string& out,
              std::optional<double> snr_db) {
  channel::ChannelSet channels;
  channels.f = harness::read_matrix(f_path);
  channels.g = harness::read_matrix(g_path);
  channels.validate();
  const auto sol = designs::solve_maxdet(channels);
  print_solve(channels, sol, snr_db);
  if (out.empty()) {
    std::printf("\nTheta\n%s", harness::format_matrix(sol.theta.theta).c_str());
  } else {
    harness::write_matrix(out, sol.theta.theta);
  }
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
            std::size_t threads, const std::string& format) {
  if (format != "csv") throw InvalidInput("unsupported output format '" + format + "'");
  auto cfg = harness::load_config(config_path);
  if (seed) cfg.master_seed = *seed;
  if (!out.empty()) cfg.output_path = out;
  if (cfg.output_path.empty()) throw InvalidInput("no output path: set [output] path or pass --out");

  const auto records = harness::run_experiment(cfg, threads);
  harness::emit_csv(records, cfg.output_path);

  std::size_t errors = 0;
  for (const auto& r : records) errors += r.ok() ? 0 : 1;
  std::printf("%s: %zu trials, %zu records (%zu with errors) -> %s\n",
              std::string(harness::to_string(cfg.experiment)).c_str(), cfg.trials, records.size(), errors,
              cfg.output_path.c_str());
  std::printf("%-26s %5s %7s %-14s %12s %14s\n", "design", "M", "snr_db", "sweep", "mean_rate", "mean_|det|");
  for (const auto& s : harness::summarize(records)) {
    char sweep[48];
    std::snprintf(sweep, sizeof sweep, "%s=%g", s.sweep_variable.c_str(), s.sweep_value);
    std::printf("%-26s %5zu %7g %-14s %12.6f %14.6g\n", s.design.c_str(), s.m, s.snr_db, sweep, s.mean_rate_bits,
                s.mean_abs_det);
  }
  return 0;
}

int write_susceptance(const qstem::SusceptanceMatrix& b, const std::string& out) {
  if (out.empty()) {
    std::printf("\n%s", harness::format_susceptance(b).c_str());
  } else {
    harness::write_text(out, harness::format_susceptance(b));
  }
  return 0;
}

/// Fully connected realization of the completed unitary Q Q^T + Q_perp Q_perp^T.
int cmd_full(const designs::StiefelFrame& frame, double z0, bool fallback, const std::string& out) {
  const auto full = qstem::complete_to_unitary(frame);
  qstem::CayleyRealization real;
  if (fallback) {
    real = qstem::theta_to_b_with_fallback(full.theta, z0);
  } else {
    try {
      real.b = qstem::theta_to_b(full.theta, z0);
    } catch (const CayleySingularity& e) {
      std::fprintf(stderr, "hint: retry with --phase-fallback (suggested phase %.6f rad)\n", e.suggested_phase());
      throw;
    }
  }
  const auto back = qstem::b_to_theta(real.b);
  const double err = linalg::frobenius_norm(back.theta - full.theta * std::polar(1.0, real.applied_phase));
  std::printf("M                    %zu\n", frame.m());
  std::printf("circuits (nu)        %zu\n", qstem::element_count(frame.m(), frame.m()));
  std::printf("applied phase        %.12g rad\n", real.applied_phase);
  std::printf("round-trip error     %.3e\n", err);
  return write_susceptance(real.b, out);
}

int cmd_qstem(const std::string& theta_path, const std::string& f_path, const std::string& g_path,
              std::optional<std::size_t> q_opt, double z0, bool full, bool fallback, const std::string& out) {
  std::optional<designs::StiefelFrame> frame;
  if (!theta_path.empty()) {
    if (!f_path.empty() || !g_path.empty()) throw InvalidInput("give either --theta or --f/--g, not both");
    frame = designs::takagi_frame(harness::read_matrix(theta_path));
  } else {
    if (f_path.empty() || g_path.empty()) throw InvalidInput("need --theta or both --f and --g");
    channel::ChannelSet channels;
    channels.f = harness::read_matrix(f_path);
    channels.g = harness::read_matrix(g_path);
    channels.validate();
    frame = designs::solve_maxdet(channels).frame;
  }
  if (full) return cmd_full(*frame, z0, fallback, out);
  const std::size_t s = frame->s();
  const std::size_t q = q_opt.value_or(s > 1 ? s - 1 : 1);
  const auto res = qstem::synthesize_qstem(*frame, q, z0);
  const auto theta_b = qstem::b_to_theta(res.b);
  // Theta_B only has to agree with Q Q^T on span(conj(Q)).
  const double mismatch = linalg::frobenius_norm(theta_b.theta * linalg::conj(frame->q()) - frame->q());

  std::printf("M                    %zu\n", frame->m());
  std::printf("rank(Theta)          %zu\n", s);
  std::printf("q                    %zu\n", q);
  std::printf("circuits (nu)        %zu\n", res.nu);
  std::printf("residual             %.3e\n", res.residual);
  std::printf("exact                %s\n", res.exact ? "yes" : "no");
  std::printf("||Theta_B Q* - Q||   %.3e\n", mismatch);
  return write_susceptance(res.b, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form symmetric Max-Det BD-RIS design, q-stem synthesis and Monte-Carlo runs"};
  app.require_subcommand(1);

  std::string f_path, g_path, out, config_path, theta_path, format = "csv";
  std::optional<double> snr_db;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> q;
  std::size_t threads = 1;
  double z0 = qstem::kDefaultZ0;
  bool full = false;
  bool fallback = false;

  auto* solve = app.add_subcommand("solve", "Max-Det scattering matrix for channels read from CSV files");
  solve->add_option("--f", f_path, "RIS -> Rx channel F (N_r x M)")->required();
  solve->add_option("--g", g_path, "Tx -> RIS channel G (N_t x M)")->required();
  solve->add_option("--out", out, "write Theta here instead of stdout");
  solve->add_option("--snr-db", snr_db, "also report rates at this reference SNR");

  auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--out", out, "override the output CSV path");
  run->add_option("--threads", threads, "worker threads (0 = all cores)");
  run->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  auto* qs = app.add_subcommand("qstem", "Synthesize a q-stem susceptance matrix");
  qs->add_option("--theta", theta_path, "symmetric scattering matrix (CSV)");
  qs->add_option("--f", f_path, "RIS -> Rx channel F");
  qs->add_option("--g", g_path, "Tx -> RIS channel G");
  qs->add_option("--q", q, "number of stems (default rank - 1)")->check(CLI::PositiveNumber);
  qs->add_option("--z0", z0, "reference impedance in ohms")->check(CLI::PositiveNumber);
  qs->add_option("--out", out, "write B here instead of stdout");
  qs->add_flag("--full", full, "fully connected Cayley realization instead of a q-stem");
  qs->add_flag("--phase-fallback", fallback, "with --full: rotate Theta by a global phase if I + Theta is singular");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*solve) return cmd_solve(f_path, g_path, out, snr_db);
    if (*run) return cmd_run(config_path, seed, out, threads, format);
    if (*qs) return cmd_qstem(theta_path, f_path, g_path, q, z0, full, fallback, out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 1;
}
