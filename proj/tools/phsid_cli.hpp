#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid input or usage,
// 2 calibration did not converge, 3 numerical failure.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "phsid/phsid.hpp"

namespace phsid::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kNotConverged = 2, kNumericalFailure = 3 };

namespace detail {

inline std::string derived_path(const std::string& path, const std::string& suffix) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix + ".csv";
  return path.substr(0, dot) + suffix + path.substr(dot);
}

inline std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("PHSID_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == nullptr || *end != '\0') throw ParseError("PHSID_SEED must be an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

struct Inputs {
  ParameterPoint guess;
  Matrix B;
  Signal u;
  Signal y_data;
};

/// Loads guess, input and reference, and checks that they fit together.
inline Inputs load_inputs(const std::string& guess_path, const std::string& input_path, const std::string& data_path) {
  const ReducedPHSystem sys = cholesky_reduce(load_model(guess_path));
  Signal u = load_signal_csv(input_path);
  Signal y = load_signal_csv(data_path);
  require_signal_shape(u, u.grid(), sys.ports(), "input");
  require_signal_shape(y, u.grid(), sys.ports(), "reference output");
  return {ParameterPoint(sys.J, sys.R, sys.w_hat), sys.B, std::move(u), std::move(y)};
}

}  // namespace detail

struct GenerateArgs {
  std::string model, out_u, out_y;
  double t_end = 1.0;
  std::size_t steps = 1000;
  std::optional<std::uint64_t> seed;
  double mean = 1.0, std = 0.1;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const ReducedPHSystem sys = cholesky_reduce(load_model(a.model));
  std::optional<std::uint64_t> seed = a.seed ? a.seed : detail::env_seed();
  if (!seed) throw ParseError("no seed given: pass --seed or set PHSID_SEED");
  const Reference ref = generate_reference(sys, TimeGrid(a.t_end, a.steps), {a.mean, a.std, *seed});
  save_signal_csv(a.out_u, ref.u, "u");
  save_signal_csv(a.out_y, ref.y_data, "y");
  out << "wrote " << a.out_u << " and " << a.out_y << " (seed " << *seed << ")\n";
  return kOk;
}

struct SimulateArgs {
  std::string model, input, scheme = "euler", out, out_y, energy_out;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ReducedPHSystem sys = cholesky_reduce(load_model(a.model));
  const Signal u = load_signal_csv(a.input);
  require_signal_shape(u, u.grid(), sys.ports(), "input");
  const Trajectory traj = a.scheme == "midpoint" ? simulate_discrete_gradient(sys, u) : simulate_euler(sys, u);
  const std::string y_path = a.out_y.empty() ? detail::derived_path(a.out, "_y") : a.out_y;
  save_trajectory_csv(a.out, traj, "w");
  save_signal_csv(y_path, scheme_output(sys, traj), "y");
  out << "wrote " << a.out << " and " << y_path << " (" << to_string(traj.scheme()) << ")\n";
  if (!a.energy_out.empty()) {
    const Vector res = energy_balance_residual(sys, traj, u);
    auto f = phsid::detail::open_out(a.energy_out);
    f << "t,H,residual\n";
    for (std::size_t j = 0; j < traj.grid().nodes(); ++j) {
      f << format_double(traj.grid().time(j)) << ',' << format_double(hamiltonian(traj.row(j))) << ','
        << format_double(j == 0 ? 0.0 : res(Eigen::Index(j - 1))) << '\n';
    }
    out << "max |balance residual| = " << format_double(res.cwiseAbs().maxCoeff()) << '\n';
  }
  return kOk;
}

struct CalibrateArgs {
  std::string data, input, guess, config, out, history, diff;
  std::optional<double> sigma_init, gamma, eps_stop;
  std::optional<int> max_iter, max_halvings;
  std::optional<std::string> structure, psd_mode;
  bool parallel = false;
};

/// File config first, then any flag that was given.
inline CalibrationConfig resolve_config(const CalibrateArgs& a) {
  ojson j = ojson::object();
  if (!a.config.empty()) {
    auto in = phsid::detail::open_in(a.config);
    j = phsid::detail::parse_json(in);
    if (!j.is_object()) throw ParseError("config file must hold a JSON object");
  }
  if (a.sigma_init) j["sigma_init"] = *a.sigma_init;
  if (a.gamma) j["gamma"] = *a.gamma;
  if (a.eps_stop) j["eps_stop"] = *a.eps_stop;
  if (a.max_iter) j["max_iter"] = *a.max_iter;
  if (a.max_halvings) j["max_halvings"] = *a.max_halvings;
  if (a.structure) j["structure"] = *a.structure;
  if (a.psd_mode) j["psd_mode"] = *a.psd_mode;
  return config_from_json(j);
}

inline int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const CalibrationConfig cfg = resolve_config(a);
  const detail::Inputs in = detail::load_inputs(a.guess, a.input, a.data);
  const CalibrationResult r =
      calibrate(in.guess, in.u, in.y_data, in.B, cfg, a.parallel ? Execution::parallel : Execution::sequential);

  save_result(a.out, summarize(r, cfg));
  save_history_csv(a.history, history_rows(r));
  save_signal_csv(a.diff, Signal(in.y_data.grid(), in.y_data.values() - r.y_opt->values()), "diff");

  out << (r.converged ? "converged" : "not converged") << " after " << r.iterations
      << " gradient steps, final cost " << format_double(r.final_cost()) << '\n';
  if (!r.diagnostic.empty()) out << r.diagnostic << '\n';
  return r.converged ? kOk : kNotConverged;
}

struct CheckGradientArgs {
  std::string data, input, guess;
  double eps = 1e-6;
  std::string structure = "full";
  std::optional<std::size_t> corrupt_direction;
};

inline int cmd_check_gradient(const CheckGradientArgs& a, std::ostream& out) {
  const detail::Inputs in = detail::load_inputs(a.guess, a.input, a.data);
  const BasisSet basis =
      tangent_basis(in.guess.dim(), a.structure == "diagonal_R" ? BasisStructure::diagonal_R : BasisStructure::full);
  std::vector<double> sens = sensitivity_coefficients(in.guess.system(in.B), in.u, in.y_data, basis);
  if (a.corrupt_direction && *a.corrupt_direction < sens.size()) {
    sens[*a.corrupt_direction] = 1.5 * sens[*a.corrupt_direction] + 1e-3;
  }
  const std::vector<double> fd = finite_difference_gradient(in.guess, in.B, in.u, in.y_data, basis, a.eps);

  auto block_name = [](DirectionBlock b) {
    switch (b) {
      case DirectionBlock::J: return "J";
      case DirectionBlock::R: return "R";
      case DirectionBlock::x: return "x";
      default: return "?";
    }
  };
  bool ok = true;
  out << "dir block  sensitivity              finite-difference        rel-error  status\n";
  for (std::size_t l = 0; l < basis.size(); ++l) {
    const double rel = std::abs(sens[l] - fd[l]) / std::max(std::abs(fd[l]), 1e-300);
    const bool pass = coefficients_agree(sens[l], fd[l]);
    ok = ok && pass;
    char line[160];
    std::snprintf(line, sizeof line, "%3zu %-5s %24.16e %24.16e %10.3e  %s\n", l, block_name(basis[l].block()),
                  sens[l], fd[l], rel, pass ? "ok" : "FAIL");
    out << line;
  }
  out << (ok ? "all directions agree" : "gradient check FAILED") << '\n';
  return ok ? kOk : kNumericalFailure;
}

struct ReportArgs {
  std::string history, diff, data;
};

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto hist = load_history_csv(a.history);
  const Signal diff = load_signal_csv(a.diff);
  const double max_diff = diff.values().cwiseAbs().maxCoeff();
  out << "final cost      " << format_double(hist.back().cost) << '\n';
  out << "iterations      " << hist.size() - 1 << '\n';
  out << "max |y_data - y_opt|  " << format_double(max_diff) << '\n';
  if (!a.data.empty()) {
    const Signal y = load_signal_csv(a.data);
    require_signal_shape(y, diff.grid(), diff.channels(), "reference output");
    const double ratio = max_diff / y.values().cwiseAbs().maxCoeff();
    out << "relative to max |y_data|  " << format_double(ratio) << '\n';
  }
  return kOk;
}

/// Parses argv and dispatches to a subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identify and simulate linear port-Hamiltonian systems", "phsid"};
  app.require_subcommand(1);

  GenerateArgs gen;
  std::uint64_t seed_flag = 0;
  auto* g = app.add_subcommand("generate", "Seeded noisy input and reference output for a model");
  g->add_option("--model", gen.model, "Model JSON")->required();
  g->add_option("--T", gen.t_end, "Final time")->capture_default_str();
  g->add_option("--steps", gen.steps, "Number of Euler steps")->capture_default_str();
  auto* seed_opt = g->add_option("--seed", seed_flag, "RNG seed (falls back to PHSID_SEED)");
  g->add_option("--mean", gen.mean, "Input mean")->capture_default_str();
  g->add_option("--std", gen.std, "Input noise standard deviation")->capture_default_str();
  g->add_option("--out-u", gen.out_u, "Input CSV to write")->required();
  g->add_option("--out-y", gen.out_y, "Reference output CSV to write")->required();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Integrate a model under a given input");
  s->add_option("--model", sim.model, "Model JSON")->required();
  s->add_option("--input", sim.input, "Input CSV")->required();
  s->add_option("--scheme", sim.scheme, "Integrator")
      ->check(CLI::IsMember({"euler", "midpoint"}))
      ->capture_default_str();
  s->add_option("--out", sim.out, "State trajectory CSV to write")->required();
  s->add_option("--out-y", sim.out_y, "Output CSV to write (default: <out>_y.csv)");
  s->add_option("--energy-out", sim.energy_out, "Per-node energy and balance residual CSV");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit J, R and the initial state to reference data");
  c->add_option("--data", cal.data, "Reference output CSV")->required();
  c->add_option("--input", cal.input, "Input CSV")->required();
  c->add_option("--guess", cal.guess, "Initial guess model JSON (B is taken as known)")->required();
  c->add_option("--config", cal.config, "Calibration config JSON");
  c->add_option("--out", cal.out, "Result JSON to write")->required();
  c->add_option("--history", cal.history, "Cost history CSV to write")->required();
  c->add_option("--diff", cal.diff, "y_data - y_opt CSV to write")->required();
  c->add_option("--sigma-init", cal.sigma_init, "Override initial Armijo step");
  c->add_option("--gamma", cal.gamma, "Override Armijo constant");
  c->add_option("--eps-stop", cal.eps_stop, "Override cost stopping threshold");
  c->add_option("--max-iter", cal.max_iter, "Override iteration cap");
  c->add_option("--max-halvings", cal.max_halvings, "Override line-search halving cap");
  c->add_option("--structure", cal.structure, "full or diagonal_R");
  c->add_option("--psd-mode", cal.psd_mode, "project or none");
  c->add_flag("--parallel", cal.parallel, "Solve sensitivities concurrently");

  CheckGradientArgs chk;
  std::size_t corrupt = 0;
  auto* k = app.add_subcommand("check-gradient", "Compare sensitivity gradient with central differences");
  k->add_option("--data", chk.data, "Reference output CSV")->required();
  k->add_option("--input", chk.input, "Input CSV")->required();
  k->add_option("--guess", chk.guess, "Parameter point model JSON")->required();
  k->add_option("--eps", chk.eps, "Finite-difference step")->capture_default_str();
  k->add_option("--structure", chk.structure, "full or diagonal_R")
      ->check(CLI::IsMember({"full", "diagonal_R"}))
      ->capture_default_str();
  auto* corrupt_opt = k->add_option("--corrupt-direction", corrupt, "Test hook: perturb one coefficient")->group("");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Summarize a calibration run");
  r->add_option("--history", rep.history, "Cost history CSV")->required();
  r->add_option("--diff", rep.diff, "Output difference CSV")->required();
  r->add_option("--data", rep.data, "Reference output CSV (adds the relative error)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*g) {
      if (*seed_opt) gen.seed = seed_flag;
      return cmd_generate(gen, out);
    }
    if (*s) return cmd_simulate(sim, out);
    if (*c) return cmd_calibrate(cal, out);
    if (*k) {
      if (*corrupt_opt) chk.corrupt_direction = corrupt;
      return cmd_check_gradient(chk, out);
    }
    if (*r) return cmd_report(rep, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const SingularStepError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const UnsupportedDirectionError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const LineSearchError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace phsid::cli
