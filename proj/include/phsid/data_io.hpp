#pragma once

// Synthetic reference data and the on-disk formats.
//
//  * model JSON:   {"n", "k", "J", "R", ["Q"], "B", "x_hat"}; Q omitted means identity
//  * config JSON:  CalibrationConfig fields, all optional
//  * result JSON:  identified (J, R, x_hat) plus run summary
//  * signal CSV:   header t,<name>_1,...,<name>_m; one row per grid node, %.17g
//  * history CSV:  iter,cost,sigma (sigma is 0 for the initial iterate)

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "phsid/calibration.hpp"
#include "phsid/random.hpp"

namespace phsid {

using ojson = nlohmann::ordered_json;

struct Reference {
  Signal u;
  Signal y_data;
};

/// Noisy input and the noise-free Euler output of `sys` driven by it.
inline Reference generate_reference(const ReducedPHSystem& sys, const TimeGrid& grid, const NoiseSpec& spec) {
  Signal u = generate_input(grid, sys.ports(), spec);
  Signal y = output(sys, simulate_euler(sys, u));
  return {std::move(u), std::move(y)};
}

/// Text form with 17 significant digits.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  return out;
}

inline ojson parse_json(std::istream& in) {
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline const ojson& field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

inline double as_double(const ojson& v, const std::string& what) {
  if (!v.is_number()) throw ParseError(what + " must be a number");
  return v.get<double>();
}

inline Eigen::Index as_dim(const ojson& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ParseError(std::string(what) + " must be a positive integer");
  }
  return static_cast<Eigen::Index>(v.get<long long>());
}

inline Matrix matrix_from_json(const ojson& v, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!v.is_array()) throw ParseError(std::string(name) + " must be an array of rows");
  if (static_cast<Eigen::Index>(v.size()) != rows) {
    throw DimensionError(std::string(name) + " has " + std::to_string(v.size()) + " rows, expected " +
                         std::to_string(rows));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const ojson& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw ParseError(std::string(name) + " row " + std::to_string(i) + " is not an array");
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError(std::string(name) + " row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(cols));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = as_double(row[static_cast<std::size_t>(j)], std::string(name) + " entry");
    }
  }
  return m;
}

inline Vector vector_from_json(const ojson& v, Eigen::Index n, const char* name) {
  if (!v.is_array()) throw ParseError(std::string(name) + " must be an array");
  if (static_cast<Eigen::Index>(v.size()) != n) {
    throw DimensionError(std::string(name) + " has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = as_double(v[static_cast<std::size_t>(i)], std::string(name) + " entry");
  return x;
}

inline ojson to_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ojson to_json(const Vector& x) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x(i));
  return a;
}

inline void write_json(std::ostream& out, const ojson& j) { out << j.dump(2) << '\n'; }

template <typename F>
auto with_invariant_name(const char* block, F&& f) {
  try {
    return f();
  } catch (const InvariantError& e) {
    throw InvariantError(e.invariant(), std::string(block) + ": " + e.what());
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t line) {
  std::string t = s;
  while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  if (pos != t.size()) throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  return v;
}

/// Header plus numeric rows of a fixed width.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, lineno));
    rows.push_back(std::move(row));
  }
  return {std::move(header), std::move(rows)};
}

}  // namespace detail

// ---------------------------------------------------------------- models

inline PHSystem model_from_json(const ojson& j) {
  if (!j.is_object()) throw ParseError("model file must hold a JSON object");
  const Eigen::Index n = detail::as_dim(detail::field(j, "n"), "n");
  const Eigen::Index k = detail::as_dim(detail::field(j, "k"), "k");
  const Matrix J = detail::matrix_from_json(detail::field(j, "J"), n, n, "J");
  const Matrix R = detail::matrix_from_json(detail::field(j, "R"), n, n, "R");
  const Matrix B = detail::matrix_from_json(detail::field(j, "B"), n, k, "B");
  const Vector x = detail::vector_from_json(detail::field(j, "x_hat"), n, "x_hat");
  auto Jm = detail::with_invariant_name("J", [&] { return SkewSymmetricMatrix::from_dense(J); });
  auto Rm = detail::with_invariant_name("R", [&] { return PSDMatrix::from_dense(R); });
  auto Qm = detail::with_invariant_name("Q", [&] {
    return j.contains("Q") ? SPDMatrix::from_dense(detail::matrix_from_json(j["Q"], n, n, "Q"))
                           : SPDMatrix::identity(n);
  });
  if (!B.allFinite() || !x.allFinite()) throw InvariantError("finiteness", "B and x_hat must be finite");
  return PHSystem(std::move(Jm), std::move(Rm), std::move(Qm), B, x);
}

/// Canonical field order n, k, J, R, [Q], B, x_hat; identity Q is omitted.
inline ojson model_to_json(const PHSystem& sys) {
  ojson j;
  j["n"] = sys.states();
  j["k"] = sys.ports();
  j["J"] = detail::to_json(sys.J.dense());
  j["R"] = detail::to_json(sys.R.dense());
  if (!sys.Q.is_identity()) j["Q"] = detail::to_json(sys.Q.dense());
  j["B"] = detail::to_json(sys.B);
  j["x_hat"] = detail::to_json(sys.x_hat);
  return j;
}

inline PHSystem load_model(const std::string& path) {
  auto in = detail::open_in(path);
  return model_from_json(detail::parse_json(in));
}

inline void save_model(const std::string& path, const PHSystem& sys) {
  auto out = detail::open_out(path);
  detail::write_json(out, model_to_json(sys));
}

// --------------------------------------------------------------- signals

inline void write_signal_csv(std::ostream& out, const Signal& s, const std::string& name) {
  out << 't';
  for (Eigen::Index i = 0; i < s.channels(); ++i) out << ',' << name << '_' << (i + 1);
  out << '\n';
  for (std::size_t j = 0; j < s.grid().nodes(); ++j) {
    out << format_double(s.grid().time(j));
    for (Eigen::Index i = 0; i < s.channels(); ++i) out << ',' << format_double(s.values()(Eigen::Index(j), i));
    out << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& t, const std::string& name) {
  write_signal_csv(out, Signal(t.grid(), t.states()), name);
}

/// Reads a signal and rebuilds its uniform grid from the time column. Rows
/// must sit on t_j = j * t_end / K.
inline Signal read_signal_csv(std::istream& in) {
  auto [header, rows] = detail::read_table(in);
  if (header.size() < 2 || header[0] != "t") {
    throw ParseError("signal CSV header must be 't,<name>_1,...'");
  }
  if (rows.size() < 2) throw InvariantError("grid-length", "a signal needs at least two grid nodes");
  const std::size_t m = header.size() - 1;
  const TimeGrid grid(rows.back()[0], rows.size() - 1);
  if (rows.front()[0] != 0.0) throw InvariantError("grid-length", "first grid node must be t = 0");
  const double tol = 1e-9 * grid.t_end();
  SampleMatrix v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (std::abs(rows[j][0] - grid.time(j)) > tol) {
      throw InvariantError("grid-length", "row " + std::to_string(j) + " has t = " + format_double(rows[j][0]) +
                                              ", a uniform grid of " + std::to_string(grid.steps()) +
                                              " steps expects " + format_double(grid.time(j)) +
                                              " (missing or extra row?)");
    }
    for (std::size_t i = 0; i < m; ++i) v(Eigen::Index(j), Eigen::Index(i)) = rows[j][i + 1];
  }
  return Signal(grid, std::move(v));
}

inline Signal load_signal_csv(const std::string& path) {
  auto in = detail::open_in(path);
  return read_signal_csv(in);
}

inline void save_signal_csv(const std::string& path, const Signal& s, const std::string& name) {
  auto out = detail::open_out(path);
  write_signal_csv(out, s, name);
}

inline void save_trajectory_csv(const std::string& path, const Trajectory& t, const std::string& name) {
  auto out = detail::open_out(path);
  write_trajectory_csv(out, t, name);
}

/// Requires `s` to live on `grid` with the given channel count.
inline void require_signal_shape(const Signal& s, const TimeGrid& grid, Eigen::Index channels, const char* what) {
  if (!(s.grid() == grid)) {
    throw InvariantError("grid-length", std::string(what) + " has " + std::to_string(s.grid().nodes()) +
                                            " nodes on [0, " + format_double(s.grid().t_end()) + "], expected " +
                                            std::to_string(grid.nodes()) + " on [0, " +
                                            format_double(grid.t_end()) + "]");
  }
  if (s.channels() != channels) {
    throw DimensionError(std::string(what) + " has " + std::to_string(s.channels()) + " channels, expected " +
                         std::to_string(channels));
  }
}

// ---------------------------------------------------------------- config

inline ojson config_to_json(const CalibrationConfig& c) {
  ojson j;
  j["sigma_init"] = c.sigma_init;
  j["gamma"] = c.gamma;
  j["eps_stop"] = c.eps_stop;
  j["max_iter"] = c.max_iter;
  j["max_halvings"] = c.max_halvings;
  j["structure"] = to_string(c.structure);
  j["psd_mode"] = to_string(c.psd_mode);
  return j;
}

inline CalibrationConfig config_from_json(const ojson& j) {
  if (!j.is_object()) throw ParseError("config file must hold a JSON object");
  CalibrationConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "sigma_init") {
      c.sigma_init = detail::as_double(value, key);
    } else if (key == "gamma") {
      c.gamma = detail::as_double(value, key);
    } else if (key == "eps_stop") {
      c.eps_stop = detail::as_double(value, key);
    } else if (key == "max_iter" || key == "max_halvings") {
      if (!value.is_number_integer()) throw ParseError(key + " must be an integer");
      (key == "max_iter" ? c.max_iter : c.max_halvings) = value.get<int>();
    } else if (key == "structure") {
      const std::string s = value.is_string() ? value.get<std::string>() : "";
      if (s == "full") {
        c.structure = BasisStructure::full;
      } else if (s == "diagonal_R") {
        c.structure = BasisStructure::diagonal_R;
      } else {
        throw ParseError("structure must be \"full\" or \"diagonal_R\"");
      }
    } else if (key == "psd_mode") {
      const std::string s = value.is_string() ? value.get<std::string>() : "";
      if (s == "project") {
        c.psd_mode = PsdMode::project;
      } else if (s == "none") {
        c.psd_mode = PsdMode::none;
      } else {
        throw ParseError("psd_mode must be \"project\" or \"none\"");
      }
    } else {
      throw ParseError("unknown config field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline CalibrationConfig load_config(const std::string& path) {
  auto in = detail::open_in(path);
  return config_from_json(detail::parse_json(in));
}

inline void save_config(const std::string& path, const CalibrationConfig& c) {
  auto out = detail::open_out(path);
  detail::write_json(out, config_to_json(c));
}

// ---------------------------------------------------------------- result

/// Summary written by the calibrate command. J, R and x_hat are in reduced
/// coordinates (they coincide with the model's when Q = I).
struct ResultSummary {
  ParameterPoint v_opt;
  int iterations = 0;
  bool converged = false;
  double final_cost = 0.0;
  std::string structure = "full";
  std::string diagnostic;
};

inline ResultSummary summarize(const CalibrationResult& r, const CalibrationConfig& cfg) {
  return {r.v_opt, r.iterations, r.converged, r.final_cost(), to_string(cfg.structure), r.diagnostic};
}

inline ojson result_to_json(const ResultSummary& r) {
  ojson j;
  j["n"] = r.v_opt.dim();
  j["J"] = detail::to_json(r.v_opt.J.dense());
  j["R"] = detail::to_json(r.v_opt.R.dense());
  j["x_hat"] = detail::to_json(r.v_opt.w_hat);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["final_cost"] = r.final_cost;
  j["structure"] = r.structure;
  j["diagnostic"] = r.diagnostic;
  return j;
}

inline ResultSummary result_from_json(const ojson& j) {
  if (!j.is_object()) throw ParseError("result file must hold a JSON object");
  const Eigen::Index n = detail::as_dim(detail::field(j, "n"), "n");
  auto J = detail::with_invariant_name(
      "J", [&] { return SkewSymmetricMatrix::from_dense(detail::matrix_from_json(detail::field(j, "J"), n, n, "J")); });
  auto R = detail::with_invariant_name(
      "R", [&] { return PSDMatrix::from_dense(detail::matrix_from_json(detail::field(j, "R"), n, n, "R")); });
  Vector x = detail::vector_from_json(detail::field(j, "x_hat"), n, "x_hat");
  const ojson& it = detail::field(j, "iterations");
  const ojson& conv = detail::field(j, "converged");
  const ojson& st = detail::field(j, "structure");
  const ojson& diag = detail::field(j, "diagnostic");
  if (!it.is_number_integer()) throw ParseError("iterations must be an integer");
  if (!conv.is_boolean()) throw ParseError("converged must be a boolean");
  if (!st.is_string() || !diag.is_string()) throw ParseError("structure and diagnostic must be strings");
  return {ParameterPoint(std::move(J), std::move(R), std::move(x)), it.get<int>(), conv.get<bool>(),
          detail::as_double(detail::field(j, "final_cost"), "final_cost"), st.get<std::string>(),
          diag.get<std::string>()};
}

inline void save_result(const std::string& path, const ResultSummary& r) {
  auto out = detail::open_out(path);
  detail::write_json(out, result_to_json(r));
}

inline ResultSummary load_result(const std::string& path) {
  auto in = detail::open_in(path);
  return result_from_json(detail::parse_json(in));
}

// --------------------------------------------------------------- history

struct HistoryRow {
  int iter;
  double cost;
  double sigma;
};

inline std::vector<HistoryRow> history_rows(const CalibrationResult& r) {
  std::vector<HistoryRow> rows;
  for (std::size_t i = 0; i < r.cost_history.size(); ++i) {
    rows.push_back({static_cast<int>(i), r.cost_history[i], i == 0 ? 0.0 : r.step_sizes[i - 1]});
  }
  return rows;
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << "iter,cost,sigma\n";
  for (const auto& r : rows) out << r.iter << ',' << format_double(r.cost) << ',' << format_double(r.sigma) << '\n';
}

inline std::vector<HistoryRow> read_history_csv(std::istream& in) {
  auto [header, rows] = detail::read_table(in);
  if (header != std::vector<std::string>{"iter", "cost", "sigma"}) {
    throw ParseError("history CSV header must be 'iter,cost,sigma'");
  }
  if (rows.empty()) throw ParseError("history CSV has no rows");
  std::vector<HistoryRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][0] != static_cast<double>(i)) throw ParseError("history iterations must count up from 0");
    out.push_back({static_cast<int>(i), rows[i][1], rows[i][2]});
  }
  return out;
}

inline void save_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
  auto out = detail::open_out(path);
  write_history_csv(out, rows);
}

inline std::vector<HistoryRow> load_history_csv(const std::string& path) {
  auto in = detail::open_in(path);
  return read_history_csv(in);
}

}  // namespace phsid
