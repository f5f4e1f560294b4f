#pragma once

// Benchmark configuration: INI files read with Boost.PropertyTree.
//
//   seed = 7                      # top-level keys
//   reference = oracle            # oracle | none
//   out = results                 # output directory (optional)
//   parallel = false
//
//   [problem]
//   operator = rank-structured    # partial-dft | rank-structured | gaussian
//                                 # | tomography | matrix
//   ...                           # see README for the full key list
//
//   [solver.<name>]               # one section per solver run
//   kind = projected-gradient     # thresholded-landweber | projected-landweber
//                                 # | projected-gradient | relaxed-radius | pocs

#include "l1pg/solvers.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1pg::harness {

/// Malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class ProblemKind { partial_dft, rank_structured, gaussian, tomography, matrix };
enum class TauRule { fixed, fraction, discrepancy };
enum class SolverKind {
  thresholded_landweber,
  projected_landweber,
  projected_gradient,
  relaxed_radius,
  pocs
};

struct ProblemConfig {
  ProblemKind op = ProblemKind::rank_structured;
  Index rows = 192;
  Index cols = 256;
  // partial-dft: cols is the transform length, rows the number of kept rows.
  // rank-structured: one top singular value, the rest evenly spaced in
  // [tail_min, tail_max].
  double top_singular_value = 0.99;
  double tail_max = 0.11;
  double tail_min = 0.01;
  // tomography: grid × grid pixels (cols = grid²), rows rays.
  Index grid = 16;
  std::string matrix_file;

  Index sparsity = 10;
  double noise_sigma = 0.0;

  TauRule tau_rule = TauRule::fraction;
  double tau = 0.0;          ///< fixed rule
  double tau_fraction = 0.05; ///< fraction rule: τ = fraction · ‖K*y‖_∞
  double radius = 0.0;       ///< l1 radius; 0 means ‖x̄(τ)‖₁ from the oracle
  double rescale_target = 0.999;
};

struct SolverConfig {
  std::string name;
  SolverKind kind = SolverKind::projected_gradient;
  StepPolicy policy;
  StoppingRule stop;
  int steps = 0; ///< relaxed radius: N (defaults to stop.max_iter)
};

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  bool oracle_reference = true;
  std::string out;
  bool parallel = false;
  int tradeoff_samples = 200;
  std::vector<double> levels = {0.9, 0.8, 0.7, 0.5, 0.2, 0.1, 0.05, 0.03};
  ProblemConfig problem;
  std::vector<SolverConfig> solvers;
};

inline std::string to_string(ProblemKind k) {
  switch (k) {
  case ProblemKind::partial_dft: return "partial-dft";
  case ProblemKind::rank_structured: return "rank-structured";
  case ProblemKind::gaussian: return "gaussian";
  case ProblemKind::tomography: return "tomography";
  case ProblemKind::matrix: return "matrix";
  }
  return "?";
}

inline std::string to_string(SolverKind k) {
  switch (k) {
  case SolverKind::thresholded_landweber: return "thresholded-landweber";
  case SolverKind::projected_landweber: return "projected-landweber";
  case SolverKind::projected_gradient: return "projected-gradient";
  case SolverKind::relaxed_radius: return "relaxed-radius";
  case SolverKind::pocs: return "pocs";
  }
  return "?";
}

inline SolverKind parse_solver_kind(const std::string &s) {
  for (auto k : {SolverKind::thresholded_landweber, SolverKind::projected_landweber,
                 SolverKind::projected_gradient, SolverKind::relaxed_radius, SolverKind::pocs})
    if (to_string(k) == s) return k;
  if (s == "ista") return SolverKind::thresholded_landweber;
  throw ConfigError("unknown solver kind '" + s + "'");
}

inline ProblemKind parse_problem_kind(const std::string &s) {
  for (auto k : {ProblemKind::partial_dft, ProblemKind::rank_structured, ProblemKind::gaussian,
                 ProblemKind::tomography, ProblemKind::matrix})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown operator '" + s + "'");
}

namespace detail {

using boost::property_tree::ptree;

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads typed values from one section and rejects keys nobody asked for.
class Section {
public:
  Section(const ptree &node, std::string name) : node_(node), name_(std::move(name)) {}

  template <class T> void read(const std::string &key, T &out) {
    seen_.insert(key);
    const auto child = node_.get_child_optional(ptree::path_type(key, '\0'));
    if (!child) return;
    out = convert<T>(key, trim(child->data()));
  }

  template <class T> void read(const std::string &key, std::optional<T> &out) {
    T v{};
    seen_.insert(key);
    if (!node_.get_child_optional(ptree::path_type(key, '\0'))) return;
    read(key, v);
    out = v;
  }

  void finish() const {
    for (const auto &[key, value] : node_) {
      if (!seen_.count(key))
        throw ConfigError("unknown key '" + key + "' in " + name_);
      if (!value.empty()) throw ConfigError("nested key '" + key + "' in " + name_);
    }
  }

private:
  template <class T> T convert(const std::string &key, const std::string &raw) const {
    const auto fail = [&]() -> ConfigError {
      return ConfigError("bad value '" + raw + "' for " + name_ + "." + key);
    };
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
      throw fail();
    } else {
      std::istringstream in(raw);
      T v{};
      if (!(in >> v)) throw fail();
      in >> std::ws;
      if (!in.eof()) throw fail();
      return v;
    }
  }

  const ptree &node_;
  std::string name_;
  std::set<std::string> seen_;
};

inline std::vector<double> parse_levels(const std::string &raw) {
  std::vector<double> out;
  std::istringstream in(raw);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::istringstream t(trim(tok));
    double v;
    if (!(t >> v) || !(v > 0.0)) throw ConfigError("bad error level '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("levels: empty list");
  return out;
}

inline void read_problem(const ptree &node, ProblemConfig &p) {
  Section s(node, "[problem]");
  std::string op = to_string(p.op), rule;
  s.read("operator", op);
  p.op = parse_problem_kind(op);
  s.read("rows", p.rows);
  s.read("cols", p.cols);
  s.read("top_singular_value", p.top_singular_value);
  s.read("tail_max", p.tail_max);
  s.read("tail_min", p.tail_min);
  s.read("grid", p.grid);
  s.read("matrix_file", p.matrix_file);
  s.read("sparsity", p.sparsity);
  s.read("noise_sigma", p.noise_sigma);
  s.read("tau_rule", rule);
  s.read("tau", p.tau);
  s.read("tau_fraction", p.tau_fraction);
  s.read("radius", p.radius);
  s.read("rescale_target", p.rescale_target);
  s.finish();
  if (rule == "fixed") p.tau_rule = TauRule::fixed;
  else if (rule == "fraction") p.tau_rule = TauRule::fraction;
  else if (rule == "discrepancy") p.tau_rule = TauRule::discrepancy;
  else if (!rule.empty()) throw ConfigError("unknown tau_rule '" + rule + "'");
}

inline SolverConfig read_solver(const ptree &node, const std::string &name) {
  SolverConfig c;
  c.name = name;
  Section s(node, "[solver." + name + "]");
  std::string kind = "projected-gradient", mode;
  s.read("kind", kind);
  c.kind = parse_solver_kind(kind);
  s.read("step", mode);
  s.read("beta_max", c.policy.beta_max);
  s.read("backtrack_factor", c.policy.backtrack_factor);
  s.read("max_backtracks", c.policy.max_backtracks);
  s.read("enforce_b2", c.policy.enforce_b2);
  s.read("max_iter", c.stop.max_iter);
  s.read("tol", c.stop.tol);
  s.read("steps", c.steps);
  s.finish();
  if (mode == "fixed-one") c.policy.mode = StepMode::fixed_one;
  else if (mode == "steepest-descent") c.policy.mode = StepMode::steepest_descent;
  else if (mode == "steepest-descent-with-b" || mode.empty())
    c.policy.mode = StepMode::steepest_descent_with_b;
  else throw ConfigError("unknown step mode '" + mode + "'");
  return c;
}

} // namespace detail

/// Structural checks shared by parsed and programmatic configs.
inline void validate(const BenchmarkConfig &cfg) {
  const auto &p = cfg.problem;
  const auto need = [](bool ok, const std::string &msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (p.op != ProblemKind::matrix) {
    need(p.rows > 0 && p.cols > 0, "problem: rows and cols must be positive");
    need(p.sparsity >= 0 && p.sparsity <= p.cols, "problem: sparsity must lie in [0, cols]");
  } else {
    need(!p.matrix_file.empty(), "problem: operator = matrix needs matrix_file");
  }
  if (p.op == ProblemKind::partial_dft) need(p.rows <= p.cols, "problem: partial-dft keeps at most cols rows");
  if (p.op == ProblemKind::rank_structured) {
    need(p.top_singular_value > 0.0, "problem: top_singular_value must be > 0");
    need(p.tail_min >= 0.0 && p.tail_max >= p.tail_min, "problem: need 0 <= tail_min <= tail_max");
  }
  if (p.op == ProblemKind::tomography)
    need(p.grid >= 2 && p.cols == p.grid * p.grid, "problem: tomography needs grid >= 2 and cols = grid^2");
  need(p.noise_sigma >= 0.0, "problem: noise_sigma must be >= 0");
  need(p.radius >= 0.0, "problem: radius must be >= 0");
  need(p.rescale_target > 0.0 && p.rescale_target < 1.0, "problem: rescale_target must lie in (0, 1)");
  if (p.tau_rule == TauRule::fixed) need(p.tau > 0.0, "problem: tau must be > 0");
  if (p.tau_rule == TauRule::fraction)
    need(p.tau_fraction > 0.0 && p.tau_fraction < 1.0, "problem: tau_fraction must lie in (0, 1)");
  if (p.tau_rule == TauRule::discrepancy) need(p.noise_sigma > 0.0, "problem: tau_rule = discrepancy needs noise_sigma > 0");
  need(cfg.tradeoff_samples >= 2, "tradeoff_samples must be >= 2");
  std::set<std::string> names;
  for (const auto &s : cfg.solvers) {
    need(names.insert(s.name).second, "duplicate solver name '" + s.name + "'");
    need(!s.name.empty() && s.name.find_first_of("/\\ ") == std::string::npos,
         "solver names must be non-empty without spaces or slashes");
    try {
      s.policy.validate();
    } catch (const std::invalid_argument &e) {
      throw ConfigError("[solver." + s.name + "]: " + e.what());
    }
    need(s.stop.max_iter >= 0 && s.stop.tol >= 0.0, "[solver." + s.name + "]: bad stopping rule");
    need(s.steps >= 0, "[solver." + s.name + "]: steps must be >= 0");
  }
}

inline BenchmarkConfig parse_config(std::istream &in) {
  detail::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  BenchmarkConfig cfg;
  std::string reference = "oracle";
  std::optional<std::string> levels;
  bool have_problem = false;
  detail::ptree top;
  for (const auto &[key, node] : pt) {
    if (key == "problem") {
      detail::read_problem(node, cfg.problem);
      have_problem = true;
    } else if (key.rfind("solver.", 0) == 0) {
      cfg.solvers.push_back(detail::read_solver(node, key.substr(7)));
    } else if (node.empty()) {
      top.push_back({key, node});
    } else {
      throw ConfigError("unknown section [" + key + "]");
    }
  }
  detail::Section s(top, "top level");
  s.read("seed", cfg.seed);
  s.read("reference", reference);
  s.read("out", cfg.out);
  s.read("parallel", cfg.parallel);
  s.read("tradeoff_samples", cfg.tradeoff_samples);
  s.read("levels", levels);
  s.finish();
  if (reference == "oracle") cfg.oracle_reference = true;
  else if (reference == "none") cfg.oracle_reference = false;
  else throw ConfigError("reference must be 'oracle' or 'none'");
  if (levels) cfg.levels = detail::parse_levels(*levels);
  if (!have_problem) throw ConfigError("config: missing [problem] section");
  validate(cfg);
  return cfg;
}

inline BenchmarkConfig parse_config_string(const std::string &text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline BenchmarkConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

} // namespace l1pg::harness
