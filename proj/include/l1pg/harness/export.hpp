#pragma once

// CSV writers for traces, iterate paths and trade-off curves. Numbers are
// written with 17 significant digits so they round-trip exactly.

#include "l1pg/homotopy.hpp"
#include "l1pg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace l1pg::harness {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short form for labels such as error levels.
inline std::string format_level(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline constexpr const char *trace_header =
    "n,beta,l1_norm,discrepancy,step_norm,b2,backtracks,time_s,rel_error";

inline void write_trace_csv(std::ostream &out, const SolverTrace &trace) {
  out << trace_header << '\n';
  for (const auto &r : trace.records) {
    out << r.n << ',' << format_number(r.beta) << ',' << format_number(r.l1_norm) << ','
        << format_number(r.discrepancy) << ',' << format_number(r.step_norm) << ','
        << (r.b2_satisfied ? 1 : 0) << ',' << r.backtracks << ',' << format_number(r.time_s)
        << ',';
    if (r.rel_error) out << format_number(*r.rel_error);
    out << '\n';
  }
}

/// log10 D for plotting; an exact fit is clamped to the smallest normal
/// double so every field stays finite.
inline double log10_discrepancy(double d) {
  return std::log10(std::max(d, std::numeric_limits<double>::min()));
}

/// (‖x^(n)‖₁, log10 D(x^(n))) from the starting point on, for overlaying
/// iterate paths on the trade-off curve.
inline void write_path_csv(std::ostream &out, const SolverTrace &trace) {
  out << "n,l1_norm,log10_discrepancy\n";
  out << 0 << ',' << format_number(trace.initial_l1_norm) << ','
      << format_number(log10_discrepancy(trace.initial_discrepancy)) << '\n';
  for (const auto &r : trace.records)
    out << r.n + 1 << ',' << format_number(r.l1_norm) << ','
        << format_number(log10_discrepancy(r.discrepancy)) << '\n';
}

inline void write_tradeoff_csv(std::ostream &out, const std::vector<TradeoffPoint> &points) {
  out << "tau,l1_norm,discrepancy,support_size\n";
  for (const auto &p : points)
    out << format_number(p.tau) << ',' << format_number(p.l1_norm) << ','
        << format_number(p.discrepancy) << ',' << p.support_size << '\n';
}

/// Opens `path` (creating parent directories) and hands the stream to
/// `body`; any failure is an I/O error.
inline void write_file(const std::filesystem::path &path,
                       const std::function<void(std::ostream &)> &body) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace l1pg::harness
