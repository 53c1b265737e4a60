#pragma once

// Diagnostics CSV: one row per report, 17 significant digits so that every
// f64 survives the round trip exactly.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "els2/energy.hpp"

namespace els2 {

inline constexpr const char* kDiagnosticsHeader =
    "t,KE,E,E_partial,E_antipartial,deg_raw,deg,residual,dissipation,mean_ux,mean_uy,mean_uz,local_max,dt,"
    "energy_residual";

inline constexpr int kDiagnosticsColumns = 15;

/// Written next to diagnostics.csv when convergence is detected; in_fit marks
/// the samples the decay fit used.
inline constexpr const char* kConvergenceHeader = "t,u_l2,d_minus_dinf_l2,grad_u_l2,in_fit";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_diagnostics_header(std::ostream& out) {
  out << kDiagnosticsHeader << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing diagnostics header");
}

inline void write_diagnostics_row(const EnergyReport& r, std::ostream& out) {
  const double cols[] = {r.t,        r.KE,         r.E,          r.E_partial,  r.E_antipartial,
                         r.deg_raw,  r.residual,   r.dissipation, r.mean_u.x(), r.mean_u.y(),
                         r.mean_u.z(), r.local_max, r.dt,          r.energy_residual};
  std::string line;
  for (int i = 0; i < 14; ++i) {
    if (i) line += ',';
    line += format_double(cols[i]);
    if (i == 5) line += ',' + std::to_string(r.deg);
  }
  out << line << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing diagnostics row");
}

namespace detail {

inline std::vector<double> parse_numeric_row(const std::string& line, int line_no, int columns, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    char* end = nullptr;
    const double x = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
      throw Error(ErrorKind::parse, what + " line " + std::to_string(line_no) + ": bad value '" + cell + "'");
    }
    v.push_back(x);
  }
  if (static_cast<int>(v.size()) != columns) {
    throw Error(ErrorKind::parse, what + " line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                      " columns, found " + std::to_string(v.size()));
  }
  return v;
}

inline void expect_header(std::istream& in, const char* header, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, what + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error(ErrorKind::parse, what + " header mismatch: '" + line + "'");
}

}  // namespace detail

inline std::vector<EnergyReport> read_diagnostics(std::istream& in) {
  detail::expect_header(in, kDiagnosticsHeader, "diagnostics CSV");
  std::vector<EnergyReport> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto v = detail::parse_numeric_row(line, line_no, kDiagnosticsColumns, "diagnostics");
    EnergyReport r;
    r.t = v[0];
    r.KE = v[1];
    r.E = v[2];
    r.E_partial = v[3];
    r.E_antipartial = v[4];
    r.deg_raw = v[5];
    r.deg = static_cast<int>(v[6]);
    r.residual = v[7];
    r.dissipation = v[8];
    r.mean_u = Vec3(v[9], v[10], v[11]);
    r.local_max = v[12];
    r.dt = v[13];
    r.energy_residual = v[14];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace els2
