#pragma once

// Post-run analysis of a diagnostics CSV: decay fit, quantization against
// the nearest harmonic-map energy, and the energy identity checks.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "els2/diagnostics.hpp"
#include "els2/longtime.hpp"

namespace els2 {

struct ConvergenceSeries {
  std::vector<double> t, u_l2, d_minus_dinf, grad_u_l2;
  std::vector<bool> in_fit;
};

inline ConvergenceSeries read_convergence_csv(std::istream& in) {
  detail::expect_header(in, kConvergenceHeader, "convergence CSV");
  ConvergenceSeries s;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto v = detail::parse_numeric_row(line, line_no, 5, "convergence");
    s.t.push_back(v[0]);
    s.u_l2.push_back(v[1]);
    s.d_minus_dinf.push_back(v[2]);
    s.grad_u_l2.push_back(v[3]);
    s.in_fit.push_back(v[4] != 0.0);
  }
  return s;
}

struct Analysis {
  std::string source;  // "convergence" or "proxy"
  std::size_t reports = 0;
  double t_final = 0.0;
  std::optional<double> T0;
  double eps0_margin = 0.0;
  std::optional<DecayFit> fit;
  std::string fit_error;
  std::vector<double> fit_t, fit_y;
  std::optional<Quantization> quantization;
  std::string quantization_error;
  int deg_final = 0;
  double max_split_sum_error = 0.0;     // |E_p + E_a - E|
  double max_split_degree_error = 0.0;  // |E_p - E_a - 4 pi deg_raw|
  double max_mean_u = 0.0;
  bool energy_monotone = true;
  double max_energy_increase = 0.0;
};

/// Proxy samples below this are round-off, not decay.
inline constexpr double kProxyFloor = 1e-12;

inline Analysis analyze(const std::vector<EnergyReport>& rows, double eps0,
                        const std::optional<ConvergenceSeries>& conv = std::nullopt) {
  if (rows.empty()) throw Error(ErrorKind::insufficient_data, "diagnostics CSV has no rows");
  Analysis a;
  a.reports = rows.size();
  a.t_final = rows.back().t;
  a.deg_final = rows.back().deg;
  a.eps0_margin = smallness_check(rows.front(), eps0).margin;
  for (const auto& r : rows) {
    const auto s = smallness_check(r, eps0);
    if (s.ok) {
      a.T0 = r.t;
      a.eps0_margin = s.margin;
      break;
    }
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& r = rows[j];
    a.max_split_sum_error = std::max(a.max_split_sum_error, std::abs(r.E_partial + r.E_antipartial - r.E));
    a.max_split_degree_error =
        std::max(a.max_split_degree_error, std::abs(r.E_partial - r.E_antipartial - kFourPi * r.deg_raw));
    a.max_mean_u = std::max(a.max_mean_u, r.mean_u.norm());
    if (j > 0) {
      const double rise = (r.KE + r.E) - (rows[j - 1].KE + rows[j - 1].E);
      a.max_energy_increase = std::max(a.max_energy_increase, rise);
    }
  }
  a.energy_monotone = a.max_energy_increase <= 1e-8;

  const double t_a = std::max(a.T0.value_or(rows.front().t), 0.2 * a.t_final);
  if (conv) {
    a.source = "convergence";
    for (std::size_t j = 0; j < conv->t.size(); ++j) {
      if (!conv->in_fit[j]) continue;
      a.fit_t.push_back(conv->t[j]);
      a.fit_y.push_back(conv->u_l2[j] + conv->d_minus_dinf[j]);
    }
  } else {
    a.source = "proxy";
    for (const auto& r : rows) {
      const double y = std::sqrt(2.0 * r.KE) + r.residual;
      if (r.t >= t_a && y > kProxyFloor) {
        a.fit_t.push_back(r.t);
        a.fit_y.push_back(y);
      }
    }
  }
  try {
    a.fit = fit_decay(a.fit_t, a.fit_y, a.fit_t.empty() ? 0.0 : a.fit_t.front(), a.fit_t.empty() ? 0.0 : a.fit_t.back());
  } catch (const Error& e) {
    a.fit_error = std::string(to_string(e.kind())) + ": " + e.what();
  }

  std::vector<double> E;
  for (const auto& r : rows) E.push_back(r.E);
  try {
    // Harmonic maps of degree k carry energy 4 pi |k|.
    a.quantization = quantization_check(E, kFourPi * std::abs(a.deg_final));
  } catch (const Error& e) {
    a.quantization_error = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return a;
}

inline void write_analysis(const Analysis& a, const std::filesystem::path& summary, const std::filesystem::path& fit_csv) {
  std::ofstream out(summary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + summary.string());
  out << "source: " << a.source << '\n'
      << "reports: " << a.reports << '\n'
      << "t_final: " << format_double(a.t_final) << '\n'
      << "T0: " << (a.T0 ? format_double(*a.T0) : std::string("absent")) << '\n'
      << "eps0_margin: " << format_double(a.eps0_margin) << '\n';
  if (a.fit) {
    out << "C1: " << format_double(a.fit->C1) << '\n'
        << "C2: " << format_double(a.fit->C2) << '\n'
        << "rms_log_residual: " << format_double(a.fit->rms_log_residual) << '\n'
        << "fit_window: " << format_double(a.fit->t_a) << ' ' << format_double(a.fit->t_b) << '\n'
        << "fit_samples: " << a.fit->samples << '\n';
  } else {
    out << "fit: " << a.fit_error << '\n';
  }
  if (a.quantization) {
    out << "M0: " << a.quantization->M0 << '\n'
        << "quant_residual: " << format_double(a.quantization->residual) << '\n'
        << "E_tail: " << format_double(a.quantization->E_tail) << '\n';
  } else {
    out << "quantization: " << a.quantization_error << '\n';
  }
  out << "deg_final: " << a.deg_final << '\n'
      << "max_split_sum_error: " << format_double(a.max_split_sum_error) << '\n'
      << "max_split_degree_error: " << format_double(a.max_split_degree_error) << '\n'
      << "max_mean_u: " << format_double(a.max_mean_u) << '\n'
      << "energy_monotone: " << (a.energy_monotone ? "true" : "false") << '\n'
      << "max_energy_increase: " << format_double(a.max_energy_increase) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + summary.string());

  std::ofstream fc(fit_csv);
  if (!fc) throw Error(ErrorKind::io, "cannot write " + fit_csv.string());
  fc << "t,observed,fitted\n";
  for (std::size_t j = 0; j < a.fit_t.size(); ++j) {
    const double fitted = a.fit ? a.fit->C1 * std::exp(-a.fit->C2 * a.fit_t[j]) : 0.0;
    fc << format_double(a.fit_t[j]) << ',' << format_double(a.fit_y[j]) << ',' << format_double(fitted) << '\n';
  }
  if (!fc) throw Error(ErrorKind::io, "write failed for " + fit_csv.string());
}

/// Reads `csv` (and a sibling convergence.csv when present), writes
/// analysis.txt and fit.csv into `out_dir`.
inline Analysis analyze_file(const std::filesystem::path& csv, double eps0, const std::filesystem::path& out_dir) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::io, "cannot open diagnostics " + csv.string());
  const auto rows = read_diagnostics(in);
  std::optional<ConvergenceSeries> conv;
  const auto conv_path = csv.parent_path() / "convergence.csv";
  if (std::filesystem::exists(conv_path)) {
    std::ifstream cin(conv_path);
    if (!cin) throw Error(ErrorKind::io, "cannot open " + conv_path.string());
    conv = read_convergence_csv(cin);
  }
  auto a = analyze(rows, eps0, conv);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  write_analysis(a, out_dir / "analysis.txt", out_dir / "fit.csv");
  return a;
}

}  // namespace els2
