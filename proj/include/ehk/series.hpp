#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <ostream>
#include <vector>

#include "ehk/csv.hpp"
#include "ehk/error.hpp"

namespace ehk {

/// c_fi(t) on a time grid, optionally with Monte Carlo standard errors.
struct CorrelationSeries {
  std::vector<double> times;
  std::vector<std::complex<double>> values;
  std::optional<std::vector<double>> std_error;

  std::size_t size() const { return times.size(); }

  void validate() const {
    if (values.size() != times.size() || (std_error && std_error->size() != times.size())) {
      throw InvalidArgument("correlation series: length mismatch");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw InvalidArgument("correlation series: times not strictly increasing");
    }
  }
};

/// t,re,im,stderr
inline void write_correlation_csv(std::ostream& os, const CorrelationSeries& s) {
  os << "t,re,im,stderr\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    csv::row(os, s.times[i], s.values[i].real(), s.values[i].imag(), s.std_error ? (*s.std_error)[i] : 0.0);
  }
}

enum class Method { eHK, HK, uniformWKB, exactFormula, gridFlux };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::eHK: return "eHK";
    case Method::HK: return "HK";
    case Method::uniformWKB: return "uniformWKB";
    case Method::exactFormula: return "exactFormula";
    case Method::gridFlux: return "gridFlux";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::eHK, Method::HK, Method::uniformWKB, Method::exactFormula, Method::gridFlux}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown transmission method '" + std::string(s) + "'");
}

/// Energy-resolved transmission probability.
struct TransmissionCurve {
  std::vector<double> energies;
  std::vector<double> p;
  Method method = Method::exactFormula;

  std::size_t size() const { return energies.size(); }
};

/// E/V0,P,method  (header written by the caller once per file)
inline void write_transmission_rows(std::ostream& os, const TransmissionCurve& c, double v0) {
  for (std::size_t i = 0; i < c.size(); ++i) csv::row(os, c.energies[i] / v0, c.p[i], to_string(c.method));
}

/// Uniform grid of n+1 points on [0, t_max]; a single point when t_max == 0.
inline std::vector<double> uniform_times(double t_max, std::size_t n) {
  if (t_max <= 0.0 || n == 0) return {0.0};
  std::vector<double> ts(n + 1);
  for (std::size_t i = 0; i <= n; ++i) ts[i] = t_max * static_cast<double>(i) / static_cast<double>(n);
  return ts;
}

}  // namespace ehk
