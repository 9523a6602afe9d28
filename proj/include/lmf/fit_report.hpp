#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <charconv>
#include <span>
#include <string>

#include "json.hpp"

namespace lmf {

enum class Method { acf, psd, dfa };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::acf: return "acf";
    case Method::psd: return "psd";
    case Method::dfa: return "dfa";
  }
  return "?";
}

/// Output of one long-memory estimator. `window` is in lag units for acf
/// and dfa (box sizes), frequency units for psd.
struct FitReport {
  Method method = Method::acf;
  double gamma = 0;
  std::optional<double> c0;
  double window_lower = 0;
  double window_upper = 0;
  std::map<std::string, double> diagnostics;
};

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["gamma"] = r.gamma;
  j["c0"] = r.c0 ? nlohmann::json(*r.c0) : nlohmann::json(nullptr);
  j["window"] = {r.window_lower, r.window_upper};
  j["diagnostics"] = r.diagnostics;
  return j;
}

/// Two-column `x,y` CSV for plotting curves.
inline void write_xy_csv(std::ostream& out, std::span<const double> x, std::span<const double> y) {
  out << "x,y\n";
  char buf[64];
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    auto e1 = std::to_chars(buf, buf + 32, x[i]).ptr;
    *e1++ = ',';
    auto e2 = std::to_chars(e1, buf + sizeof buf, y[i]).ptr;
    out.write(buf, e2 - buf);
    out.put('\n');
  }
}

}  // namespace lmf
