#include "bld/schedule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "bld/error.hpp"

namespace bld {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::Custom: return "custom";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "linear") return ScheduleKind::Linear;
  if (lower == "cosine") return ScheduleKind::Cosine;
  if (lower == "custom") return ScheduleKind::Custom;
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

std::vector<double> beta_from_k(std::span<const double> k) {
  if (k.size() < 2) throw ValidationError("k must hold at least k^0 and k^1");
  if (k[0] != 1.0) throw ValidationError("k^0 must equal 1");
  std::vector<double> beta(k.size(), 0.0);
  for (std::size_t t = 1; t < k.size(); ++t) {
    if (!(k[t] >= 0.0 && k[t] <= 1.0))
      throw ValidationError("k^" + std::to_string(t) + " outside [0,1]");
    if (!(k[t] < k[t - 1]))
      throw ValidationError("k not strictly decreasing at t=" + std::to_string(t));
    beta[t] = 1.0 - k[t] / k[t - 1];
  }
  return beta;
}

namespace {

NoiseSchedule from_retain(ScheduleKind kind, std::vector<double> k) {
  NoiseSchedule s;
  s.kind = kind;
  s.T = static_cast<int>(k.size()) - 1;
  s.beta = beta_from_k(k);
  s.b.assign(k.size(), 0.0);
  for (int t = 1; t <= s.T; ++t)
    s.b[t] = (1.0 - s.beta[t]) * s.b[t - 1] + 0.5 * s.beta[t];
  s.k = std::move(k);
  return s;
}

}  // namespace

NoiseSchedule build_schedule(ScheduleKind kind, int T) {
  if (T < 1) throw ConfigError("schedule needs T >= 1, got " + std::to_string(T));
  std::vector<double> k(static_cast<std::size_t>(T) + 1);
  switch (kind) {
    case ScheduleKind::Linear:
      for (int t = 0; t <= T; ++t) k[t] = 1.0 - static_cast<double>(t) / T;
      break;
    case ScheduleKind::Cosine:
      for (int t = 0; t <= T; ++t) {
        const double c = std::cos(std::numbers::pi * t / (2.0 * T));
        k[t] = c * c;
      }
      break;
    case ScheduleKind::Custom:
      throw ConfigError("custom schedules need an explicit k array");
  }
  // cos^2(pi/2) is ~4e-33, not 0; the chain must end exactly at B(0.5).
  k[T] = 0.0;
  return from_retain(kind, std::move(k));
}

NoiseSchedule build_custom_schedule(std::span<const double> k) {
  return from_retain(ScheduleKind::Custom, std::vector<double>(k.begin(), k.end()));
}

std::vector<ScheduleViolation> validate(const NoiseSchedule& s) {
  std::vector<ScheduleViolation> out;
  auto report = [&](std::string inv, int t, std::string msg) {
    out.push_back({std::move(inv), t, std::move(msg)});
  };
  const auto n = static_cast<std::size_t>(s.T) + 1;
  if (s.T < 1) {
    report("steps", -1, "T must be >= 1");
    return out;
  }
  if (s.beta.size() != n || s.k.size() != n || s.b.size() != n) {
    report("shape", -1, "arrays must have length T+1");
    return out;
  }
  const double tol = kScheduleTolerance;
  if (s.k[0] != 1.0) report("k0", 0, "k^0 != 1");
  if (s.b[0] != 0.0) report("b0", 0, "b^0 != 0");
  for (int t = 1; t <= s.T; ++t) {
    const std::string at = " at t=" + std::to_string(t);
    if (!(s.beta[t] > 0.0 && s.beta[t] <= 1.0)) report("beta-range", t, "beta not in (0,1]" + at);
    if (!(s.k[t] >= 0.0 && s.k[t] <= 1.0)) report("k-range", t, "k not in [0,1]" + at);
    if (!(s.b[t] >= 0.0 && s.b[t] <= 0.5)) report("b-range", t, "b not in [0,0.5]" + at);
    if (!(s.k[t] < s.k[t - 1])) report("k-decreasing", t, "k not strictly decreasing" + at);
    if (std::abs(s.k[t] - s.k[t - 1] * (1.0 - s.beta[t])) > tol)
      report("k-recurrence", t, "k^t != k^{t-1}(1-beta^t)" + at);
    if (std::abs(s.b[t] - ((1.0 - s.beta[t]) * s.b[t - 1] + 0.5 * s.beta[t])) > tol)
      report("b-recurrence", t, "b^t != (1-beta^t)b^{t-1} + beta^t/2" + at);
  }
  for (int t = 0; t <= s.T; ++t) {
    if (std::abs(s.k[t] + 2.0 * s.b[t] - 1.0) > tol)
      report("k+2b", t, "k+2b!=1 at t=" + std::to_string(t));
  }
  if (!(s.k[s.T] <= kTerminalRetainMax))
    report("terminal", s.T, "terminal k too large (" + std::to_string(s.k[s.T]) + " > 1e-6)");
  return out;
}

std::string schedule_csv(const NoiseSchedule& s) {
  std::string csv = "t,beta,k,b\n";
  char row[128];
  for (int t = 0; t <= s.T; ++t) {
    std::snprintf(row, sizeof row, "%d,%.17g,%.17g,%.17g\n", t, s.beta[t], s.k[t], s.b[t]);
    csv += row;
  }
  return csv;
}

}  // namespace bld
