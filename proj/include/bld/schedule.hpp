#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bld {

enum class ScheduleKind { Linear, Cosine, Custom };

std::string_view to_string(ScheduleKind kind);
/// Parses "linear" / "cosine" / "custom" (case-insensitive).
ScheduleKind parse_schedule_kind(std::string_view name);

/// Forward Bernoulli noise schedule. All arrays are indexed by step t and
/// have length T+1; row 0 holds beta=0, k=1, b=0 so that t-indexed formulas
/// need no special case.
struct NoiseSchedule {
  int T = 0;
  ScheduleKind kind = ScheduleKind::Linear;
  std::vector<double> beta;
  std::vector<double> k;
  std::vector<double> b;

  int steps() const { return T; }
};

/// Terminal retain factor must be at or below this for the chain to end at B(0.5).
inline constexpr double kTerminalRetainMax = 1e-6;
inline constexpr double kScheduleTolerance = 1e-12;

/// Linear: k^t = 1 - t/T. Cosine: k^t = cos^2(pi t / 2T). Throws ConfigError
/// for T < 1 or Custom kind (use build_custom_schedule).
NoiseSchedule build_schedule(ScheduleKind kind, int T);

/// Builds a schedule from an explicit accumulated retain array k[0..T].
NoiseSchedule build_custom_schedule(std::span<const double> k);

/// beta^t = 1 - k^t / k^{t-1}. Returns an array of length T+1 with
/// beta[0] = 0. Throws ValidationError when k[0] != 1, k is not strictly
/// decreasing, or any entry leaves [0, 1].
std::vector<double> beta_from_k(std::span<const double> k);

struct ScheduleViolation {
  std::string invariant;
  int t = -1;
  std::string message;
};

/// Checks every schedule invariant to kScheduleTolerance and reports each
/// violation with its index. Empty result means the schedule is valid.
std::vector<ScheduleViolation> validate(const NoiseSchedule& s);

/// CSV with header `t,beta,k,b`, one row per t = 0..T.
std::string schedule_csv(const NoiseSchedule& s);

}  // namespace bld
