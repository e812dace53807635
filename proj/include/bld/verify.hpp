#pragma once

#include <string>
#include <vector>

namespace bld {

struct VerifyRow {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Closed-form kernels against the brute-force oracle over both schedule
/// kinds and a range of step counts.
std::vector<VerifyRow> run_oracle_suite(unsigned long long seed = 0);

/// Fixed-width pass/fail table.
std::string format_table(const std::vector<VerifyRow>& rows);

}  // namespace bld
