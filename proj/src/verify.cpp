#include "bld/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bld/kernel.hpp"
#include "bld/model.hpp"
#include "bld/oracle.hpp"
#include "bld/rng.hpp"
#include "bld/schedule.hpp"

namespace bld {

namespace {

struct Tracker {
  double worst = 0.0;
  void see(double err) { worst = std::max(worst, std::isnan(err) ? INFINITY : err); }
};

VerifyRow row(std::string name, const Tracker& tr, double tol, std::string detail = {}) {
  return {std::move(name), tr.worst < tol, tr.worst, tol, std::move(detail)};
}

std::vector<NoiseSchedule> schedules(std::initializer_list<int> steps) {
  std::vector<NoiseSchedule> out;
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine})
    for (int T : steps) out.push_back(build_schedule(kind, T));
  return out;
}

}  // namespace

std::vector<VerifyRow> run_oracle_suite(unsigned long long seed) {
  std::vector<VerifyRow> rows;
  Rng rng(seed);

  {
    Tracker sum, recon, terminal;
    std::size_t violations = 0;
    for (const auto& s : schedules({1, 4, 16, 64, 256})) {
      violations += validate(s).size();
      const auto beta = beta_from_k(s.k);
      for (int t = 0; t <= s.T; ++t) {
        sum.see(std::abs(s.k[t] + 2.0 * s.b[t] - 1.0));
        recon.see(std::abs(beta[t] - s.beta[t]));
      }
      terminal.see(s.k[s.T]);
    }
    rows.push_back(row("schedule k+2b=1", sum, 1e-12));
    rows.push_back(row("schedule beta reconstruction", recon, 1e-12));
    rows.push_back(row("schedule terminal k", terminal, 1e-6 + 1e-300));
    Tracker v;
    v.see(static_cast<double>(violations));
    rows.push_back(row("schedule validate()", v, 0.5, std::to_string(violations) + " violations"));
  }

  const auto sched = schedules({1, 2, 4, 8, 16, 32, 64});
  {
    Tracker tr;
    for (const auto& s : sched)
      for (int t = 0; t <= s.T; ++t) {
        const auto m = oracle::compose_marginal(s, t);
        for (int z0 = 0; z0 < 2; ++z0) {
          const BitVector z{static_cast<std::uint8_t>(z0)};
          tr.see(std::abs(m[z0][1] - marginal_params(z, t, s)[0]));
        }
      }
    rows.push_back(row("marginal vs composed chain", tr, 1e-10));
  }
  {
    Tracker tr;
    for (const auto& s : sched)
      for (int t = 2; t <= s.T; ++t)
        for (int zt = 0; zt < 2; ++zt)
          for (int z0 = 0; z0 < 2; ++z0) {
            const BitVector a{static_cast<std::uint8_t>(zt)}, c{static_cast<std::uint8_t>(z0)};
            const double fast = bayes_posterior_params(a, c, t, s)[0];
            const double slow = clamp_prob(oracle::enumerate_posterior(zt, z0, t, s));
            tr.see(std::abs(fast - slow));
          }
    rows.push_back(row("Bayes posterior vs enumeration", tr, 1e-12));
  }
  {
    Tracker tr, shifted;
    double printed_dev = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const auto& s = sched[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sched.size()) - 1))];
      if (s.T < 2) continue;
      const int t = static_cast<int>(rng.uniform_int(2, s.T));
      const BitVector zt{static_cast<std::uint8_t>(rng.uniform_int(0, 1))};
      const ProbVector p{rng.uniform()};
      const double fast = reverse_mixture_params(zt, p, t, s)[0];
      tr.see(std::abs(fast - clamp_prob(oracle::exact_reverse(zt[0], p[0], t, s))));
      printed_dev = std::max(printed_dev, std::abs(fast - reverse_closed_form_params(
                                                              zt, p, t, s, ClosedFormIndexing::AsPrinted)[0]));
      // The shifted compact form agrees with the mixture whenever z^0 is known.
      for (double certain : {0.0, 1.0}) {
        const ProbVector pc{certain};
        shifted.see(std::abs(reverse_mixture_params(zt, pc, t, s)[0] -
                             reverse_closed_form_params(zt, pc, t, s, ClosedFormIndexing::Shifted)[0]));
      }
    }
    rows.push_back(row("reverse mixture vs exact_reverse", tr, 1e-10));
    char buf[96];
    std::snprintf(buf, sizeof buf, "printed-index form max deviation %.3g", printed_dev);
    rows.push_back(row("compact form (shifted) at known z0", shifted, 1e-12, buf));
  }
  {
    Tracker tr;
    for (int i = 0; i < 10000; ++i) {
      const double p = clamp_prob(rng.uniform()), q = clamp_prob(rng.uniform());
      tr.see(std::abs(kl_bernoulli(p, q) - oracle::numeric_kl(p, q)));
    }
    rows.push_back(row("kl_bernoulli vs summation", tr, 1e-14));
  }
  {
    Tracker tr;
    const auto s = build_schedule(ScheduleKind::Linear, 4);
    for (int i = 0; i < 500; ++i) {
      const int t = static_cast<int>(rng.uniform_int(1, 4));
      BitVector z0(4), zt(4);
      ProbVector flip(4);
      for (int d = 0; d < 4; ++d) {
        z0[d] = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
        zt[d] = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
        flip[d] = rng.uniform();
      }
      tr.see(std::abs(loss_vlb(z0, zt, flip, t, s) - oracle::vlb_by_summation(z0, zt, flip, t, s)));
    }
    rows.push_back(row("loss_vlb vs per-bit summation", tr, 1e-10));
  }
  return rows;
}

std::string format_table(const std::vector<VerifyRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-40s %-6s %-12s %-10s %s\n", "check", "result", "max_error",
                "tolerance", "detail");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-40s %-6s %-12.3e %-10.1e %s\n", r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", r.max_error, r.tolerance, r.detail.c_str());
    out += line;
  }
  return out;
}

}  // namespace bld
