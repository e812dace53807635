// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <omp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bld/binae.hpp"
#include "bld/data.hpp"
#include "bld/experiment.hpp"
#include "bld/formats.hpp"
#include "bld/kernel.hpp"
#include "bld/model.hpp"
#include "bld/oracle.hpp"
#include "bld/sampler.hpp"
#include "bld/schedule.hpp"

using namespace bld;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Worst {
  double value = 0.0;
  void see(double e) { value = std::max(value, std::isnan(e) ? INFINITY : e); }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome schedule_algebra() {
  const auto t0 = Clock::now();
  Worst sum, recon, terminal;
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine})
    for (int T : {1, 4, 16, 64, 256}) {
      const auto s = build_schedule(kind, T);
      const auto beta = beta_from_k(s.k);
      for (int t = 0; t <= T; ++t) {
        sum.see(std::abs(s.k[t] + 2 * s.b[t] - 1));
        recon.see(std::abs(beta[t] - s.beta[t]));
      }
      terminal.see(s.k[T]);
    }
  const double secs = seconds_since(t0);
  return {sum.value < 1e-12 && recon.value < 1e-12 && terminal.value <= 1e-6 && secs < 1.0,
          "max|k+2b-1|=" + fmt("%.2e", sum.value) + " beta_err=" + fmt("%.2e", recon.value) +
              " k^T=" + fmt("%.2e", terminal.value) + " time=" + fmt("%.3fs", secs)};
}

// ---------------------------------------------------------------- 2

Outcome kernel_vs_oracle() {
  const auto t0 = Clock::now();
  Worst marginal, posterior, mixture;
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine})
    for (int T = 1; T <= 64; ++T) {
      const auto s = build_schedule(kind, T);
      for (int t = 0; t <= T; ++t) {
        const auto m = oracle::compose_marginal(s, t);
        for (std::uint8_t z0 : {0, 1}) marginal.see(std::abs(m[z0][1] - marginal_params(BitVector{z0}, t, s)[0]));
      }
      // (z^t, z^0, z^{t-1}): 8 combinations per t.
      for (int t = 2; t <= T; ++t)
        for (std::uint8_t zt : {0, 1})
          for (std::uint8_t z0 : {0, 1}) {
            const double p1 = bayes_posterior(zt, z0, t, s);
            const double e1 = oracle::enumerate_posterior(zt, z0, t, s);
            posterior.see(std::abs(p1 - e1));
            posterior.see(std::abs((1 - p1) - (1 - e1)));
          }
    }
  Rng rng(2024);
  int tuples = 0;
  while (tuples < 5000) {
    const auto s = build_schedule(rng.bernoulli(0.5) ? ScheduleKind::Linear : ScheduleKind::Cosine,
                                  static_cast<int>(rng.uniform_int(2, 64)));
    const int t = static_cast<int>(rng.uniform_int(2, s.T));
    const BitVector zt{static_cast<std::uint8_t>(rng.uniform_int(0, 1))};
    const ProbVector p{rng.uniform()};
    mixture.see(std::abs(reverse_mixture_params(zt, p, t, s)[0] - clamp_prob(oracle::exact_reverse(zt[0], p[0], t, s))));
    ++tuples;
  }
  const double secs = seconds_since(t0);
  return {marginal.value < 1e-10 && posterior.value < 1e-12 && mixture.value < 1e-10 && secs < 10.0,
          "marginal=" + fmt("%.2e", marginal.value) + " posterior=" + fmt("%.2e", posterior.value) +
              " mixture=" + fmt("%.2e", mixture.value) + " over " + std::to_string(tuples) +
              " tuples time=" + fmt("%.2fs", secs)};
}

// ---------------------------------------------------------------- 3

Outcome vlb_correctness() {
  Rng rng(33);
  Worst kl, vlb, total;
  for (int i = 0; i < 10000; ++i) {
    const double p = clamp_prob(rng.uniform()), q = clamp_prob(rng.uniform());
    kl.see(std::abs(kl_bernoulli(p, q) - oracle::numeric_kl(p, q)));
  }
  const auto s4 = build_schedule(ScheduleKind::Linear, 4);
  for (int i = 0; i < 2000; ++i) {
    const int t = static_cast<int>(rng.uniform_int(1, 4));
    BitVector z0(4), zt(4);
    ProbVector f(4);
    for (int d = 0; d < 4; ++d) {
      z0[d] = rng.bernoulli(0.5);
      zt[d] = rng.bernoulli(0.5);
      f[d] = rng.uniform();
    }
    vlb.see(std::abs(loss_vlb(z0, zt, f, t, s4) - oracle::vlb_by_summation(z0, zt, f, t, s4)));
  }
  for (double lambda : {0.0, 0.01, 0.1, 1.0}) {
    DiffusionRunOptions opts;
    opts.model = {8, 32, 1, 16, 0};
    opts.train_steps = 50;
    opts.batch_size = 32;
    opts.train.lambda = lambda;
    LatentSource src;
    src.codewords = data::default_codewords();
    train_diffusion(opts, src, [&](const DiffusionLossReport& r) {
      total.see(std::abs(r.loss_total - (r.loss_residual + lambda * r.loss_vlb)));
    });
  }
  return {kl.value < 1e-14 && vlb.value < 1e-10 && total.value < 1e-12,
          "kl=" + fmt("%.2e", kl.value) + " vlb=" + fmt("%.2e", vlb.value) + " total=" + fmt("%.2e", total.value)};
}

// ---------------------------------------------------------------- 4

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

Outcome gradient_fidelity() {
  Worst den, ae_err;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    DenoiserNet net({6, 8, 1, 5, seed % 2 ? 0 : 3});
    for (auto& v : net.params()) v = rng.normal(0.0, 0.5);
    BitVector z(6);
    for (auto& b : z) b = rng.bernoulli(0.5);
    const int t = static_cast<int>(rng.uniform_int(1, 5));
    const int cls = net.conditional() ? static_cast<int>(rng.uniform_int(-1, 2)) : kNoClass;
    std::vector<double> c(6);
    for (auto& v : c) v = rng.normal();
    auto f = [&] {
      const auto y = net.forward(z, t, cls);
      double s = 0;
      for (int i = 0; i < 6; ++i) s += c[i] * y[i];
      return s;
    };
    DenoiserNet::Cache cache;
    net.forward(z, t, cls, &cache);
    std::vector<double> g(net.param_count(), 0.0);
    net.backward(cache, c, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double o = net.params()[i];
      net.params()[i] = o + 1e-5;
      const double up = f();
      net.params()[i] = o - 1e-5;
      const double down = f();
      net.params()[i] = o;
      den.see(rel_err(g[i], (up - down) / 2e-5));
    }
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(500 + seed);
    BinaryAutoencoder ae({9, 5, 7});
    for (auto& v : ae.encoder().params()) v = rng.normal(0.0, 0.5);
    for (auto& v : ae.decoder().params()) v = rng.normal(0.0, 0.5);
    std::vector<std::vector<double>> batch(3, std::vector<double>(9));
    for (auto& x : batch)
      for (auto& v : x) v = rng.bernoulli(0.4);
    Rng replay(seed);
    std::vector<BitVector> zb;
    std::vector<ProbVector> yb;
    for (const auto& x : batch) {
      const auto e = ae.encode(x, replay);
      zb.push_back(e.z);
      yb.push_back(e.y);
    }
    auto frozen = [&] {
      double tot = 0;
      for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto y = ae.encode_probs(batch[n]);
        std::vector<double> zt(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) zt[i] = zb[n][i] + y[i] - yb[n][i];
        tot += reconstruction_loss(ae.decoder().forward(zt), batch[n], ReconstructionLoss::Bce);
      }
      return tot / static_cast<double>(batch.size());
    };
    Rng draw(seed);
    std::vector<double> ge, gd;
    ae.loss_and_gradient(batch, draw, ge, gd);
    auto check = [&](std::span<double> p, const std::vector<double>& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double o = p[i];
        p[i] = o + 1e-5;
        const double up = frozen();
        p[i] = o - 1e-5;
        const double down = frozen();
        p[i] = o;
        ae_err.see(rel_err(g[i], (up - down) / 2e-5));
      }
    };
    check(ae.encoder().params(), ge);
    check(ae.decoder().params(), gd);
  }
  return {den.value < 1e-4 && ae_err.value < 1e-3,
          "denoiser max rel err=" + fmt("%.2e", den.value) + " (20 nets), autoencoder=" + fmt("%.2e", ae_err.value) +
              " (20 nets)"};
}

// ---------------------------------------------------------------- 5

Outcome straight_through() {
  Rng rng(5);
  bool binary = true, identity = true;
  for (int trial = 0; trial < 1000; ++trial) {
    ProbVector y(32);
    for (auto& v : y) v = rng.uniform();
    const BitVector z = sample_bits(y, rng);
    const auto v = StraightThrough::forward(z, y);
    for (std::size_t i = 0; i < z.size(); ++i) binary = binary && (v[i] == 0.0 || v[i] == 1.0) && v[i] == z[i];
    std::vector<double> up(32);
    for (auto& u : up) u = rng.normal();
    identity = identity && StraightThrough::backward(up) == up;
  }
  return {binary && identity, std::string("forward binary: ") + (binary ? "yes" : "no") +
                                  ", backward identity: " + (identity ? "exact" : "differs")};
}

// ---------------------------------------------------------------- 6, 7, 11

struct FidelityRun {
  double tv = 1.0;
  double outside = 1.0;
  bool finite = true;
};

FidelityRun codeword_run(int T, std::uint64_t seed, PredictionTarget target, double lambda) {
  DiffusionRunOptions opts;
  opts.steps = T;
  opts.model = {8, 128, 2, T, 0};
  opts.adam.lr = 1e-4;
  opts.train_steps = 2000;
  opts.batch_size = 64;
  opts.train.lambda = lambda;
  opts.train.target = target;
  opts.train.seed = seed;
  LatentSource src;
  src.codewords = data::default_codewords();
  FidelityRun out;
  const auto trainer = train_diffusion(opts, src, [&](const DiffusionLossReport& r) {
    out.finite = out.finite && std::isfinite(r.loss_total);
  });
  SampleRequest req;
  req.num_samples = 10000;
  req.temperature = 1.0;
  req.seed = mix_seed(seed ^ 0x5a3b1e);
  req.target = target;
  const auto samples = sample_chain(trainer.net(), req, trainer.schedule()).samples;
  const auto dist = src.codewords->as_explicit();
  out.tv = oracle::tv_distance(samples, dist);
  out.outside = oracle::mass_outside_support(samples, dist);
  return out;
}

Outcome generative_fidelity() {
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto t0 = Clock::now();
  double tv = 0, outside = 0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = codeword_run(16, seed, PredictionTarget::Residual, 0.1);
    tv += r.tv / 3;
    outside += r.outside / 3;
    per_seed += fmt(" %.3f", r.tv);
  }
  const double secs = seconds_since(t0);
  omp_set_num_threads(threads);
  return {tv < 0.15 && outside < 0.05 && secs < 300,
          "mean TV=" + fmt("%.4f", tv) + " (seeds:" + per_seed + ") outside=" + fmt("%.4f", outside) +
              " time(1 core)=" + fmt("%.1fs", secs)};
}

Outcome step_robustness() {
  bool pass = true;
  std::string detail;
  for (int T : {4, 64}) {
    double tv = 0;
    for (std::uint64_t seed : {1, 2, 3}) tv += codeword_run(T, seed, PredictionTarget::Residual, 0.1).tv / 3;
    pass = pass && tv < 0.25;
    detail += "T=" + std::to_string(T) + " mean TV=" + fmt("%.4f", tv) + "  ";
  }
  return {pass, detail};
}

Outcome ablation_surface() {
  bool finite = true;
  std::string detail;
  std::vector<double> residual_tv, clean_tv;
  for (double lambda : {0.0, 0.01, 0.1, 1.0}) {
    const auto r = codeword_run(16, 1, PredictionTarget::Residual, lambda);
    const auto c = codeword_run(16, 1, PredictionTarget::Clean, lambda);
    finite = finite && r.finite && c.finite;
    residual_tv.push_back(r.tv);
    clean_tv.push_back(c.tv);
  }
  // The previous-state target trains on the bound alone, so lambda does not change it.
  const auto prev = codeword_run(16, 1, PredictionTarget::Previous, 0.1);
  finite = finite && prev.finite;
  bool dominates = true;
  const double lambdas[] = {0.0, 0.01, 0.1, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    dominates = dominates && residual_tv[i] <= clean_tv[i] + 0.05 && residual_tv[i] <= prev.tv + 0.05;
    detail += "lambda=" + fmt("%g", lambdas[i]) + " residual=" + fmt("%.3f", residual_tv[i]) +
              " z0=" + fmt("%.3f", clean_tv[i]) + "; ";
  }
  detail += "zprev=" + fmt("%.3f", prev.tv) + "; finite=" + (finite ? "yes" : "no");
  return {finite && dominates, detail};
}

// ---------------------------------------------------------------- 8

Outcome guidance_temperature() {
  const auto s = build_schedule(ScheduleKind::Linear, 16);
  DenoiserNet net({8, 32, 2, 16, 4});
  Rng init(8);
  for (auto& v : net.params()) v = init.normal(0.0, 0.4);
  SampleRequest req;
  req.num_samples = 256;
  req.temperature = 0.9;
  req.guidance = 0.0;
  req.cls = 2;
  req.seed = 99;
  const auto guided = sample_chain(net, req, s).samples;
  // Conditional path written out directly: plain forward pass for the class.
  bool identical = true;
  for (std::size_t i = 0; i < req.num_samples; ++i) {
    Rng rng = chain_stream(req.seed, i);
    BitVector z = sample_bits(ProbVector(8, 0.5), rng);
    for (int t = 16; t >= 1; --t) {
      const auto p0 = flip_to_z0_probs(z, tempered_probs(net.forward(z, t, req.cls), req.temperature));
      z = sample_bits(t == 1 ? p0 : reverse_mixture_params(z, p0, t, s), rng);
    }
    identical = identical && z == guided[i];
  }
  bool increasing = true;
  // |logit| <= 3 keeps sigma(l / 0.2) inside the probability clamp, which would flatten the curve.
  const std::vector<double> logits{-3.0, -0.7, 0.4, 1.5, 2.9};
  std::vector<double> prev(logits.size(), -1.0);
  for (int k = 2; k <= 12; ++k) {
    const auto p = tempered_probs(logits, k / 10.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = -(p[i] * std::log(p[i]) + (1 - p[i]) * std::log(1 - p[i]));
      increasing = increasing && h > prev[i];
      prev[i] = h;
    }
  }
  return {identical && increasing, std::string("omega=0 vs conditional path: ") + (identical ? "bit-identical" : "differs") +
                                       ", entropy strictly increasing in tau: " + (increasing ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9

Outcome autoencoder() {
  const auto t0 = Clock::now();
  Rng data_rng(9);
  std::string source = "synthetic shapes";
  data::ImageBatch train_imgs, test_imgs;
  if (const char* path = std::getenv("BLD_MNIST_IMAGES"); path && *path) {
    auto all = load_binary_images(path, 8, 0, data_rng);
    const std::size_t held = std::min<std::size_t>(1000, all.images.size() / 10);
    test_imgs = {all.width, all.height, {all.images.end() - static_cast<std::ptrdiff_t>(held), all.images.end()}};
    all.images.resize(all.images.size() - held);
    train_imgs = std::move(all);
    source = "binarized digits";
  } else {
    train_imgs = data::make_shapes_dataset(4096, data_rng);
    test_imgs = data::make_shapes_dataset(512, data_rng);
  }
  const auto train = data::to_real(train_imgs);
  const auto test = data::to_real(test_imgs);
  BinaryAutoencoder ae({64, 32, 128}, {5e-4});
  Rng init(mix_seed(9));
  ae.init(init);
  double acc = 0;
  std::int64_t reached = -1;
  std::vector<std::vector<double>> batch;
  for (std::int64_t step = 1; step <= 10000; ++step) {
    Rng rng = keyed_stream(9, static_cast<std::uint64_t>(step), ~0ULL);
    batch.clear();
    for (int i = 0; i < 32; ++i)
      batch.push_back(train[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(train.size()) - 1))]);
    ae.train_step(batch, rng);
    if (step % 500 == 0) {
      Rng eval(42);
      acc = ae.round_trip_accuracy(test, eval);
      if (acc >= 0.90) {
        reached = step;
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {reached > 0 && secs < 600,
          source + ", held-out round-trip accuracy=" + fmt("%.4f", acc) + " at step " +
              std::to_string(reached > 0 ? reached : 10000) + " time=" + fmt("%.1fs", secs)};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool run_cli(const std::string& args) {
  const std::string cmd = "\"" BLD_CLI_PATH "\" " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) && WEXITSTATUS(raw) == 0;
}

Outcome determinism_formats() {
  const fs::path dir = fs::temp_directory_path() / ("bld_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto p = [&](const std::string& n) { return "\"" + (dir / n).string() + "\""; };
  const std::vector<std::string> commands{
      "train-ae --latent-dim 16 --ae-hidden 32 --train-steps 50 --seed 4 -o " + p("ae.json") + " --metrics " + p("ae.jsonl"),
      "encode --checkpoint " + p("ae.json") + " -n 64 --seed 4 -o " + p("z.blds") + " --metrics " + p("enc.jsonl"),
      "train-diffusion --data " + p("z.blds") + " --dim 16 --hidden 32 --depth 1 --train-steps 50 --seed 4 -o " +
          p("d.json") + " --metrics " + p("d.jsonl"),
      "sample --checkpoint " + p("d.json") + " -n 16 --seed 4 --decoder " + p("ae.json") + " --image " + p("s.pgm") +
          " -o " + p("s.blds") + " --metrics " + p("s.jsonl"),
      "decode --checkpoint " + p("ae.json") + " --data " + p("s.blds") + " -o " + p("x.pgm") + " --metrics " + p("x.jsonl"),
  };
  const std::vector<std::string> files{"ae.json", "ae.jsonl", "z.blds", "enc.jsonl", "d.json", "d.jsonl",
                                       "s.pgm",   "s.blds",   "s.jsonl", "x.pgm",     "x.jsonl"};
  std::vector<std::string> first;
  bool ran = true, identical = true;
  for (int round = 0; round < 2; ++round) {
    for (const auto& c : commands) ran = ran && run_cli(c);
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto bytes = slurp(dir / files[i]);
      if (round == 0)
        first.push_back(bytes);
      else
        identical = identical && !bytes.empty() && bytes == first[i];
      fs::remove(dir / files[i]);
    }
  }
  fs::remove_all(dir);

  // IDX round trips and fault injection.
  Rng rng(10);
  bool round_trip = true;
  for (int trial = 0; trial < 200; ++trial) {
    data::IdxTensor t;
    const data::IdxType types[] = {data::IdxType::UByte, data::IdxType::SByte, data::IdxType::Short,
                                   data::IdxType::Int, data::IdxType::Float, data::IdxType::Double};
    t.dtype = types[rng.uniform_int(0, 5)];
    for (std::uint64_t r = 0, n = rng.uniform_int(1, 4); r < n; ++r)
      t.dims.push_back(static_cast<std::uint32_t>(rng.uniform_int(1, 6)));
    t.payload.resize(t.element_count() * data::idx_type_size(t.dtype));
    for (auto& b : t.payload) b = static_cast<std::uint8_t>(rng.next_u64());
    round_trip = round_trip && data::parse_idx(data::serialize_idx(t)) == t;
  }
  data::IdxTensor base{data::IdxType::UByte, {2, 3, 4}, std::vector<std::uint8_t>(24, 7)};
  const auto good = data::serialize_idx(base);
  auto expect = [&](std::vector<std::uint8_t> bytes, data::IdxErrorCode code) {
    try {
      data::parse_idx(bytes);
    } catch (const data::IdxError& e) {
      return e.code() == code;
    }
    return false;
  };
  auto mutate = [&](auto fn) {
    auto b = good;
    fn(b);
    return b;
  };
  const bool faults =
      expect(mutate([](auto& b) { b[1] = 1; }), data::IdxErrorCode::BadMagic) &&
      expect(mutate([](auto& b) { b.pop_back(); }), data::IdxErrorCode::Truncated) &&
      expect(mutate([](auto& b) { b.resize(6); }), data::IdxErrorCode::Truncated) &&
      expect(mutate([](auto& b) { b.push_back(0); }), data::IdxErrorCode::TrailingData) &&
      expect(mutate([](auto& b) { b[2] = 0x0A; }), data::IdxErrorCode::UnsupportedDtype) &&
      expect(mutate([](auto& b) { b[3] = 0; }), data::IdxErrorCode::BadRank);
  return {ran && identical && round_trip && faults,
          std::string("cli ran: ") + (ran ? "yes" : "no") + ", " + std::to_string(files.size()) +
              " artifacts byte-identical: " + (identical ? "yes" : "no") + ", IDX round trip: " +
              (round_trip ? "yes" : "no") + ", fault variants: " + (faults ? "all" : "mismatch")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "schedule algebra", schedule_algebra},
      {2, "kernel vs oracle", kernel_vs_oracle},
      {3, "variational bound correctness", vlb_correctness},
      {4, "gradient fidelity", gradient_fidelity},
      {5, "straight-through contract", straight_through},
      {6, "end-to-end generative fidelity", generative_fidelity},
      {7, "step-count robustness", step_robustness},
      {8, "guidance and temperature identities", guidance_temperature},
      {9, "autoencoder round trip", autoencoder},
      {10, "determinism and formats", determinism_formats},
      {11, "ablation surface", ablation_surface},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %-38s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
