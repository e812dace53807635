#include "bld/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "bld/error.hpp"

namespace bld {

std::string_view to_string(PredictionTarget target) {
  switch (target) {
    case PredictionTarget::Residual: return "residual";
    case PredictionTarget::Clean: return "z0";
    case PredictionTarget::Previous: return "zprev";
  }
  return "unknown";
}

PredictionTarget parse_prediction_target(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "residual" || lower == "xor") return PredictionTarget::Residual;
  if (lower == "z0" || lower == "clean") return PredictionTarget::Clean;
  if (lower == "zprev" || lower == "previous" || lower == "zt-1") return PredictionTarget::Previous;
  throw ConfigError("unknown prediction target '" + std::string(name) + "'");
}

BitVector residual_target(BitSpan z_t, BitSpan z0) {
  if (z_t.size() != z0.size())
    throw DimensionError("residual_target: length mismatch " + std::to_string(z_t.size()) +
                         " vs " + std::to_string(z0.size()));
  BitVector r(z_t.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = z_t[i] ^ z0[i];
  return r;
}

double bce_mean(ProbSpan p, BitSpan target) {
  if (p.size() != target.size()) throw DimensionError("bce: length mismatch");
  if (p.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clamp_prob(p[i]);
    total -= target[i] ? std::log(q) : std::log(1.0 - q);
  }
  return total / static_cast<double>(p.size());
}

double loss_residual(ProbSpan flip_pred, BitSpan target) { return bce_mean(flip_pred, target); }

double kl_bernoulli(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

double loss_vlb(BitSpan z0, BitSpan z_t, ProbSpan pred, int t, const NoiseSchedule& s,
                PredictionTarget target) {
  if (t < 1 || t > s.T) throw RangeError("loss_vlb: step " + std::to_string(t) + " out of range");
  if (z0.size() != z_t.size() || z0.size() != pred.size())
    throw DimensionError("loss_vlb: length mismatch");
  if (z0.empty()) return 0.0;
  ProbVector clamped(pred.size());
  std::transform(pred.begin(), pred.end(), clamped.begin(), clamp_prob);

  ProbVector model_prev;
  if (target == PredictionTarget::Previous) {
    model_prev = clamped;
  } else {
    const ProbVector p_z0 =
        target == PredictionTarget::Residual ? flip_to_z0_probs(z_t, clamped) : clamped;
    if (t == 1) return bce_mean(p_z0, z0);
    model_prev = reverse_mixture_params(z_t, p_z0, t, s);
  }
  if (t == 1) return bce_mean(model_prev, z0);
  const ProbVector q = bayes_posterior_params(z_t, z0, t, s);
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += kl_bernoulli(q[i], model_prev[i]);
  return total / static_cast<double>(q.size());
}

double loss_vlb(BitSpan z0, BitSpan z_t, ProbSpan flip_pred, int t, const NoiseSchedule& s) {
  return loss_vlb(z0, z_t, flip_pred, t, s, PredictionTarget::Residual);
}

ExampleLoss example_loss(std::span<const double> logits, BitSpan z0, BitSpan z_t, int t,
                         const NoiseSchedule& s, PredictionTarget target, double vlb_weight) {
  const std::size_t D = logits.size();
  if (z0.size() != D || z_t.size() != D) throw DimensionError("example_loss: length mismatch");
  if (t < 1 || t > s.T) throw RangeError("example_loss: step out of range");
  ExampleLoss out;
  out.dlogits.assign(D, 0.0);

  double post[2][2] = {{0, 0}, {0, 0}};
  if (t >= 2)
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) post[a][c] = bayes_posterior(a, c, t, s);

  auto in_range = [](double v) { return v > kProbEps && v < 1.0 - kProbEps; };
  const double inv_d = 1.0 / static_cast<double>(D);

  for (std::size_t i = 0; i < D; ++i) {
    const double raw = nn::sigmoid(logits[i]);
    const double pred = clamp_prob(raw);
    const double dpred_dlogit = in_range(raw) ? raw * (1.0 - raw) : 0.0;
    const int zt = z_t[i];
    const int zc = z0[i];

    double dmain = 0.0;  // d main / d pred
    double p0 = pred, dp0 = 1.0;
    if (target == PredictionTarget::Residual) {
      const int r = zt ^ zc;
      out.main -= r ? std::log(pred) : std::log(1.0 - pred);
      dmain = r ? -1.0 / pred : 1.0 / (1.0 - pred);
      if (zt) {
        p0 = 1.0 - pred;
        dp0 = -1.0;
      }
    } else if (target == PredictionTarget::Clean) {
      out.main -= zc ? std::log(pred) : std::log(1.0 - pred);
      dmain = zc ? -1.0 / pred : 1.0 / (1.0 - pred);
    }

    // Model probability that z^{t-1} (or z^0 when t = 1) is 1, and its
    // derivative with respect to pred.
    double pm, dpm;
    if (target == PredictionTarget::Previous) {
      pm = pred;
      dpm = 1.0;
    } else if (t == 1) {
      pm = p0;
      dpm = dp0;
    } else {
      const double mix = post[zt][0] * (1.0 - p0) + post[zt][1] * p0;
      pm = clamp_prob(mix);
      dpm = in_range(mix) ? (post[zt][1] - post[zt][0]) * dp0 : 0.0;
    }

    double dvlb;  // d vlb / d pm
    if (t == 1) {
      out.vlb -= zc ? std::log(pm) : std::log(1.0 - pm);
      dvlb = zc ? -1.0 / pm : 1.0 / (1.0 - pm);
    } else {
      const double q = clamp_prob(post[zt][zc]);
      out.vlb += kl_bernoulli(q, pm);
      dvlb = -q / pm + (1.0 - q) / (1.0 - pm);
    }

    out.dlogits[i] = (dmain + vlb_weight * dvlb * dpm) * dpred_dlogit * inv_d;
  }
  out.main *= inv_d;
  out.vlb *= inv_d;
  return out;
}

std::string to_jsonl(const DiffusionLossReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "{\"step\":%lld,\"t_mean\":%.17g,\"loss_total\":%.17g,\"loss_residual\":%.17g,"
                "\"loss_vlb\":%.17g,\"lr\":%.17g}",
                static_cast<long long>(r.step), r.t_mean, r.loss_total, r.loss_residual,
                r.loss_vlb, r.lr);
  return buf;
}

NoisedExample noise_example(BitSpan z0, int cls, const NoiseSchedule& s, std::uint64_t seed,
                            std::int64_t step, std::size_t index, double cond_drop_prob) {
  Rng rng = keyed_stream(seed, static_cast<std::uint64_t>(step), index);
  NoisedExample ex;
  ex.t = static_cast<int>(rng.uniform_int(1, s.T));
  const bool drop = rng.uniform() < cond_drop_prob;
  ex.cls = drop ? kNoClass : cls;
  ex.z_t = sample_bits(marginal_params(z0, ex.t, s), rng);
  return ex;
}

namespace {

constexpr std::size_t kChunk = 8;

struct Partial {
  std::vector<double> grad;
  double main = 0.0;
  double vlb = 0.0;
  double t_sum = 0.0;
};

void accumulate_example(const DenoiserNet& net, const NoiseSchedule& s,
                        std::span<const BitVector> z0, std::span<const int> classes,
                        const TrainConfig& cfg, double vlb_weight, std::int64_t step,
                        std::size_t i, DenoiserNet::Cache& cache, Partial& acc) {
  const int cls = classes.empty() ? kNoClass : classes[i];
  const NoisedExample ex =
      noise_example(z0[i], cls, s, cfg.seed, step, i, net.conditional() ? cfg.cond_drop_prob : 0.0);
  const auto logits = net.forward(ex.z_t, ex.t, ex.cls, &cache);
  const ExampleLoss loss = example_loss(logits, z0[i], ex.z_t, ex.t, s, cfg.target, vlb_weight);
  net.backward(cache, loss.dlogits, acc.grad);
  acc.main += loss.main;
  acc.vlb += loss.vlb;
  acc.t_sum += ex.t;
}

double vlb_weight_for(const TrainConfig& cfg) {
  return cfg.target == PredictionTarget::Previous ? 1.0 : cfg.lambda;
}

}  // namespace

BatchGradient batch_gradient(const DenoiserNet& net, const NoiseSchedule& s,
                             std::span<const BitVector> z0, std::span<const int> classes,
                             const TrainConfig& cfg, std::int64_t step, bool parallel) {
  const std::size_t B = z0.size();
  if (B == 0) throw ValidationError("training batch is empty");
  if (!classes.empty() && classes.size() != B)
    throw DimensionError("class id count does not match batch size");
  if (net.config().steps != s.T) throw ConfigError("denoiser T does not match schedule T");
  const double w = vlb_weight_for(cfg);
  const std::size_t n = net.param_count();

  BatchGradient out;
  if (!parallel) {
    // Serial reference: one accumulator, examples in order.
    Partial acc{std::vector<double>(n, 0.0)};
    DenoiserNet::Cache cache;
    for (std::size_t i = 0; i < B; ++i) accumulate_example(net, s, z0, classes, cfg, w, step, i, cache, acc);
    out.grad = std::move(acc.grad);
    out.loss_residual = acc.main;
    out.loss_vlb = acc.vlb;
    out.t_mean = acc.t_sum;
  } else {
    const std::size_t chunks = (B + kChunk - 1) / kChunk;
    std::vector<Partial> parts(chunks);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      Partial& acc = parts[c];
      acc.grad.assign(n, 0.0);
      DenoiserNet::Cache cache;
      const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
      const std::size_t hi = std::min(B, lo + kChunk);
      for (std::size_t i = lo; i < hi; ++i) accumulate_example(net, s, z0, classes, cfg, w, step, i, cache, acc);
    }
    out.grad = std::move(parts[0].grad);
    out.loss_residual = parts[0].main;
    out.loss_vlb = parts[0].vlb;
    out.t_mean = parts[0].t_sum;
    for (std::size_t c = 1; c < chunks; ++c) {
      const auto& g = parts[c].grad;
      for (std::size_t j = 0; j < n; ++j) out.grad[j] += g[j];
      out.loss_residual += parts[c].main;
      out.loss_vlb += parts[c].vlb;
      out.t_mean += parts[c].t_sum;
    }
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  for (auto& g : out.grad) g *= inv_b;
  out.loss_residual *= inv_b;
  out.loss_vlb *= inv_b;
  out.t_mean *= inv_b;
  return out;
}

DiffusionTrainer::DiffusionTrainer(DenoiserNet net, NoiseSchedule schedule, nn::AdamConfig adam,
                                   TrainConfig cfg)
    : net_(std::move(net)),
      schedule_(std::move(schedule)),
      adam_(net_.param_count(), adam),
      cfg_(cfg) {
  if (net_.config().steps != schedule_.T)
    throw ConfigError("denoiser has " + std::to_string(net_.config().steps) +
                      " time embeddings but the schedule has T=" + std::to_string(schedule_.T));
  if (cfg_.lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (cfg_.cond_drop_prob < 0.0 || cfg_.cond_drop_prob > 1.0)
    throw ConfigError("cond_drop_prob must lie in [0,1]");
}

double DiffusionTrainer::effective_lambda() const { return vlb_weight_for(cfg_); }

DiffusionLossReport DiffusionTrainer::train_step(std::span<const BitVector> z0,
                                                 std::span<const int> classes) {
  const std::int64_t step = adam_.step + 1;
  BatchGradient g = batch_gradient(net_, schedule_, z0, classes, cfg_, step, cfg_.parallel);

  DiffusionLossReport r;
  r.step = step;
  r.t_mean = g.t_mean;
  r.lambda = effective_lambda();
  r.loss_residual = g.loss_residual;
  r.loss_vlb = g.loss_vlb;
  r.loss_total = r.loss_residual + r.lambda * r.loss_vlb;
  if (!std::isfinite(r.loss_total))
    throw NumericError("non-finite loss at step " + std::to_string(step) +
                       ": residual=" + std::to_string(r.loss_residual) +
                       " vlb=" + std::to_string(r.loss_vlb));
  r.lr = nn::adam_step(net_.params(), g.grad, adam_);
  return r;
}

}  // namespace bld
