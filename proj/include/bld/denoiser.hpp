#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bld/kernel.hpp"
#include "bld/nn.hpp"
#include "bld/rng.hpp"

namespace bld {

/// Sentinel class id meaning "no condition"; routed to the null token.
inline constexpr int kNoClass = -1;

struct DenoiserConfig {
  int input_dim = 8;    // D
  int hidden_dim = 128; // H
  int depth = 2;        // L residual blocks
  int steps = 16;       // T, one time embedding per step
  int num_classes = 0;  // 0 disables class embeddings

  bool operator==(const DenoiserConfig&) const = default;
};

/// Residual MLP producing per-bit logits from (z^t, t, class):
///
///   u0 = W_in (2 z - 1) + b_in + time[t] + class[c]
///   h0 = silu(u0)
///   h_{l+1} = h_l + silu(W_l h_l + b_l)        l = 0..L-1
///   logits = W_out h_L + b_out
///
/// The class table has num_classes + 1 rows; the last row is the null
/// token used for unconditional predictions.
class DenoiserNet {
 public:
  struct Cache {
    const DenoiserNet* owner = nullptr;
    int t = 0;
    int class_row = -1;
    std::vector<double> input;
    std::vector<double> u0;
    std::vector<std::vector<double>> hidden;  // h_0..h_L
    std::vector<std::vector<double>> block_pre;
  };

  explicit DenoiserNet(DenoiserConfig cfg = {});

  /// He-normal weights, zero biases, N(0, 0.02^2) embeddings, zero output head.
  void init(Rng& rng);

  std::vector<double> forward(BitSpan z_t, int t, int cls = kNoClass, Cache* cache = nullptr) const;

  /// Accumulates dL/dparams into `grad` (same layout as params()).
  void backward(const Cache& cache, std::span<const double> dlogits, std::span<double> grad) const;

  const DenoiserConfig& config() const { return cfg_; }
  bool conditional() const { return cfg_.num_classes > 0; }
  const nn::ParamLayout& layout() const { return layout_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Closed-form parameter count for a configuration.
  static std::size_t param_count(const DenoiserConfig& cfg);

  /// Human-readable summary: per-tensor shapes and exact parameter count.
  std::string describe() const;

 private:
  int class_row(int cls) const;

  DenoiserConfig cfg_;
  nn::ParamLayout layout_;
  std::vector<double> params_;
  std::size_t w_in_, b_in_, time_, class_ = 0, w_out_, b_out_;
  std::vector<std::size_t> w_blk_, b_blk_;
};

}  // namespace bld
