#pragma once

// Parameter and multiply-accumulate accounting for a frozen wav2vec2-style
// encoder truncated after k transformer layers, plus the E x D x H training
// cost proxy.
//
// MAC convention: one MAC is one multiply plus one add. Layer norms, softmax,
// activations, and biases are not counted.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace greenspoof {
struct GridSpec;
}

namespace greenspoof::budget {

struct ConvLayerSpec {
  int channels;
  int kernel;
  int stride;
};

struct EncoderConfig {
  std::string name = "wav2vec2-base";
  int sample_rate = 16000;
  int input_channels = 1;
  std::vector<ConvLayerSpec> conv_layers;
  bool conv_bias = false;
  bool group_norm_first = true;  // GroupNorm(C, C) after conv 0 (2C affine params)
  int pos_conv_kernel = 128;
  int pos_conv_groups = 16;
  bool pos_conv_weight_norm = true;  // weight_g has `kernel` entries
  int num_layers = 12;
  int model_dim = 768;
  int ffn_dim = 3072;
  int attention_heads = 12;

  /// Published BASE architecture.
  static EncoderConfig base();
  void validate() const;
};

struct SliceSpec {
  int keep_layers = 12;  // transformer layers 1..k are kept
};

struct ParamBreakdown {
  std::int64_t conv_encoder = 0;        // conv stack + its norm
  std::int64_t feature_projection = 0;  // layer norm + linear to model_dim
  std::int64_t positional_conv = 0;
  std::int64_t encoder_norm = 0;
  std::int64_t per_transformer_layer = 0;
  std::int64_t transformer_layers = 0;
  std::int64_t total = 0;
};

struct MacBreakdown {
  std::int64_t frames = 0;
  std::int64_t conv_encoder = 0;
  std::int64_t feature_projection = 0;
  std::int64_t positional_conv = 0;
  std::int64_t attention_projections = 0;  // Q, K, V, output
  std::int64_t attention_scores = 0;       // QK^T and AV
  std::int64_t ffn = 0;
  std::int64_t total = 0;
};

ParamBreakdown slice_param_breakdown(const EncoderConfig& cfg, const SliceSpec& slice);
std::int64_t slice_params(const EncoderConfig& cfg, const SliceSpec& slice);

/// Encoder output frame count for `samples` input samples (valid convolutions).
std::int64_t encoder_frames(const EncoderConfig& cfg, std::int64_t samples);

MacBreakdown slice_mac_breakdown(const EncoderConfig& cfg, const SliceSpec& slice, double input_seconds);
/// GMACs (1e9 MACs) to embed one input of `input_seconds`.
double slice_macs(const EncoderConfig& cfg, const SliceSpec& slice, double input_seconds);

struct DataSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t eval = 0;
};

struct CostReport {
  std::string encoder;
  int keep_layers = 0;
  double input_seconds = 0.0;
  double e_proxy_gmacs = 0.0;  // feature extraction for one average example
  std::string downstream_fit;  // descriptor of the downstream training cost
  std::size_t d = 0;           // training-set cardinality
  std::size_t h = 0;           // grid cell count
  double cost_proxy = 0.0;     // E x D x H in GMAC-examples-cells
  std::int64_t frozen_param_count = 0;
  std::optional<std::int64_t> trainable_param_count;
  std::vector<std::string> footnotes;
};

CostReport cost_report(const GridSpec& grid, const DataSizes& sizes, const SliceSpec& slice,
                       const EncoderConfig& cfg, double input_seconds = 3.5,
                       std::optional<std::int64_t> trainable_params = std::nullopt);

nlohmann::json to_json(const CostReport& report);

}  // namespace greenspoof::budget
