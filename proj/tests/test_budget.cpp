#include <doctest.h>

#include "greenspoof/budget.hpp"
#include "greenspoof/errors.hpp"
#include "greenspoof/selection.hpp"

using namespace greenspoof;
using namespace greenspoof::budget;

namespace {

// Hand count of the BASE encoder, written out layer by layer.
std::int64_t oracle_params(int k) {
  std::int64_t conv = 512 * 1 * 10 + 4 * (512 * 512 * 3) + 2 * (512 * 512 * 2);
  conv += 2 * 512;                                          // group norm after the first conv
  const std::int64_t projection = 2 * 512 + 512 * 768 + 768;  // layer norm + linear
  const std::int64_t pos = 768 * 48 * 128 + 768 + 128;        // grouped conv + bias + weight-norm gain
  const std::int64_t enc_norm = 2 * 768;
  const std::int64_t layer = 4 * (768 * 768 + 768) + (768 * 3072 + 3072) + (3072 * 768 + 768) + 2 * 2 * 768;
  return conv + projection + pos + enc_norm + k * layer;
}

std::int64_t oracle_frames(std::int64_t samples) {
  const int kernels[] = {10, 3, 3, 3, 3, 2, 2};
  const int strides[] = {5, 2, 2, 2, 2, 2, 2};
  for (int i = 0; i < 7; ++i) samples = (samples - kernels[i]) / strides[i] + 1;
  return samples;
}

}  // namespace

TEST_CASE("parameter counts match the hand count") {
  const auto cfg = EncoderConfig::base();
  for (int k = 0; k <= 12; ++k) CHECK(slice_params(cfg, {k}) == oracle_params(k));
  CHECK(slice_params(cfg, {12}) == 94'370'944);
}

TEST_CASE("full encoder is about 95M parameters") {
  const double p = static_cast<double>(slice_params(EncoderConfig::base(), {12}));
  CHECK(std::abs(p - 95e6) / 95e6 <= 0.05);
}

TEST_CASE("k=0 is k=1 minus one transformer layer") {
  const auto cfg = EncoderConfig::base();
  const auto one = slice_param_breakdown(cfg, {1});
  CHECK(slice_params(cfg, {0}) == one.total - one.per_transformer_layer);
  CHECK(one.per_transformer_layer == 7'087'872);
}

TEST_CASE("parameters and MACs grow monotonically with depth") {
  const auto cfg = EncoderConfig::base();
  for (int k = 1; k <= 12; ++k) {
    CHECK(slice_params(cfg, {k}) > slice_params(cfg, {k - 1}));
    CHECK(slice_macs(cfg, {k}, 3.5) > slice_macs(cfg, {k - 1}, 3.5));
  }
}

TEST_CASE("frame arithmetic") {
  const auto cfg = EncoderConfig::base();
  CHECK(encoder_frames(cfg, 16000) == 49);
  CHECK(encoder_frames(cfg, 56000) == oracle_frames(56000));
  CHECK(encoder_frames(cfg, 56000) == 174);
  CHECK(encoder_frames(cfg, 300) == 0);
}

TEST_CASE("MAC count matches a term-by-term oracle") {
  const auto cfg = EncoderConfig::base();
  const std::int64_t t = 174;
  std::int64_t conv = 0, len = 56000, in = 1;
  const int kernels[] = {10, 3, 3, 3, 3, 2, 2};
  const int strides[] = {5, 2, 2, 2, 2, 2, 2};
  for (int i = 0; i < 7; ++i) {
    len = (len - kernels[i]) / strides[i] + 1;
    conv += len * 512 * in * kernels[i];
    in = 512;
  }
  const std::int64_t fixed = conv + t * 512 * 768 + t * 768 * 48 * 128;
  const std::int64_t per_layer = 4 * t * 768 * 768 + 2 * t * t * 768 + 2 * t * 768 * 3072;
  for (int k : {0, 2, 12}) {
    CHECK(slice_mac_breakdown(cfg, {k}, 3.5).total == fixed + k * per_layer);
  }
}

TEST_CASE("full encoder at 3.5 s is about 23 GMACs") {
  const double full = slice_macs(EncoderConfig::base(), {12}, 3.5);
  CHECK(std::abs(full - 23.04) / 23.04 <= 0.15);
}

TEST_CASE("two-layer slice saves about half the MACs") {
  const auto cfg = EncoderConfig::base();
  const double full = slice_macs(cfg, {12}, 3.5);
  const double two = slice_macs(cfg, {2}, 3.5);
  CHECK(std::abs((full - two) / full - 0.52) <= 0.10);
}

TEST_CASE("doubling the input scales linear terms by the frame ratio") {
  const auto cfg = EncoderConfig::base();
  const auto a = slice_mac_breakdown(cfg, {12}, 3.5);
  const auto b = slice_mac_breakdown(cfg, {12}, 7.0);
  // Valid convolutions lose a few boundary frames, so "double" holds to <1%.
  CHECK(static_cast<double>(b.conv_encoder) / a.conv_encoder == doctest::Approx(2.0).epsilon(0.01));
  CHECK(static_cast<double>(b.ffn) / a.ffn == doctest::Approx(2.0).epsilon(0.01));
  CHECK(static_cast<double>(b.ffn) / a.ffn == static_cast<double>(b.frames) / a.frames);
  CHECK(static_cast<double>(b.attention_scores) / a.attention_scores > 3.9);
}

TEST_CASE("cost report composition") {
  const auto cfg = EncoderConfig::base();
  const auto logreg = default_grid(Algorithm::logreg);
  const auto r12 = cost_report(logreg, {10, 5, 5}, {12}, cfg);
  CHECK(r12.h == 3);
  CHECK(r12.d == 10);
  CHECK(r12.cost_proxy == doctest::Approx(r12.e_proxy_gmacs * 30));
  const auto r2 = cost_report(logreg, {10, 5, 5}, {2}, cfg, 3.5, 769);
  CHECK(r2.e_proxy_gmacs / r12.e_proxy_gmacs == doctest::Approx(slice_macs(cfg, {2}, 3.5) / slice_macs(cfg, {12}, 3.5)));
  CHECK(r2.e_proxy_gmacs / r12.e_proxy_gmacs == doctest::Approx(0.48).epsilon(0.25));
  const auto j = to_json(r2);
  CHECK(j["trainable_param_count"] == 769);
  CHECK(j["H"] == 3);
  CHECK(j["keep_layers"] == 2);
}

TEST_CASE("invalid slices") {
  const auto cfg = EncoderConfig::base();
  CHECK_THROWS_AS(slice_params(cfg, {13}), UsageError);
  CHECK_THROWS_AS(slice_params(cfg, {-1}), UsageError);
  CHECK_THROWS_AS(slice_macs(cfg, {2}, 0.0), UsageError);
  auto bad = cfg;
  bad.attention_heads = 7;
  CHECK_THROWS_AS(slice_params(bad, {2}), UsageError);
}
