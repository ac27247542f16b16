#pragma once

#include <cstddef>
#include <string>

#include "resae/ops.hpp"

namespace resae {

// Message feature layout: kSeparate = [h_u, h_r, pool(h_qr), pool(h_qv), att(h_qr)]
// (five slots); kMerged = [h_u, h_r, pool(h_qv), pool2(pool(h_qr), att(h_qr))]
// (four slots).
enum class FeatureVariant { kSeparate, kMerged };
enum class NeighborNorm { kNone, kInDegreeMean };
enum class Scorer { kDot, kCosine };
enum class Readout { kTypewise, kMean };

struct EncoderConfig {
  std::size_t dim = 200;
  std::size_t n_layers = 2;
  double dropout = 0.3;
  FeatureVariant feature_variant = FeatureVariant::kSeparate;
  ad::Pool pool_attention = ad::Pool::kMean;   // over weighted qualifier relations
  ad::Pool pool_qual_relation = ad::Pool::kMean;
  ad::Pool pool_qual_entity = ad::Pool::kMean;
  ad::Pool pool_second = ad::Pool::kMean;      // kMerged merge of the two relation pools
  ad::Activation activation = ad::Activation::kTanh;
  ad::Activation relation_activation = ad::Activation::kIdentity;
  bool use_attention = true;
  bool use_coo = true;
  NeighborNorm neighbor_norm = NeighborNorm::kNone;
  double alpha_init = 0.8;
  double beta_init = 0.2;
  // Only "single" (no projection, one head) is implemented; other values are
  // accepted and ignored.
  std::string attention_variant = "single";

  std::size_t slots() const noexcept { return feature_variant == FeatureVariant::kSeparate ? 5 : 4; }
  void validate() const;
};

struct DecoderConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t hidden_dim = 512;
  double dropout = 0.1;
  ad::Pool pool = ad::Pool::kMean;
  Scorer scorer = Scorer::kDot;
  Readout readout = Readout::kTypewise;
  // Qualifier-pair padding budget; 0 sizes it from the dataset.
  std::size_t max_qualifiers = 0;
  ad::Activation ffn_activation = ad::Activation::kGelu;
  ad::Activation readout_activation = ad::Activation::kTanh;
  double temperature_init = 10.0;

  void validate(std::size_t dim) const;
};

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
};

}  // namespace resae
