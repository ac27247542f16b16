#pragma once

// Relation-aware message passing over hyper-relational facts.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "resae/kg.hpp"
#include "resae/model_config.hpp"
#include "resae/ops.hpp"

namespace resae::encoder {

// Facts of one direction type in column form. Qualifier pairs are flattened;
// qualifier_fact maps each pair to its owning fact.
struct FactBatch {
  std::vector<std::size_t> subject;
  std::vector<std::size_t> relation;
  std::vector<std::size_t> object;
  std::vector<std::int64_t> qualifier_fact;
  std::vector<std::size_t> qualifier_relation;
  std::vector<std::size_t> qualifier_value;
  std::vector<std::size_t> qualifier_main;  // main relation of the owning fact

  static FactBatch from_facts(std::span<const kg::HyperFact> facts);
  std::size_t size() const noexcept { return subject.size(); }
  std::size_t qualifier_count() const noexcept { return qualifier_fact.size(); }
};

// Everything the encoder needs from the training graph, computed once.
struct GraphInputs {
  std::size_t num_entities = 0;   // real entities; the pad row is not encoded
  std::size_t num_relations = 0;  // full relation vocabulary
  std::array<FactBatch, 3> groups;      // indexed by kg::Direction
  std::array<Tensor, 3> coo;            // [R, R] per direction
  std::vector<bool> attention_columns;  // relations that may be attended to
  std::vector<double> inverse_in_degree;
};

// Inverse-augments the facts, adds one self-loop per real entity (unless
// disabled) and computes the per-direction co-occurrence matrices.
GraphInputs build_graph_inputs(std::span<const kg::HyperFact> train_facts,
                               const kg::Vocabulary& vocab, bool add_self_loops = true);

// Row-wise softmax((H H^T) / sqrt(d)) without projections. Columns with a
// false mask entry receive an additive -1e9 before the softmax. An empty mask
// leaves every column available.
ad::Var relation_attention(const ad::Var& relation_emb, const std::vector<bool>& column_mask = {});

// Per-layer parameters bound on a tape.
struct LayerVars {
  ad::Var alpha;
  ad::Var beta;
  std::array<ad::Var, 3> w_direction;  // [slots*d, d]
  std::array<ad::Var, 3> w_coo;        // [d, d]; unbound when use_coo is off
};

// Attention-weighted qualifier pooling: pair j of a fact gets weight
// att[main, qr_j] (1 when attention is disabled) and the weighted qualifier
// relation rows are pooled per fact. Facts without qualifiers give zeros.
ad::Var qualifier_attention_pool(const ad::Var& att, const FactBatch& facts,
                                 const ad::Var& relation_emb, const EncoderConfig& config);

// Per-fact message features [F, slots*d].
ad::Var assemble_hyper_features(const FactBatch& facts, const ad::Var& entity_emb,
                                const ad::Var& relation_emb, const ad::Var& att,
                                const EncoderConfig& config);

// h_v <- f(alpha * sum(messages into v) + beta * h_v)
ad::Var node_update(const GraphInputs& graph, const LayerVars& layer, const ad::Var& entity_emb,
                    const ad::Var& relation_emb, const ad::Var& att, const EncoderConfig& config);

// psi_g = alpha * H + beta * (coo_g H) W_g for each direction g;
// H <- act_r(mean_g psi_g). Without co-occurrence the beta term is dropped.
ad::Var relation_update(const ad::Var& relation_emb, std::span<const Tensor> coo,
                        const LayerVars& layer, const EncoderConfig& config);

struct Encoded {
  ad::Var entities;   // [V, d], real entities
  ad::Var relations;  // [R, d]
};

// Applies every layer: attention, node update, relation update.
Encoded encode(const GraphInputs& graph, std::span<const LayerVars> layers,
               const ad::Var& entity_emb, const ad::Var& relation_emb,
               const EncoderConfig& config);

}  // namespace resae::encoder
