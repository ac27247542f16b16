#pragma once

// Encoder + decoder with owned parameters.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "resae/decoder.hpp"
#include "resae/encoder.hpp"
#include "resae/kg.hpp"
#include "resae/model_config.hpp"
#include "resae/param_store.hpp"

namespace resae {

// Largest qualifier count over every split.
std::size_t max_qualifiers_in(const kg::Dataset& dataset);

class ResaeModel {
 public:
  // Parameters: entity_emb [V+1, d] and relation_emb [2R+2, d] whose pad rows
  // stay zero, encoder.layer<l>.{alpha,beta,w_dir.<direction>,w_coo.<direction>},
  // decoder.layer<l>.*, decoder.readout.{w,b} and, for the cosine scorer,
  // decoder.temperature. Initialization is a pure function of the seed.
  ResaeModel(ModelConfig config, const kg::Dataset& dataset, std::uint64_t seed);

  struct Bound {
    ad::Var entity_emb;    // [V, d], real entities
    ad::Var relation_emb;  // [2R+2, d], pad row constant zero
    std::vector<encoder::LayerVars> encoder;
    decoder::DecoderVars decoder;
  };

  // Parameters as tape leaves; backward() accumulates into params().
  Bound bind(ad::Tape& tape);
  // Parameters as constants; for scoring with frozen weights.
  Bound bind_frozen(ad::Tape& tape) const;

  encoder::Encoded encode(const Bound& bound) const;
  // Scores [B, V] of already-encoded tables.
  ad::Var scores(const Bound& bound, const encoder::Encoded& encoded,
                 std::span<const decoder::StatementSequence> batch) const;
  // Encode + decode on one tape.
  ad::Var forward(ad::Tape& tape, std::span<const decoder::StatementSequence> batch);

  decoder::StatementSequence sequence(const decoder::Query& query) const;

  struct FrozenTables {
    Tensor entities;   // [V, d]
    Tensor relations;  // [2R+2, d]
  };
  // Encoder output in eval mode.
  FrozenTables encode_frozen() const;
  // Eval-mode scores [B, V] against frozen tables; safe to call concurrently.
  Tensor score_batch(const FrozenTables& tables,
                     std::span<const decoder::StatementSequence> batch) const;
  // Eval-mode scores over the full entity vocabulary [V+1]; pad gets -inf.
  Tensor score_query(const decoder::Query& query) const;

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const ModelConfig& config() const noexcept { return config_; }
  const kg::Vocabulary& vocab() const noexcept { return vocab_; }
  const encoder::GraphInputs& graph() const noexcept { return graph_; }
  std::size_t max_qualifiers() const noexcept { return max_qualifiers_; }
  std::size_t num_entities() const noexcept { return vocab_.num_real_entities(); }

 private:
  template <class Get>
  Bound bind_with(ad::Tape& tape, Get&& get) const;
  void init_params(std::uint64_t seed);

  ModelConfig config_;
  kg::Vocabulary vocab_;
  encoder::GraphInputs graph_;
  std::size_t max_qualifiers_ = 0;
  ParamStore params_;
};

}  // namespace resae
