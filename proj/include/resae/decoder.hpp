#pragma once

// Position-free transformer over statement token sequences with a type-wise
// pooling readout and one-vs-all entity scoring.

#include <cstdint>
#include <span>
#include <vector>

#include "resae/kg.hpp"
#include "resae/model_config.hpp"
#include "resae/ops.hpp"

namespace resae::decoder {

// Readout slot order follows the enum values.
enum class TokenType : std::uint8_t {
  kSubject = 0,
  kRelation = 1,
  kQualifierEntity = 2,
  kQualifierRelation = 3,
  kPad = 4,
};
inline constexpr std::size_t kTokenTypes = 5;

enum class Side { kTail, kHead };

// A link-prediction query: the known entity, the relation read from it
// (forward for tail prediction, inverse for head prediction) and qualifiers.
struct Query {
  kg::EntityId known;
  kg::RelationId relation;
  std::vector<kg::Qualifier> qualifiers;
};

Query make_query(const kg::HyperFact& fact, Side side, const kg::Vocabulary& vocab);
kg::EntityId query_target(const kg::HyperFact& fact, Side side);

struct Token {
  TokenType type;
  std::uint32_t id;  // entity id or relation id; unused for pads
};

struct StatementSequence {
  std::vector<Token> tokens;
  std::vector<bool> mask;  // false for pads
  std::size_t length() const noexcept { return tokens.size(); }
};

// [known, relation, qr_1, qv_1, ..., pad...] of length 2 + 2 * max_qualifiers.
// The target entity is never part of the sequence.
StatementSequence build_sequence(const Query& query, std::size_t max_qualifiers);

// Token rows [L, d] looked up from the given tables; pad rows are zero.
Tensor sequence_embeddings(const StatementSequence& seq, const Tensor& entity_emb,
                           const Tensor& relation_emb);

struct LayerVars {
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Var ln1_gain, ln1_bias;
  ad::Var w1, b1, w2, b2;
  ad::Var ln2_gain, ln2_bias;
};

struct DecoderVars {
  std::vector<LayerVars> layers;
  ad::Var readout_w;  // [5d, d] (type-wise) or [d, d] (mean)
  ad::Var readout_b;
  ad::Var temperature;  // cosine scorer only
};

// Token embeddings for a batch of equal-length sequences: [B*L, d].
ad::Var embed_batch(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                    const ad::Var& relation_emb);

// Post-norm transformer layers with key padding mask; no positional signal.
ad::Var transform(const ad::Var& tokens, std::span<const StatementSequence> batch,
                  const DecoderVars& vars, const DecoderConfig& config);

// Per sequence: concat of pooled subject, relation, qualifier-entity,
// qualifier-relation and pad slots [B, 5d]. Pads never contribute and the pad
// slot is a constant zero block. Absent types pool to zeros.
ad::Var typewise_readout(const ad::Var& token_states, std::span<const StatementSequence> batch,
                         ad::Pool pool);
// Pool over all non-pad tokens [B, d].
ad::Var mean_readout(const ad::Var& token_states, std::span<const StatementSequence> batch);

// Hidden query vector of each sequence [B, d].
ad::Var decode_hidden(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                      const ad::Var& relation_emb, const DecoderVars& vars,
                      const DecoderConfig& config);

// Scores of every real entity [B, V].
ad::Var score_entities(const ad::Var& hidden, const ad::Var& entity_emb, const DecoderVars& vars,
                       const DecoderConfig& config);

ad::Var decode_scores(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                      const ad::Var& relation_emb, const DecoderVars& vars,
                      const DecoderConfig& config);

}  // namespace resae::decoder
