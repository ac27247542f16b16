#include "resae/decoder.hpp"

#include <memory>
#include <stdexcept>
#include <string>

#include "resae/errors.hpp"

namespace resae::decoder {

Query make_query(const kg::HyperFact& fact, Side side, const kg::Vocabulary& vocab) {
  if (side == Side::kTail) return Query{fact.subject, fact.relation, fact.qualifiers};
  return Query{fact.object, vocab.inverse(fact.relation), fact.qualifiers};
}

kg::EntityId query_target(const kg::HyperFact& fact, Side side) {
  return side == Side::kTail ? fact.object : fact.subject;
}

StatementSequence build_sequence(const Query& query, std::size_t max_qualifiers) {
  if (query.qualifiers.size() > max_qualifiers) {
    throw PreconditionError("build_sequence: statement has " +
                            std::to_string(query.qualifiers.size()) +
                            " qualifier pairs; raise max_qualifiers (currently " +
                            std::to_string(max_qualifiers) + ")");
  }
  StatementSequence seq;
  const std::size_t length = 2 + 2 * max_qualifiers;
  seq.tokens.reserve(length);
  seq.tokens.push_back({TokenType::kSubject, query.known});
  seq.tokens.push_back({TokenType::kRelation, query.relation});
  for (const auto& q : query.qualifiers) {
    seq.tokens.push_back({TokenType::kQualifierRelation, q.relation});
    seq.tokens.push_back({TokenType::kQualifierEntity, q.value});
  }
  while (seq.tokens.size() < length) seq.tokens.push_back({TokenType::kPad, 0});
  seq.mask.resize(length);
  for (std::size_t i = 0; i < length; ++i) seq.mask[i] = seq.tokens[i].type != TokenType::kPad;
  return seq;
}

Tensor sequence_embeddings(const StatementSequence& seq, const Tensor& entity_emb,
                           const Tensor& relation_emb) {
  const std::size_t d = entity_emb.dim(1);
  if (relation_emb.dim(1) != d) {
    throw ShapeError("sequence_embeddings: widths " + shape_str(entity_emb.shape()) + " vs " +
                     shape_str(relation_emb.shape()));
  }
  Tensor out({seq.length(), d});
  for (std::size_t i = 0; i < seq.length(); ++i) {
    const Token& t = seq.tokens[i];
    const Tensor* table = nullptr;
    if (t.type == TokenType::kSubject || t.type == TokenType::kQualifierEntity) table = &entity_emb;
    if (t.type == TokenType::kRelation || t.type == TokenType::kQualifierRelation) table = &relation_emb;
    if (!table) continue;
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = table->at(t.id, j);
  }
  return out;
}

namespace {

std::size_t common_length(std::span<const StatementSequence> batch) {
  if (batch.empty()) throw PreconditionError("decoder: empty batch");
  const std::size_t length = batch.front().length();
  for (const auto& s : batch) {
    if (s.length() != length) throw ShapeError("decoder: sequences of unequal length in batch");
  }
  return length;
}

ad::Var linear(const ad::Var& x, const ad::Var& w, const ad::Var& b) {
  return ad::add_bias(ad::matmul(x, w), b);
}

}  // namespace

ad::Var embed_batch(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                    const ad::Var& relation_emb) {
  const std::size_t length = common_length(batch);
  const std::size_t v = entity_emb.value().dim(0);
  const std::size_t r = relation_emb.value().dim(0);
  const std::size_t d = entity_emb.value().dim(1);
  if (relation_emb.value().dim(1) != d) {
    throw ShapeError("embed_batch: widths " + shape_str(entity_emb.shape()) + " vs " +
                     shape_str(relation_emb.shape()));
  }
  ad::Tape& tape = *entity_emb.tape();
  // Combined lookup table: entities, relations, then one frozen zero row.
  const ad::Var parts[] = {entity_emb, relation_emb, tape.constant(Tensor({1, d}))};
  ad::Var table = ad::concat(parts, 0);
  std::vector<std::size_t> index;
  index.reserve(batch.size() * length);
  for (const auto& seq : batch) {
    for (const auto& t : seq.tokens) {
      switch (t.type) {
        case TokenType::kSubject:
        case TokenType::kQualifierEntity:
          if (t.id >= v) throw ShapeError("embed_batch: entity id out of range");
          index.push_back(t.id);
          break;
        case TokenType::kRelation:
        case TokenType::kQualifierRelation:
          if (t.id >= r) throw ShapeError("embed_batch: relation id out of range");
          index.push_back(v + t.id);
          break;
        case TokenType::kPad:
          index.push_back(v + r);
          break;
      }
    }
  }
  return ad::gather_rows(table, index);
}

ad::Var transform(const ad::Var& tokens, std::span<const StatementSequence> batch,
                  const DecoderVars& vars, const DecoderConfig& config) {
  const std::size_t length = common_length(batch);
  std::vector<bool> mask_vec;
  mask_vec.reserve(batch.size() * length);
  for (const auto& s : batch) mask_vec.insert(mask_vec.end(), s.mask.begin(), s.mask.end());
  // std::vector<bool> is bit-packed; attention wants contiguous bools.
  std::unique_ptr<bool[]> mask(new bool[mask_vec.size()]);
  for (std::size_t i = 0; i < mask_vec.size(); ++i) mask[i] = mask_vec[i];
  const std::span<const bool> mask_span(mask.get(), mask_vec.size());

  ad::Var x = tokens;
  for (const auto& layer : vars.layers) {
    ad::Var q = linear(x, layer.wq, layer.bq);
    ad::Var k = linear(x, layer.wk, layer.bk);
    ad::Var v = linear(x, layer.wv, layer.bv);
    ad::Var attended = linear(ad::attention(q, k, v, mask_span, length, config.n_heads), layer.wo, layer.bo);
    x = ad::layer_norm(ad::add(x, ad::dropout(attended, config.dropout)), layer.ln1_gain, layer.ln1_bias);
    ad::Var ff = ad::dropout(ad::activation(linear(x, layer.w1, layer.b1), config.ffn_activation),
                             config.dropout);
    ff = linear(ff, layer.w2, layer.b2);
    x = ad::layer_norm(ad::add(x, ad::dropout(ff, config.dropout)), layer.ln2_gain, layer.ln2_bias);
  }
  return x;
}

ad::Var typewise_readout(const ad::Var& token_states, std::span<const StatementSequence> batch,
                         ad::Pool pool) {
  const std::size_t length = common_length(batch);
  const std::size_t b = batch.size();
  const std::size_t d = token_states.value().dim(1);
  if (token_states.value().dim(0) != b * length) {
    throw ShapeError("typewise_readout: states " + shape_str(token_states.shape()) + " for " +
                     std::to_string(b) + " sequences of length " + std::to_string(length));
  }
  constexpr std::size_t pooled_types = kTokenTypes - 1;
  std::vector<std::int64_t> segment(b * length, -1);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < length; ++i) {
      const auto type = static_cast<std::size_t>(batch[s].tokens[i].type);
      if (type < pooled_types) segment[s * length + i] = static_cast<std::int64_t>(s * pooled_types + type);
    }
  }
  ad::Var pooled = ad::segment_pool(token_states, segment, b * pooled_types, pool);
  ad::Var flat = ad::reshape(pooled, {b, pooled_types * d});
  const ad::Var parts[] = {flat, token_states.tape()->constant(Tensor({b, d}))};
  return ad::concat(parts, 1);
}

ad::Var mean_readout(const ad::Var& token_states, std::span<const StatementSequence> batch) {
  const std::size_t length = common_length(batch);
  std::vector<std::int64_t> segment(batch.size() * length, -1);
  for (std::size_t s = 0; s < batch.size(); ++s)
    for (std::size_t i = 0; i < length; ++i)
      if (batch[s].mask[i]) segment[s * length + i] = static_cast<std::int64_t>(s);
  return ad::segment_pool(token_states, segment, batch.size(), ad::Pool::kMean);
}

ad::Var decode_hidden(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                      const ad::Var& relation_emb, const DecoderVars& vars,
                      const DecoderConfig& config) {
  ad::Var states = transform(embed_batch(batch, entity_emb, relation_emb), batch, vars, config);
  ad::Var pooled = config.readout == Readout::kTypewise ? typewise_readout(states, batch, config.pool)
                                                        : mean_readout(states, batch);
  ad::Var hidden = ad::activation(linear(pooled, vars.readout_w, vars.readout_b), config.readout_activation);
  return ad::dropout(hidden, config.dropout);
}

ad::Var score_entities(const ad::Var& hidden, const ad::Var& entity_emb, const DecoderVars& vars,
                       const DecoderConfig& config) {
  if (hidden.value().dim(1) != entity_emb.value().dim(1)) {
    throw ShapeError("score_entities: hidden " + shape_str(hidden.shape()) + " vs entities " +
                     shape_str(entity_emb.shape()));
  }
  if (config.scorer == Scorer::kDot) return ad::matmul_nt(hidden, entity_emb);
  ad::Var cosine = ad::matmul_nt(ad::l2_normalize_rows(hidden), ad::l2_normalize_rows(entity_emb));
  return ad::scale_by(cosine, vars.temperature);
}

ad::Var decode_scores(std::span<const StatementSequence> batch, const ad::Var& entity_emb,
                      const ad::Var& relation_emb, const DecoderVars& vars,
                      const DecoderConfig& config) {
  return score_entities(decode_hidden(batch, entity_emb, relation_emb, vars, config), entity_emb,
                        vars, config);
}

}  // namespace resae::decoder
