#include "resae/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "resae/errors.hpp"

namespace resae {

namespace {

constexpr const char* kDirectionKeys[] = {"forward", "inverse", "loop"};

std::string enc_name(std::size_t layer, const std::string& leaf) {
  return "encoder.layer" + std::to_string(layer) + "." + leaf;
}

std::string dec_name(std::size_t layer, const std::string& leaf) {
  return "decoder.layer" + std::to_string(layer) + "." + leaf;
}

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : t.values()) x = dist(rng);
  return t;
}

Tensor glorot_like(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  return uniform({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace

std::size_t max_qualifiers_in(const kg::Dataset& dataset) {
  std::size_t m = 0;
  for (const auto* split : {&dataset.train, &dataset.valid, &dataset.test})
    for (const auto& f : *split) m = std::max(m, f.qualifiers.size());
  return m;
}

ResaeModel::ResaeModel(ModelConfig config, const kg::Dataset& dataset, std::uint64_t seed)
    : config_(std::move(config)), vocab_(dataset.vocab), params_(seed) {
  config_.encoder.validate();
  config_.decoder.validate(config_.encoder.dim);
  if (dataset.train.empty()) throw PreconditionError("model: training split is empty");
  graph_ = encoder::build_graph_inputs(dataset.train, vocab_);
  const std::size_t needed = max_qualifiers_in(dataset);
  max_qualifiers_ = config_.decoder.max_qualifiers ? config_.decoder.max_qualifiers : needed;
  if (needed > max_qualifiers_) {
    throw ConfigError("max_qualifiers=" + std::to_string(max_qualifiers_) +
                      " is below the dataset maximum of " + std::to_string(needed));
  }
  init_params(seed);
}

void ResaeModel::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& ec = config_.encoder;
  const auto& dc = config_.decoder;
  const std::size_t d = ec.dim;
  const double emb_bound = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor ent = uniform({vocab_.num_entities(), d}, emb_bound, rng);
  for (std::size_t j = 0; j < d; ++j) ent.at(vocab_.pad_entity(), j) = 0.0;
  params_.add("entity_emb", std::move(ent));
  Tensor rel = uniform({vocab_.num_relations(), d}, emb_bound, rng);
  for (std::size_t j = 0; j < d; ++j) rel.at(vocab_.pad_relation(), j) = 0.0;
  params_.add("relation_emb", std::move(rel));

  for (std::size_t l = 0; l < ec.n_layers; ++l) {
    params_.add(enc_name(l, "alpha"), Tensor({1}, ec.alpha_init));
    params_.add(enc_name(l, "beta"), Tensor({1}, ec.beta_init));
    for (const char* dir : kDirectionKeys)
      params_.add(enc_name(l, std::string("w_dir.") + dir), glorot_like(ec.slots() * d, d, rng));
    if (ec.use_coo) {
      for (const char* dir : kDirectionKeys)
        params_.add(enc_name(l, std::string("w_coo.") + dir), glorot_like(d, d, rng));
    }
  }

  for (std::size_t l = 0; l < dc.n_layers; ++l) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      params_.add(dec_name(l, w), glorot_like(d, d, rng));
      params_.add(dec_name(l, std::string("b") + (w + 1)), Tensor({d}));
    }
    params_.add(dec_name(l, "ln1.gain"), Tensor({d}, 1.0));
    params_.add(dec_name(l, "ln1.bias"), Tensor({d}));
    params_.add(dec_name(l, "ffn.w1"), glorot_like(d, dc.hidden_dim, rng));
    params_.add(dec_name(l, "ffn.b1"), Tensor({dc.hidden_dim}));
    params_.add(dec_name(l, "ffn.w2"), glorot_like(dc.hidden_dim, d, rng));
    params_.add(dec_name(l, "ffn.b2"), Tensor({d}));
    params_.add(dec_name(l, "ln2.gain"), Tensor({d}, 1.0));
    params_.add(dec_name(l, "ln2.bias"), Tensor({d}));
  }
  const std::size_t readout_in = dc.readout == Readout::kTypewise ? decoder::kTokenTypes * d : d;
  params_.add("decoder.readout.w", glorot_like(readout_in, d, rng));
  params_.add("decoder.readout.b", Tensor({d}));
  if (dc.scorer == Scorer::kCosine) params_.add("decoder.temperature", Tensor({1}, dc.temperature_init));
}

template <class Get>
ResaeModel::Bound ResaeModel::bind_with(ad::Tape& tape, Get&& get) const {
  const auto& ec = config_.encoder;
  const std::size_t d = ec.dim;
  Bound b;
  b.entity_emb = ad::slice(get("entity_emb"), 0, 0, vocab_.num_real_entities());
  const ad::Var rel_parts[] = {ad::slice(get("relation_emb"), 0, 0, vocab_.pad_relation()),
                               tape.constant(Tensor({1, d}))};
  b.relation_emb = ad::concat(rel_parts, 0);

  for (std::size_t l = 0; l < ec.n_layers; ++l) {
    encoder::LayerVars lv;
    lv.alpha = get(enc_name(l, "alpha"));
    lv.beta = get(enc_name(l, "beta"));
    for (std::size_t k = 0; k < 3; ++k) {
      lv.w_direction[k] = get(enc_name(l, std::string("w_dir.") + kDirectionKeys[k]));
      if (ec.use_coo) lv.w_coo[k] = get(enc_name(l, std::string("w_coo.") + kDirectionKeys[k]));
    }
    b.encoder.push_back(lv);
  }

  for (std::size_t l = 0; l < config_.decoder.n_layers; ++l) {
    decoder::LayerVars lv;
    lv.wq = get(dec_name(l, "wq"));
    lv.bq = get(dec_name(l, "bq"));
    lv.wk = get(dec_name(l, "wk"));
    lv.bk = get(dec_name(l, "bk"));
    lv.wv = get(dec_name(l, "wv"));
    lv.bv = get(dec_name(l, "bv"));
    lv.wo = get(dec_name(l, "wo"));
    lv.bo = get(dec_name(l, "bo"));
    lv.ln1_gain = get(dec_name(l, "ln1.gain"));
    lv.ln1_bias = get(dec_name(l, "ln1.bias"));
    lv.w1 = get(dec_name(l, "ffn.w1"));
    lv.b1 = get(dec_name(l, "ffn.b1"));
    lv.w2 = get(dec_name(l, "ffn.w2"));
    lv.b2 = get(dec_name(l, "ffn.b2"));
    lv.ln2_gain = get(dec_name(l, "ln2.gain"));
    lv.ln2_bias = get(dec_name(l, "ln2.bias"));
    b.decoder.layers.push_back(lv);
  }
  b.decoder.readout_w = get("decoder.readout.w");
  b.decoder.readout_b = get("decoder.readout.b");
  if (config_.decoder.scorer == Scorer::kCosine) b.decoder.temperature = get("decoder.temperature");
  return b;
}

ResaeModel::Bound ResaeModel::bind(ad::Tape& tape) {
  return bind_with(tape, [&](const std::string& name) { return tape.param(params_.get(name)); });
}

ResaeModel::Bound ResaeModel::bind_frozen(ad::Tape& tape) const {
  return bind_with(tape, [&](const std::string& name) { return tape.constant(params_.get(name).value); });
}

encoder::Encoded ResaeModel::encode(const Bound& bound) const {
  return encoder::encode(graph_, bound.encoder, bound.entity_emb, bound.relation_emb, config_.encoder);
}

ad::Var ResaeModel::scores(const Bound& bound, const encoder::Encoded& encoded,
                           std::span<const decoder::StatementSequence> batch) const {
  return decoder::decode_scores(batch, encoded.entities, encoded.relations, bound.decoder,
                                config_.decoder);
}

ad::Var ResaeModel::forward(ad::Tape& tape, std::span<const decoder::StatementSequence> batch) {
  Bound bound = bind(tape);
  return scores(bound, encode(bound), batch);
}

decoder::StatementSequence ResaeModel::sequence(const decoder::Query& query) const {
  return decoder::build_sequence(query, max_qualifiers_);
}

ResaeModel::FrozenTables ResaeModel::encode_frozen() const {
  ad::Tape tape(ad::Mode::kEval);
  Bound bound = bind_frozen(tape);
  encoder::Encoded enc = encode(bound);
  return FrozenTables{enc.entities.value(), enc.relations.value()};
}

Tensor ResaeModel::score_batch(const FrozenTables& tables,
                               std::span<const decoder::StatementSequence> batch) const {
  ad::Tape tape(ad::Mode::kEval);
  Bound bound = bind_frozen(tape);
  encoder::Encoded enc{tape.constant(tables.entities), tape.constant(tables.relations)};
  return scores(bound, enc, batch).value();
}

Tensor ResaeModel::score_query(const decoder::Query& query) const {
  const auto seq = sequence(query);
  const Tensor s = score_batch(encode_frozen(), std::span(&seq, 1));
  const std::size_t v = num_entities();
  Tensor out({v + 1});
  for (std::size_t i = 0; i < v; ++i) out[i] = s.at(0, i);
  out[v] = -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace resae
