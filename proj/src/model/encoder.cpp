#include "resae/encoder.hpp"

#include <cmath>

#include "resae/errors.hpp"

namespace resae::encoder {

FactBatch FactBatch::from_facts(std::span<const kg::HyperFact> facts) {
  FactBatch b;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto& f = facts[i];
    b.subject.push_back(f.subject);
    b.relation.push_back(f.relation);
    b.object.push_back(f.object);
    for (const auto& q : f.qualifiers) {
      b.qualifier_fact.push_back(static_cast<std::int64_t>(i));
      b.qualifier_relation.push_back(q.relation);
      b.qualifier_value.push_back(q.value);
      b.qualifier_main.push_back(f.relation);
    }
  }
  return b;
}

GraphInputs build_graph_inputs(std::span<const kg::HyperFact> train_facts,
                               const kg::Vocabulary& vocab, bool add_self_loops) {
  GraphInputs g;
  g.num_entities = vocab.num_real_entities();
  g.num_relations = vocab.num_relations();
  const auto directed = kg::add_inverse_facts(train_facts, vocab);
  std::array<std::vector<kg::HyperFact>, 3> by_direction;
  for (const auto& f : directed) {
    by_direction[static_cast<std::size_t>(vocab.direction(f.relation))].push_back(f);
  }
  if (add_self_loops) {
    for (std::size_t v = 0; v < g.num_entities; ++v) {
      const auto e = static_cast<kg::EntityId>(v);
      by_direction[static_cast<std::size_t>(kg::Direction::kLoop)].push_back(
          kg::HyperFact{e, vocab.loop_relation(), e, {}});
    }
  }
  for (auto dir : kg::kAllDirections) {
    const auto k = static_cast<std::size_t>(dir);
    g.groups[k] = FactBatch::from_facts(by_direction[k]);
    g.coo[k] = kg::compute_cooccurrence(directed, vocab, dir).values;
  }
  g.attention_columns.assign(g.num_relations, false);
  for (std::size_t r = 0; r < 2 * vocab.num_real_relations(); ++r) g.attention_columns[r] = true;

  std::vector<std::size_t> in_degree(g.num_entities, 0);
  for (const auto& group : g.groups)
    for (auto o : group.object) ++in_degree[o];
  g.inverse_in_degree.resize(g.num_entities);
  for (std::size_t v = 0; v < g.num_entities; ++v) {
    g.inverse_in_degree[v] = in_degree[v] ? 1.0 / static_cast<double>(in_degree[v]) : 0.0;
  }
  return g;
}

ad::Var relation_attention(const ad::Var& relation_emb, const std::vector<bool>& column_mask) {
  const Tensor& h = relation_emb.value();
  if (h.rank() != 2 || h.dim(1) == 0) {
    throw ShapeError("relation_attention: expected [R, d] with d > 0, got " + shape_str(h.shape()));
  }
  const std::size_t r = h.dim(0);
  if (r == 0) throw ShapeError("relation_attention: empty relation table");
  ad::Var logits = ad::scale(ad::matmul_nt(relation_emb, relation_emb),
                             1.0 / std::sqrt(static_cast<double>(h.dim(1))));
  if (!column_mask.empty()) {
    if (column_mask.size() != r) {
      throw ShapeError("relation_attention: mask of " + std::to_string(column_mask.size()) +
                       " columns for " + std::to_string(r) + " relations");
    }
    Tensor bias({r});
    bool any = false;
    for (std::size_t j = 0; j < r; ++j) {
      bias[j] = column_mask[j] ? 0.0 : ad::kMaskedLogit;
      any = any || column_mask[j];
    }
    if (!any) throw PreconditionError("relation_attention: every column is masked");
    logits = ad::add_bias(logits, relation_emb.tape()->constant(std::move(bias)));
  }
  return ad::softmax(logits, 1);
}

ad::Var qualifier_attention_pool(const ad::Var& att, const FactBatch& facts,
                                 const ad::Var& relation_emb, const EncoderConfig& config) {
  ad::Tape& tape = *relation_emb.tape();
  const std::size_t d = relation_emb.value().dim(1);
  if (facts.qualifier_count() == 0) return tape.constant(Tensor({facts.size(), d}));
  ad::Var hqr = ad::gather_rows(relation_emb, facts.qualifier_relation);
  ad::Var weighted =
      config.use_attention
          ? ad::scale_rows(hqr, ad::gather_elements(att, facts.qualifier_main, facts.qualifier_relation))
          : hqr;
  return ad::segment_pool(weighted, facts.qualifier_fact, facts.size(), config.pool_attention);
}

ad::Var assemble_hyper_features(const FactBatch& facts, const ad::Var& entity_emb,
                                const ad::Var& relation_emb, const ad::Var& att,
                                const EncoderConfig& config) {
  ad::Tape& tape = *entity_emb.tape();
  const std::size_t d = entity_emb.value().dim(1);
  if (relation_emb.value().dim(1) != d) {
    throw ShapeError("assemble_hyper_features: entity width " + shape_str(entity_emb.shape()) +
                     " vs relation width " + shape_str(relation_emb.shape()));
  }
  const std::size_t n = facts.size();
  ad::Var hu = ad::gather_rows(entity_emb, facts.subject);
  ad::Var hr = ad::gather_rows(relation_emb, facts.relation);
  ad::Var pooled_rel, pooled_ent, att_slot;
  if (facts.qualifier_count() == 0) {
    pooled_rel = pooled_ent = att_slot = tape.constant(Tensor({n, d}));
  } else {
    pooled_rel = ad::segment_pool(ad::gather_rows(relation_emb, facts.qualifier_relation),
                                  facts.qualifier_fact, n, config.pool_qual_relation);
    pooled_ent = ad::segment_pool(ad::gather_rows(entity_emb, facts.qualifier_value),
                                  facts.qualifier_fact, n, config.pool_qual_entity);
    att_slot = qualifier_attention_pool(att, facts, relation_emb, config);
  }
  if (config.feature_variant == FeatureVariant::kSeparate) {
    const ad::Var parts[] = {hu, hr, pooled_rel, pooled_ent, att_slot};
    return ad::concat(parts, 1);
  }
  // Second-level pool over the two relation summaries, row i with row i + n.
  const ad::Var pair[] = {pooled_rel, att_slot};
  std::vector<std::int64_t> seg(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) seg[i] = static_cast<std::int64_t>(i % n);
  ad::Var merged = ad::segment_pool(ad::concat(pair, 0), seg, n, config.pool_second);
  const ad::Var parts[] = {hu, hr, pooled_ent, merged};
  return ad::concat(parts, 1);
}

ad::Var node_update(const GraphInputs& graph, const LayerVars& layer, const ad::Var& entity_emb,
                    const ad::Var& relation_emb, const ad::Var& att, const EncoderConfig& config) {
  const std::size_t v = graph.num_entities;
  if (entity_emb.value().dim(0) != v) {
    throw ShapeError("node_update: entity table " + shape_str(entity_emb.shape()) + " for " +
                     std::to_string(v) + " entities");
  }
  for (std::size_t e = 0; e < v; ++e) {
    if (graph.inverse_in_degree[e] == 0.0) {
      throw PreconditionError("node_update: entity " + std::to_string(e) +
                              " has no incoming message and no self-loop");
    }
  }
  ad::Var aggregate;
  for (auto dir : kg::kAllDirections) {
    const auto k = static_cast<std::size_t>(dir);
    const FactBatch& group = graph.groups[k];
    if (group.size() == 0) continue;
    ad::Var features = assemble_hyper_features(group, entity_emb, relation_emb, att, config);
    ad::Var messages = ad::dropout(ad::matmul(features, layer.w_direction[k]), config.dropout);
    ad::Var contribution = ad::scatter_add_rows(messages, group.object, v);
    aggregate = aggregate.valid() ? ad::add(aggregate, contribution) : contribution;
  }
  if (config.neighbor_norm == NeighborNorm::kInDegreeMean) {
    aggregate = ad::scale_rows(aggregate, graph.inverse_in_degree);
  }
  ad::Var combined = ad::add(ad::scale_by(aggregate, layer.alpha), ad::scale_by(entity_emb, layer.beta));
  return ad::activation(combined, config.activation);
}

ad::Var relation_update(const ad::Var& relation_emb, std::span<const Tensor> coo,
                        const LayerVars& layer, const EncoderConfig& config) {
  const std::size_t r = relation_emb.value().dim(0);
  ad::Tape& tape = *relation_emb.tape();
  ad::Var total;
  for (std::size_t k = 0; k < coo.size(); ++k) {
    if (coo[k].rank() != 2 || coo[k].dim(0) != r || coo[k].dim(1) != r) {
      throw ShapeError("relation_update: co-occurrence " + shape_str(coo[k].shape()) +
                       " for " + std::to_string(r) + " relations");
    }
    ad::Var psi = ad::scale_by(relation_emb, layer.alpha);
    if (config.use_coo) {
      ad::Var mixed = ad::matmul(ad::matmul(tape.constant(coo[k]), relation_emb), layer.w_coo[k]);
      psi = ad::add(psi, ad::scale_by(mixed, layer.beta));
    }
    total = total.valid() ? ad::add(total, psi) : psi;
  }
  if (!total.valid()) throw ShapeError("relation_update: no direction matrices");
  return ad::activation(ad::scale(total, 1.0 / static_cast<double>(coo.size())),
                        config.relation_activation);
}

Encoded encode(const GraphInputs& graph, std::span<const LayerVars> layers,
               const ad::Var& entity_emb, const ad::Var& relation_emb,
               const EncoderConfig& config) {
  Encoded out{entity_emb, relation_emb};
  for (const auto& layer : layers) {
    ad::Var att;
    if (config.use_attention) att = relation_attention(out.relations, graph.attention_columns);
    ad::Var entities = node_update(graph, layer, out.entities, out.relations, att, config);
    out.relations = relation_update(out.relations, graph.coo, layer, config);
    out.entities = entities;
  }
  return out;
}

}  // namespace resae::encoder
