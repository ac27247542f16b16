#include <stdexcept>
#include <unordered_set>

#include "resae/errors.hpp"
#include "resae/kg.hpp"

namespace resae::kg {

Vocabulary::Vocabulary(std::vector<std::string> entity_labels,
                       std::vector<std::string> relation_labels)
    : real_entities_(entity_labels.size()), real_relations_(relation_labels.size()) {
  entity_labels_ = std::move(entity_labels);
  entity_labels_.emplace_back(kPadLabel);
  relation_labels_ = std::move(relation_labels);
  for (std::size_t r = 0; r < real_relations_; ++r) {
    relation_labels_.push_back(relation_labels_[r] + std::string(kInverseSuffix));
  }
  relation_labels_.emplace_back(kLoopLabel);
  relation_labels_.emplace_back(kPadLabel);
  for (std::size_t e = 0; e < entity_labels_.size(); ++e) {
    if (!entity_index_.emplace(entity_labels_[e], static_cast<EntityId>(e)).second) {
      throw std::invalid_argument("Vocabulary: duplicate or reserved entity label '" +
                                  entity_labels_[e] + "'");
    }
  }
  for (std::size_t r = 0; r < relation_labels_.size(); ++r) {
    if (!relation_index_.emplace(relation_labels_[r], static_cast<RelationId>(r)).second) {
      throw std::invalid_argument("Vocabulary: duplicate or reserved relation label '" +
                                  relation_labels_[r] + "'");
    }
  }
}

RelationId Vocabulary::inverse(RelationId r) const {
  if (is_forward(r)) return static_cast<RelationId>(r + real_relations_);
  if (is_inverse(r)) return static_cast<RelationId>(r - real_relations_);
  throw std::invalid_argument("Vocabulary::inverse: relation " + std::to_string(r) +
                              " (loop/pad) has no inverse");
}

Direction Vocabulary::direction(RelationId r) const {
  if (is_forward(r)) return Direction::kForward;
  if (is_inverse(r)) return Direction::kInverse;
  if (r == loop_relation()) return Direction::kLoop;
  throw std::invalid_argument("Vocabulary::direction: relation " + std::to_string(r) +
                              " has no direction");
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view label) const {
  const auto it = entity_index_.find(std::string(label));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view label) const {
  const auto it = relation_index_.find(std::string(label));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

EntityId Vocabulary::entity_id(std::string_view label) const {
  if (auto id = find_entity(label)) return *id;
  throw std::out_of_range("unknown entity '" + std::string(label) + "'");
}

RelationId Vocabulary::relation_id(std::string_view label) const {
  if (auto id = find_relation(label)) return *id;
  throw std::out_of_range("unknown relation '" + std::string(label) + "'");
}

Vocabulary build_vocab(std::span<const RawStatement> train, std::span<const RawStatement> valid,
                       std::span<const RawStatement> test) {
  if (train.empty() && valid.empty() && test.empty()) {
    throw PreconditionError("build_vocab: no statements");
  }
  std::vector<std::string> entities, relations;
  std::unordered_set<std::string> seen_entity, seen_relation;
  auto entity = [&](const std::string& label) {
    if (seen_entity.insert(label).second) entities.push_back(label);
  };
  auto relation = [&](const std::string& label) {
    if (seen_relation.insert(label).second) relations.push_back(label);
  };
  for (auto split : {train, valid, test}) {
    for (const auto& st : split) {
      entity(st.subject);
      relation(st.relation);
      entity(st.object);
      for (const auto& [qr, qv] : st.qualifiers) {
        relation(qr);
        entity(qv);
      }
    }
  }
  return Vocabulary(std::move(entities), std::move(relations));
}

namespace {

std::vector<HyperFact> index_split(std::span<const RawStatement> raw, const Vocabulary& vocab) {
  std::vector<HyperFact> out;
  out.reserve(raw.size());
  for (const auto& st : raw) {
    HyperFact f{vocab.entity_id(st.subject), vocab.relation_id(st.relation),
                vocab.entity_id(st.object), {}};
    for (const auto& [qr, qv] : st.qualifiers) {
      f.qualifiers.push_back({vocab.relation_id(qr), vocab.entity_id(qv)});
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

Dataset index_dataset(std::span<const RawStatement> train, std::span<const RawStatement> valid,
                      std::span<const RawStatement> test) {
  Dataset ds;
  ds.vocab = build_vocab(train, valid, test);
  ds.train = index_split(train, ds.vocab);
  ds.valid = index_split(valid, ds.vocab);
  ds.test = index_split(test, ds.vocab);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& train, const std::filesystem::path& valid,
                     const std::filesystem::path& test, char delimiter) {
  if (train.empty()) throw ConfigError("load_dataset: a train file is required");
  auto read = [delimiter](const std::filesystem::path& p) {
    return p.empty() ? std::vector<RawStatement>{} : parse_statements(p, delimiter);
  };
  const auto tr = read(train), va = read(valid), te = read(test);
  return index_dataset(tr, va, te);
}

std::vector<RawStatement> to_raw(std::span<const HyperFact> facts, const Vocabulary& vocab) {
  std::vector<RawStatement> out;
  out.reserve(facts.size());
  for (const auto& f : facts) {
    RawStatement st{vocab.entity_label(f.subject), vocab.relation_label(f.relation),
                    vocab.entity_label(f.object), {}};
    for (const auto& q : f.qualifiers) {
      st.qualifiers.emplace_back(vocab.relation_label(q.relation), vocab.entity_label(q.value));
    }
    out.push_back(std::move(st));
  }
  return out;
}

void validate_facts(std::span<const HyperFact> facts, const Vocabulary& vocab) {
  for (const auto& f : facts) {
    const bool ok_main = f.subject < vocab.num_real_entities() &&
                         f.object < vocab.num_real_entities() &&
                         (vocab.is_forward(f.relation) || vocab.is_inverse(f.relation));
    if (!ok_main) throw std::out_of_range("fact id outside the vocabulary");
    for (const auto& q : f.qualifiers) {
      if (!vocab.is_forward(q.relation) || q.value >= vocab.num_real_entities()) {
        throw std::out_of_range("qualifier id outside the vocabulary");
      }
    }
  }
}

std::vector<HyperFact> add_inverse_facts(std::span<const HyperFact> facts,
                                         const Vocabulary& vocab) {
  std::vector<HyperFact> out;
  out.reserve(2 * facts.size());
  for (const auto& f : facts) {
    if (!vocab.is_forward(f.relation)) {
      throw PreconditionError("add_inverse_facts: fact already uses non-forward relation '" +
                              vocab.relation_label(f.relation) + "'");
    }
    out.push_back(f);
    out.push_back(HyperFact{f.object, vocab.inverse(f.relation), f.subject, f.qualifiers});
  }
  return out;
}

std::vector<HyperFact> strip_inverse_facts(std::span<const HyperFact> facts,
                                           const Vocabulary& vocab) {
  std::vector<HyperFact> out;
  for (const auto& f : facts) {
    if (vocab.is_forward(f.relation)) out.push_back(f);
  }
  return out;
}

}  // namespace resae::kg
