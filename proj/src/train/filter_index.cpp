#include <algorithm>

#include "resae/train.hpp"

namespace resae::train {

QueryKey make_key(const decoder::Query& query) {
  QueryKey key{query.known, query.relation, query.qualifiers};
  std::sort(key.qualifiers.begin(), key.qualifiers.end());
  return key;
}

FilterIndex::FilterIndex(std::span<const std::span<const kg::HyperFact>> splits,
                         const kg::Vocabulary& vocab) {
  for (const auto& split : splits)
    for (const auto& f : split) add(f, vocab);
}

FilterIndex FilterIndex::from_dataset(const kg::Dataset& dataset) {
  const std::span<const kg::HyperFact> splits[] = {dataset.train, dataset.valid, dataset.test};
  return FilterIndex(splits, dataset.vocab);
}

void FilterIndex::add(const kg::HyperFact& fact, const kg::Vocabulary& vocab) {
  for (auto side : {decoder::Side::kTail, decoder::Side::kHead}) {
    auto& targets = index_[make_key(decoder::make_query(fact, side, vocab))];
    const auto target = decoder::query_target(fact, side);
    auto it = std::lower_bound(targets.begin(), targets.end(), target);
    if (it == targets.end() || *it != target) targets.insert(it, target);
  }
}

std::span<const kg::EntityId> FilterIndex::targets(const decoder::Query& query) const {
  auto it = index_.find(make_key(query));
  if (it == index_.end()) return {};
  return it->second;
}

}  // namespace resae::train
