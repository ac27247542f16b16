#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "resae/kg.hpp"

namespace resae::kg {

std::string DatasetStats::qualified_summary() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%zu (%.1f%%)", facts_with_qualifiers, qualifier_percent);
  return buf;
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats s;
  s.splits = {dataset.train.size(), dataset.valid.size(), dataset.test.size()};
  for (const auto* split : {&dataset.train, &dataset.valid, &dataset.test}) {
    for (const auto& f : *split) {
      ++s.num_facts;
      if (!f.qualifiers.empty()) ++s.facts_with_qualifiers;
      s.max_qualifiers = std::max(s.max_qualifiers, f.qualifiers.size());
    }
  }
  s.qualifier_percent =
      s.num_facts ? 100.0 * static_cast<double>(s.facts_with_qualifiers) / static_cast<double>(s.num_facts)
                  : 0.0;
  s.num_entities = dataset.vocab.num_real_entities();
  s.num_relations = dataset.vocab.num_real_relations();
  return s;
}

std::string stats_to_json(const DatasetStats& stats) {
  nlohmann::ordered_json j;
  j["num_facts"] = stats.num_facts;
  j["facts_with_qualifiers"] = stats.facts_with_qualifiers;
  j["qualifier_percent"] = stats.qualifier_percent;
  j["qualified_summary"] = stats.qualified_summary();
  j["num_entities"] = stats.num_entities;
  j["num_relations"] = stats.num_relations;
  j["max_qualifiers"] = stats.max_qualifiers;
  j["train"] = stats.splits.train;
  j["valid"] = stats.splits.valid;
  j["test"] = stats.splits.test;
  return j.dump();
}

}  // namespace resae::kg
