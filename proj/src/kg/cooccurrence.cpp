#include "resae/errors.hpp"
#include "resae/kg.hpp"

namespace resae::kg {

Tensor cooccurrence_counts(std::span<const HyperFact> facts, std::size_t n_relations) {
  Tensor counts({n_relations, n_relations});
  for (const auto& f : facts) {
    if (f.relation >= n_relations) {
      throw ShapeError("cooccurrence_counts: relation " + std::to_string(f.relation) +
                       " outside " + std::to_string(n_relations) + " rows");
    }
    for (const auto& q : f.qualifiers) {
      if (q.relation >= n_relations) {
        throw ShapeError("cooccurrence_counts: qualifier relation " + std::to_string(q.relation) +
                         " outside " + std::to_string(n_relations) + " columns");
      }
      counts.at(f.relation, q.relation) += 1.0;
    }
  }
  return counts;
}

Tensor normalize_cooccurrence(const Tensor& counts) {
  const std::size_t rows = counts.rows();
  double total = 0.0;
  for (double v : counts.values()) total += v;
  Tensor out(counts.shape());
  if (rows == 0 || total == 0.0) return out;
  // Global scalar: average row sum over every relation row.
  const double mean_rowsum = total / static_cast<double>(rows);
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / mean_rowsum;
  return out;
}

CooMatrix compute_cooccurrence(std::span<const HyperFact> facts, const Vocabulary& vocab,
                               Direction direction) {
  std::vector<HyperFact> selected;
  if (direction != Direction::kLoop) {
    for (const auto& f : facts) {
      if (vocab.direction(f.relation) == direction) selected.push_back(f);
    }
  }
  return CooMatrix{direction,
                   normalize_cooccurrence(cooccurrence_counts(selected, vocab.num_relations()))};
}

}  // namespace resae::kg
