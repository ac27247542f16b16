#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "resae/errors.hpp"
#include "resae/kg.hpp"

namespace resae::kg {
namespace {

using Latent = std::vector<double>;

// Bilinear-diagonal score of the planted pattern.
double planted_score(const Latent& head, const Latent& rel, const Latent& tail) {
  double s = 0.0;
  for (std::size_t k = 0; k < head.size(); ++k) s += head[k] * rel[k] * tail[k];
  return s;
}

// Entities ordered by planted score against (anchor, rel), best first.
std::vector<std::size_t> ranked_candidates(const std::vector<Latent>& entities,
                                           const Latent& anchor, const Latent& rel) {
  std::vector<double> scores(entities.size());
  for (std::size_t e = 0; e < entities.size(); ++e) scores[e] = planted_score(anchor, rel, entities[e]);
  std::vector<std::size_t> order(entities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

Dataset generate_toy_kg(const ToyOptions& o) {
  if (o.n_entities < 2 || o.n_relations == 0 || o.n_facts == 0 || o.latent_rank == 0) {
    throw PreconditionError("generate_toy_kg: need >= 2 entities and positive relation/fact counts");
  }
  if (!(o.qualifier_ratio >= 0.0 && o.qualifier_ratio <= 1.0)) {
    throw PreconditionError("generate_toy_kg: qualifier_ratio must lie in [0, 1]");
  }
  const std::size_t n_qualified =
      static_cast<std::size_t>(std::floor(o.qualifier_ratio * static_cast<double>(o.n_facts)));
  if (n_qualified > 0 && o.max_qualifiers == 0) {
    throw PreconditionError("generate_toy_kg: max_qualifiers must be positive when qualifiers are requested");
  }
  const std::size_t capacity = o.n_entities * o.n_relations * (o.n_entities - 1);
  if (o.n_facts > capacity) {
    throw PreconditionError("generate_toy_kg: " + std::to_string(o.n_facts) +
                            " facts exceed the distinct triple capacity " + std::to_string(capacity));
  }

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto latent = [&] {
    Latent v(o.latent_rank);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  std::vector<Latent> ent(o.n_entities), rel(o.n_relations);
  for (auto& v : ent) v = latent();
  for (auto& v : rel) v = latent();

  std::uniform_int_distribution<std::size_t> pick_entity(0, o.n_entities - 1);
  std::uniform_int_distribution<std::size_t> pick_relation(0, o.n_relations - 1);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> used;

  struct Triple {
    std::size_t s, r, o;
  };
  std::vector<Triple> triples;
  triples.reserve(o.n_facts);
  while (triples.size() < o.n_facts) {
    const std::size_t i = triples.size();
    // The first facts cycle through every entity and relation so each label
    // appears in the corpus.
    const std::size_t s = i < o.n_entities ? i : pick_entity(rng);
    const std::size_t r = i < o.n_relations ? i : pick_relation(rng);
    bool placed = false;
    for (auto cand : ranked_candidates(ent, ent[s], rel[r])) {
      if (cand == s || used.contains({s, r, cand})) continue;
      used.insert({s, r, cand});
      triples.push_back({s, r, cand});
      placed = true;
      break;
    }
    if (!placed && i < std::max(o.n_entities, o.n_relations)) {
      throw PreconditionError("generate_toy_kg: cannot place coverage fact");
    }
  }

  // Choose which facts carry qualifiers.
  std::vector<std::size_t> order(o.n_facts);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> qualified(o.n_facts, false);
  for (std::size_t k = 0; k < n_qualified; ++k) qualified[order[k]] = true;

  const std::size_t q_cap = std::min(o.max_qualifiers, o.n_relations);
  std::vector<RawStatement> statements;
  statements.reserve(o.n_facts);
  for (std::size_t i = 0; i < o.n_facts; ++i) {
    const auto& t = triples[i];
    RawStatement st{"e" + std::to_string(t.s), "r" + std::to_string(t.r), "e" + std::to_string(t.o), {}};
    if (qualified[i] && q_cap > 0) {
      const std::size_t count = 1 + std::uniform_int_distribution<std::size_t>(0, q_cap - 1)(rng);
      std::vector<std::size_t> qrels(o.n_relations);
      std::iota(qrels.begin(), qrels.end(), std::size_t{0});
      std::shuffle(qrels.begin(), qrels.end(), rng);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t qr = qrels[k];
        // Qualifier value follows the planted pattern from the object.
        const std::size_t qv = ranked_candidates(ent, ent[t.o], rel[qr]).front();
        st.qualifiers.emplace_back("r" + std::to_string(qr), "e" + std::to_string(qv));
      }
    }
    statements.push_back(std::move(st));
  }

  std::shuffle(statements.begin(), statements.end(), rng);
  const std::size_t n_train = o.n_facts * 8 / 10;
  const std::size_t n_valid = o.n_facts / 10;
  const std::span<const RawStatement> all(statements);
  return index_dataset(all.subspan(0, n_train), all.subspan(n_train, n_valid),
                       all.subspan(n_train + n_valid));
}

}  // namespace resae::kg
