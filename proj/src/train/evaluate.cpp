#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "resae/errors.hpp"
#include "resae/train.hpp"

namespace resae::train {

namespace {

nlohmann::ordered_json side_json(const SideReport& s) {
  return {{"queries", s.queries}, {"mrr", s.mrr}, {"hits1", s.hits1}, {"hits10", s.hits10}};
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  if (!split.empty()) j["split"] = split;
  j["queries"] = queries;
  j["mrr"] = mrr;
  j["hits1"] = hits1;
  j["hits10"] = hits10;
  j["head"] = side_json(head);
  j["tail"] = side_json(tail);
  return j.dump();
}

std::size_t filtered_rank(std::span<const double> scores, kg::EntityId gold,
                          std::span<const kg::EntityId> filtered) {
  if (gold >= scores.size()) {
    throw PreconditionError("gold entity " + std::to_string(gold) + " is not in the vocabulary of " +
                            std::to_string(scores.size()) + " entities");
  }
  const double g = scores[gold];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == gold || scores[i] < g) continue;
    if (std::binary_search(filtered.begin(), filtered.end(), static_cast<kg::EntityId>(i))) continue;
    ++rank;
  }
  return rank;
}

SideReport summarize_ranks(std::span<const std::size_t> ranks) {
  SideReport r;
  r.queries = ranks.size();
  if (ranks.empty()) return r;
  for (auto k : ranks) {
    r.mrr += 1.0 / static_cast<double>(k);
    r.hits1 += k <= 1 ? 1.0 : 0.0;
    r.hits10 += k <= 10 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  r.mrr /= n;
  r.hits1 /= n;
  r.hits10 /= n;
  return r;
}

EvalReport summarize(std::span<const std::size_t> head_ranks,
                     std::span<const std::size_t> tail_ranks, std::string split) {
  std::vector<std::size_t> all(tail_ranks.begin(), tail_ranks.end());
  all.insert(all.end(), head_ranks.begin(), head_ranks.end());
  const SideReport pooled = summarize_ranks(all);
  EvalReport r;
  r.split = std::move(split);
  r.queries = pooled.queries;
  r.mrr = pooled.mrr;
  r.hits1 = pooled.hits1;
  r.hits10 = pooled.hits10;
  r.head = summarize_ranks(head_ranks);
  r.tail = summarize_ranks(tail_ranks);
  return r;
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RESAE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(n, 1);
}

EvalReport evaluate(const ResaeModel& model, std::span<const kg::HyperFact> facts,
                    const FilterIndex& filter, const EvalOptions& options, std::string split) {
  if (facts.empty()) {
    throw PreconditionError("no queries: split" + (split.empty() ? std::string() : " '" + split + "'") +
                            " is empty");
  }
  const auto& vocab = model.vocab();
  const std::size_t v = model.num_entities();
  for (const auto& f : facts) {
    if (f.subject >= v || f.object >= v) throw PreconditionError("evaluate: gold entity is not in the vocabulary");
  }
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);
  const std::size_t n_queries = 2 * facts.size();
  const std::size_t n_batches = (n_queries + batch_size - 1) / batch_size;
  // Query q: fact q / 2, tail for even q, head for odd q.
  auto side_of = [](std::size_t q) { return q % 2 == 0 ? decoder::Side::kTail : decoder::Side::kHead; };

  const auto tables = model.encode_frozen();
  std::vector<std::size_t> ranks(n_queries, 0);

  auto run_batch = [&](std::size_t b) {
    const std::size_t begin = b * batch_size;
    const std::size_t end = std::min(n_queries, begin + batch_size);
    std::vector<decoder::Query> queries;
    std::vector<decoder::StatementSequence> seqs;
    for (std::size_t q = begin; q < end; ++q) {
      queries.push_back(decoder::make_query(facts[q / 2], side_of(q), vocab));
      seqs.push_back(model.sequence(queries.back()));
    }
    const Tensor scores = model.score_batch(tables, seqs);
    for (std::size_t q = begin; q < end; ++q) {
      const std::span<const double> row(scores.raw() + (q - begin) * v, v);
      ranks[q] = filtered_rank(row, decoder::query_target(facts[q / 2], side_of(q)),
                               filter.targets(queries[q - begin]));
    }
  };

  const std::size_t n_threads = std::min(resolve_threads(options.threads), n_batches);
  if (n_threads <= 1) {
    for (std::size_t b = 0; b < n_batches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          for (std::size_t b = t; b < n_batches; b += n_threads) run_batch(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<std::size_t> head, tail;
  for (std::size_t q = 0; q < n_queries; ++q) (q % 2 == 0 ? tail : head).push_back(ranks[q]);
  return summarize(head, tail, std::move(split));
}

}  // namespace resae::train
