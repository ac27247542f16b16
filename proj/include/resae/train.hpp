#pragma once

// One-vs-all training with label smoothing and filtered-ranking evaluation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "resae/decoder.hpp"
#include "resae/kg.hpp"
#include "resae/model.hpp"
#include "resae/ops.hpp"

namespace resae::train {

// ---- loss ----

// Row of V targets (1 - eps) * y + eps / V, y = 1 on every gold.
Tensor smoothed_targets(std::size_t n_entities, std::span<const kg::EntityId> golds, double eps);

// Mean binary cross-entropy between sigmoid(scores) and the smoothed targets.
double compute_loss(const Tensor& scores, kg::EntityId gold, double eps);
double compute_loss(const Tensor& scores, std::span<const kg::EntityId> golds, double eps);

// Batch loss for scores [B, V]: the mean over statements of compute_loss.
ad::Var batch_loss(const ad::Var& scores, std::span<const std::vector<kg::EntityId>> golds,
                   double eps);

// ---- filtering ----

// Query identity with the qualifier multiset in canonical (sorted) order.
struct QueryKey {
  kg::EntityId known;
  kg::RelationId relation;
  std::vector<kg::Qualifier> qualifiers;
  auto operator<=>(const QueryKey&) const = default;
};

QueryKey make_key(const decoder::Query& query);

// True answers of every head and tail query over the given splits.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(std::span<const std::span<const kg::HyperFact>> splits, const kg::Vocabulary& vocab);
  static FilterIndex from_dataset(const kg::Dataset& dataset);

  void add(const kg::HyperFact& fact, const kg::Vocabulary& vocab);
  // Sorted true targets; empty when the query is unknown.
  std::span<const kg::EntityId> targets(const decoder::Query& query) const;
  std::size_t size() const noexcept { return index_.size(); }

 private:
  std::map<QueryKey, std::vector<kg::EntityId>> index_;
};

// ---- evaluation ----

struct SideReport {
  std::size_t queries = 0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
};

struct EvalReport {
  std::string split;
  std::size_t queries = 0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
  SideReport head;
  SideReport tail;

  std::string to_json() const;  // single line
};

// 1 + number of non-gold, non-filtered candidates scoring >= the gold score.
// `filtered` must be sorted; the gold itself may appear in it.
std::size_t filtered_rank(std::span<const double> scores, kg::EntityId gold,
                          std::span<const kg::EntityId> filtered);

SideReport summarize_ranks(std::span<const std::size_t> ranks);
// Pools head and tail ranks into one report.
EvalReport summarize(std::span<const std::size_t> head_ranks,
                     std::span<const std::size_t> tail_ranks, std::string split = {});

struct EvalOptions {
  std::size_t batch_size = 256;
  // 0 = hardware concurrency, capped by RESAE_THREADS when set.
  std::size_t threads = 0;
};

std::size_t resolve_threads(std::size_t requested);

// Head and tail query for every fact, filtered against `filter`. Throws
// PreconditionError with "no queries" when facts is empty.
EvalReport evaluate(const ResaeModel& model, std::span<const kg::HyperFact> facts,
                    const FilterIndex& filter, const EvalOptions& options = {},
                    std::string split = {});

// ---- training ----

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double lr = 1e-4;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;
  // Splits evaluated at each evaluation event; the first non-empty one
  // selects the best checkpoint.
  std::vector<std::string> eval_splits = {"valid"};
  bool trace_wall_time = false;
  std::size_t eval_batch_size = 256;

  void validate() const;
};

// One training statement: a query and all of its training answers.
struct Example {
  decoder::Query query;
  std::vector<kg::EntityId> golds;
};

// Head and tail queries of the training facts grouped by canonical key, in
// key order.
std::vector<Example> build_examples(std::span<const kg::HyperFact> facts,
                                    const kg::Vocabulary& vocab);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  std::vector<std::string> trace;  // JSON lines
  std::vector<double> epoch_loss;
  std::optional<EvalReport> best;
  std::size_t best_epoch = 0;
};

// Writes <run_dir>/metrics.jsonl, <run_dir>/best.ckpt and <run_dir>/last.ckpt
// when run_dir is non-empty. Progress goes to `log` when given.
TrainResult train(ResaeModel& model, const kg::Dataset& dataset, const TrainConfig& config,
                  const std::filesystem::path& run_dir = {}, std::ostream* log = nullptr);

// Deterministic 64-bit mix for per-(epoch, batch) seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace resae::train
