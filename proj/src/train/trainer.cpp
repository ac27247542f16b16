#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "resae/adam.hpp"
#include "resae/checkpoint.hpp"
#include "resae/errors.hpp"
#include "resae/train.hpp"

namespace resae::train {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must lie in [0, 1), got " + std::to_string(label_smoothing));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be at least 1");
  for (const auto& s : eval_splits) {
    if (s != "train" && s != "valid" && s != "test") throw ConfigError("unknown eval split '" + s + "'");
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

std::vector<Example> build_examples(std::span<const kg::HyperFact> facts,
                                    const kg::Vocabulary& vocab) {
  std::map<QueryKey, std::vector<kg::EntityId>> grouped;
  for (const auto& f : facts) {
    for (auto side : {decoder::Side::kTail, decoder::Side::kHead}) {
      auto& golds = grouped[make_key(decoder::make_query(f, side, vocab))];
      const auto target = decoder::query_target(f, side);
      if (std::find(golds.begin(), golds.end(), target) == golds.end()) golds.push_back(target);
    }
  }
  std::vector<Example> out;
  out.reserve(grouped.size());
  for (auto& [key, golds] : grouped) {
    std::sort(golds.begin(), golds.end());
    out.push_back(Example{decoder::Query{key.known, key.relation, key.qualifiers}, std::move(golds)});
  }
  return out;
}

namespace {

std::span<const kg::HyperFact> split_facts(const kg::Dataset& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "valid") return data.valid;
  return data.test;
}

std::string param_norms(const ParamStore& params) {
  std::ostringstream os;
  bool first = true;
  for (const auto& p : params) {
    double sq = 0.0;
    for (double x : p.value.values()) sq += x * x;
    os << (first ? "" : ", ") << p.name << "=" << std::sqrt(sq);
    first = false;
  }
  return os.str();
}

}  // namespace

TrainResult train(ResaeModel& model, const kg::Dataset& dataset, const TrainConfig& config,
                  const std::filesystem::path& run_dir, std::ostream* log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto examples = build_examples(dataset.train, dataset.vocab);
  if (examples.empty()) throw PreconditionError("train: no training statements");
  std::vector<decoder::StatementSequence> sequences;
  sequences.reserve(examples.size());
  for (const auto& ex : examples) sequences.push_back(model.sequence(ex.query));

  const FilterIndex filter = FilterIndex::from_dataset(dataset);
  std::vector<std::string> splits;
  for (const auto& s : config.eval_splits) {
    if (split_facts(dataset, s).empty()) {
      if (log) *log << "warning: eval split '" << s << "' is empty; skipped\n";
      continue;
    }
    splits.push_back(s);
  }

  std::ofstream trace_file;
  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    trace_file.open(run_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!trace_file) throw std::runtime_error("cannot write " + (run_dir / "metrics.jsonl").string());
  }

  TrainResult result;
  Adam adam(model.params(), AdamConfig{config.lr});
  EvalOptions eval_opts{config.eval_batch_size, 0};

  auto evaluate_now = [&](std::size_t epoch, double loss) {
    for (std::size_t i = 0; i < splits.size(); ++i) {
      EvalReport report = evaluate(model, split_facts(dataset, splits[i]), filter, eval_opts, splits[i]);
      nlohmann::ordered_json j;
      j["epoch"] = epoch;
      j["split"] = splits[i];
      if (epoch > 0) j["train_loss"] = loss;
      j["queries"] = report.queries;
      j["mrr"] = report.mrr;
      j["hits1"] = report.hits1;
      j["hits10"] = report.hits10;
      j["head"] = {{"queries", report.head.queries}, {"mrr", report.head.mrr},
                   {"hits1", report.head.hits1}, {"hits10", report.head.hits10}};
      j["tail"] = {{"queries", report.tail.queries}, {"mrr", report.tail.mrr},
                   {"hits1", report.tail.hits1}, {"hits10", report.tail.hits10}};
      if (config.trace_wall_time) {
        j["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      const std::string line = j.dump();
      result.trace.push_back(line);
      if (trace_file) trace_file << line << '\n' << std::flush;
      if (log) {
        *log << "epoch " << epoch << " " << splits[i] << " mrr=" << report.mrr
             << " hits1=" << report.hits1 << " hits10=" << report.hits10 << '\n';
      }
      if (i == 0 && (!result.best || report.mrr > result.best->mrr)) {
        result.best = report;
        result.best_epoch = epoch;
        if (!run_dir.empty()) save_checkpoint(model.params(), run_dir / "best.ckpt");
      }
    }
  };

  evaluate_now(0, 0.0);

  std::vector<std::size_t> order(examples.size());
  const std::size_t n_batches = (examples.size() + config.batch_size - 1) / config.batch_size;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<decoder::StatementSequence> batch;
      std::vector<std::vector<kg::EntityId>> golds;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(sequences[order[i]]);
        golds.push_back(examples[order[i]].golds);
      }
      ad::Tape tape(ad::Mode::kTrain, mix_seed(config.seed, epoch, b + 1));
      ad::Var loss = batch_loss(model.forward(tape, batch), golds, config.label_smoothing);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b) + "; parameter norms: " + param_norms(model.params()));
      }
      model.params().zero_grad();
      tape.backward(loss);
      adam.step(model.params());
      epoch_loss += value * static_cast<double>(end - begin);
    }
    epoch_loss /= static_cast<double>(examples.size());
    result.epoch_loss.push_back(epoch_loss);
    if (epoch % config.eval_every == 0 || epoch == config.epochs) evaluate_now(epoch, epoch_loss);
  }

  if (!run_dir.empty()) {
    save_checkpoint(model.params(), run_dir / "last.ckpt");
    if (!result.best) save_checkpoint(model.params(), run_dir / "best.ckpt");
  }
  return result;
}

}  // namespace resae::train
