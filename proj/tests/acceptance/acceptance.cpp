// Pass/fail report over the acceptance criteria. Exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "resae/cli.hpp"
#include "resae/decoder.hpp"
#include "resae/encoder.hpp"
#include "resae/model.hpp"
#include "resae/train.hpp"

namespace {

using namespace resae;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("resae_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
  return m;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (std::size_t i = 0; i < t.size(); ++i) t.raw()[i] = u(rng);
  return t;
}

const std::string kToyConfig = std::string(RESAE_SOURCE_DIR) + "/configs/toy.toml";
const std::string kTinyConfig = std::string(RESAE_SOURCE_DIR) + "/configs/tiny.toml";

// 1. End-to-end gradient check on the tiny model.
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const auto r = run_cli({"grad-check", "--config", kTinyConfig, "toy_entities=20", "toy_relations=6",
                          "toy_facts=30", "dim=8", "grad_check_tol=1e-4"});
  const double secs = seconds_since(t0);
  Outcome o;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> groups;
  bool saw = false;
  double worst = 0.0;
  for (const char* want : {"encoder.layer0.alpha", "encoder.layer0.beta", "w_coo", "w_dir",
                           "decoder.layer0.wq", "decoder.readout.w", "entity_emb", "relation_emb"})
    if (r.out.find(want) == std::string::npos) {
      o.passed = false;
      o.detail += std::string("missing group ") + want + "; ";
    }
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("param")) {
      saw = true;
      if (!j["passed"].get<bool>()) {
        o.passed = false;
        o.detail += j["param"].get<std::string>() + " failed; ";
      }
      worst = std::max(worst, j["max_rel_error"].get<double>());
    }
  }
  if (!saw || r.code != 0) o.passed = false;
  if (secs >= 60.0) o.passed = false;
  o.detail += "max rel error " + fmt(worst) + " (< 1e-4), " + fmt(secs) + " s (< 60 s)";
  return o;
}

// 2. Qualifier permutations leave encoder features and decoder scores unchanged.
Outcome permutation_invariance() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ent(0, 29), rel(0, 5), nq(2, 4);
  std::string text;
  for (int i = 0; i < 100; ++i) {
    text += "e" + std::to_string(ent(rng)) + ",r" + std::to_string(rel(rng)) + ",e" + std::to_string(ent(rng));
    const int k = nq(rng);
    for (int j = 0; j < k; ++j) text += ",q" + std::to_string(rel(rng)) + ",e" + std::to_string(ent(rng));
    text += '\n';
  }
  const auto ds = kg::index_dataset(kg::parse_statements_text(text), {}, {});
  auto permuted = ds;
  for (auto& f : permuted.train) {
    auto before = f.qualifiers;
    while (f.qualifiers == before && f.qualifiers.size() > 1) std::shuffle(f.qualifiers.begin(), f.qualifiers.end(), rng);
  }

  ModelConfig config;
  config.encoder.dim = 8;
  config.encoder.dropout = 0.0;
  config.decoder.n_heads = 2;
  config.decoder.hidden_dim = 16;
  config.decoder.dropout = 0.0;

  double worst_features = 0.0, worst_tables = 0.0, worst_scores = 0.0;
  {
    std::mt19937_64 wrng(5);
    const auto& vocab = ds.vocab;
    const Tensor e = random_tensor({vocab.num_real_entities(), 8}, wrng);
    const Tensor rr = random_tensor({vocab.num_relations(), 8}, wrng);
    for (auto variant : {FeatureVariant::kSeparate, FeatureVariant::kMerged}) {
      EncoderConfig ec = config.encoder;
      ec.feature_variant = variant;
      ad::Tape tape;
      const auto ev = tape.constant(e), rv = tape.constant(rr);
      const auto att = encoder::relation_attention(rv);
      const auto a = encoder::assemble_hyper_features(encoder::FactBatch::from_facts(ds.train), ev, rv, att, ec);
      const auto b =
          encoder::assemble_hyper_features(encoder::FactBatch::from_facts(permuted.train), ev, rv, att, ec);
      worst_features = std::max(worst_features, max_abs_diff(a.value(), b.value()));
    }
  }
  const ResaeModel ma(config, ds, 31), mb(config, permuted, 31);
  const auto ta = ma.encode_frozen(), tb = mb.encode_frozen();
  worst_tables = std::max(max_abs_diff(ta.entities, tb.entities), max_abs_diff(ta.relations, tb.relations));
  std::vector<decoder::StatementSequence> sa, sb;
  for (std::size_t i = 0; i < ds.train.size(); ++i)
    for (auto side : {decoder::Side::kTail, decoder::Side::kHead}) {
      sa.push_back(ma.sequence(decoder::make_query(ds.train[i], side, ds.vocab)));
      sb.push_back(mb.sequence(decoder::make_query(permuted.train[i], side, ds.vocab)));
    }
  worst_scores = max_abs_diff(ma.score_batch(ta, sa), mb.score_batch(tb, sb));
  const double worst = std::max({worst_features, worst_tables, worst_scores});
  return {worst <= 1e-10, "features " + fmt(worst_features) + ", encoded tables " + fmt(worst_tables) +
                              ", scores " + fmt(worst_scores) + " (<= 1e-10) over 100 facts"};
}

// 3. Co-occurrence against brute-force counting plus the sum invariant.
Outcome cooccurrence_oracle() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0, sum_failures = 0, checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    kg::ToyOptions opt;
    opt.seed = rng();
    opt.n_relations = 2 + rng() % 10;
    opt.n_entities = 20 + rng() % 80;
    opt.n_facts = 10 + rng() % 491;  // mirrored below, at most 1000 facts
    opt.qualifier_ratio = (trial % 5 == 0) ? 0.0 : static_cast<double>(rng() % 101) / 100.0;
    opt.max_qualifiers = 1 + rng() % 4;
    const auto ds = kg::generate_toy_kg(opt);
    const auto facts = kg::add_inverse_facts(ds.train, ds.vocab);
    for (auto dir : kg::kAllDirections) {
      ++checked;
      const auto got = kg::compute_cooccurrence(facts, ds.vocab, dir).values;
      if (!(got == tu::brute_force_coo(facts, ds.vocab, dir))) ++mismatches;
      std::size_t pairs = 0;
      for (const auto& f : facts)
        if (ds.vocab.direction(f.relation) == dir) pairs += f.qualifiers.size();
      const double sum = std::accumulate(got.raw(), got.raw() + got.size(), 0.0);
      const double want = pairs > 0 ? static_cast<double>(ds.vocab.num_relations()) : 0.0;
      if (std::abs(sum - want) > 1e-9 * std::max(1.0, want)) ++sum_failures;
    }
  }
  return {mismatches == 0 && sum_failures == 0,
          std::to_string(checked) + " matrices from 50 toys, " + std::to_string(mismatches) +
              " oracle mismatches, " + std::to_string(sum_failures) + " sum violations"};
}

// 4. Relation attention rows are distributions.
Outcome attention_normalization() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 2 + rng() % 20, d = 1 + rng() % 16;
    const double scale = trial < 50 ? 1.0 : 10.0;
    std::vector<bool> mask;
    if (trial % 2 == 1) {
      mask.resize(r);
      for (std::size_t i = 0; i < r; ++i) mask[i] = rng() % 3 != 0;
      mask[rng() % r] = true;
    }
    ad::Tape tape;
    const auto att = encoder::relation_attention(tape.constant(random_tensor({r, d}, rng, scale)), mask);
    const Tensor& a = att.value();
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < r; ++j) s += a.at(i, j);
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  return {worst <= 1e-12, "worst |row sum - 1| = " + fmt(worst) + " (<= 1e-12) over 100 tables, 50 masked"};
}

// 5. Filtered evaluation against a full-sort ranker.
Outcome metric_oracle() {
  const auto train = kg::parse_statements_text("e0,r0,e1,r1,e2\n"
                                               "e1,r1,e2\n"
                                               "e2,r2,e3,r0,e4\n"
                                               "e3,r0,e4\n"
                                               "e0,r0,e3,r1,e2\n"
                                               "e4,r2,e0\n");
  const auto valid = kg::parse_statements_text("e1,r0,e2\n");
  const auto test = kg::parse_statements_text("e0,r0,e4,r1,e2\n"
                                              "e2,r1,e0\n"
                                              "e3,r2,e1,r0,e0\n");
  const auto ds = kg::index_dataset(train, valid, test);
  ModelConfig config;
  config.encoder.dim = 4;
  config.encoder.dropout = 0.0;
  config.decoder.n_heads = 2;
  config.decoder.hidden_dim = 8;
  config.decoder.dropout = 0.0;
  const auto filter = train::FilterIndex::from_dataset(ds);

  // Hand-built filter sets: every true answer for the same key, in any split.
  std::vector<kg::HyperFact> all;
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) all.insert(all.end(), split->begin(), split->end());

  double worst = 0.0;
  bool ordering = true;
  std::size_t reports = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ResaeModel model(config, ds, seed);
    for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
      std::vector<tu::BruteQuery> queries;
      for (const auto& f : *split)
        for (bool head : {false, true}) {
          tu::BruteQuery bq;
          const Tensor s =
              model.score_query(decoder::make_query(f, head ? decoder::Side::kHead : decoder::Side::kTail, ds.vocab));
          bq.scores.assign(s.raw(), s.raw() + 5);
          bq.gold = head ? f.subject : f.object;
          auto quals = f.qualifiers;
          std::sort(quals.begin(), quals.end());
          for (const auto& g : all) {
            auto gq = g.qualifiers;
            std::sort(gq.begin(), gq.end());
            if (gq != quals || g.relation != f.relation) continue;
            if (!head && g.subject == f.subject) bq.filter.insert(g.object);
            if (head && g.object == f.object) bq.filter.insert(g.subject);
          }
          queries.push_back(bq);
        }
      const auto want = tu::brute_force_report(queries);
      for (std::size_t threads : {1u, 2u}) {
        const auto got = train::evaluate(model, *split, filter, {2, threads});
        ++reports;
        worst = std::max({worst, std::abs(got.mrr - want.mrr), std::abs(got.hits1 - want.hits1),
                          std::abs(got.hits10 - want.hits10)});
        for (const auto& [h1, h10, mrr] : {std::tuple{got.hits1, got.hits10, got.mrr},
                                           std::tuple{got.head.hits1, got.head.hits10, got.head.mrr},
                                           std::tuple{got.tail.hits1, got.tail.hits10, got.tail.mrr}})
          ordering = ordering && h1 <= h10 && h1 <= mrr && mrr <= 1.0;
      }
    }
  }
  return {worst <= 1e-12 && ordering, "max metric difference " + fmt(worst) + " (<= 1e-12) over " +
                                          std::to_string(reports) + " reports; ordering invariants " +
                                          (ordering ? "hold" : "violated")};
}

// 6. The toy KG can be overfit; the untrained model cannot rank it.
Outcome overfit_sanity() {
  const auto dir = scratch("overfit");
  const auto t0 = Clock::now();
  const auto r = run_cli({"train", "--config", kToyConfig, "--run-dir", dir.string()});
  const double secs = seconds_since(t0);
  if (r.code != 0) return {false, "train failed: " + r.err};
  const auto cfg = load_run_config(kToyConfig);
  std::istringstream trace(slurp(dir / "metrics.jsonl"));
  std::string line;
  double initial = -1.0, best = 0.0;
  long reached = -1;
  while (std::getline(trace, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["split"] != "train") continue;
    const double mrr = j["mrr"].get<double>();
    if (j["epoch"] == 0) initial = mrr;
    best = std::max(best, mrr);
    if (reached < 0 && mrr >= 0.95) reached = j["epoch"].get<long>();
  }
  const bool ok = initial >= 0.0 && initial < 0.2 && reached >= 0 && cfg.train.epochs <= 2000 && secs < 600.0 &&
                  cfg.model.encoder.dim == 32 && cfg.train.batch_size == 64;
  return {ok, "epoch 0 MRR " + fmt(initial) + " (< 0.2), best train MRR " + fmt(best) + " (>= 0.95) first at epoch " +
                  std::to_string(reached) + " of " + std::to_string(cfg.train.epochs) + ", " + fmt(secs) +
                  " s (< 600 s)"};
}

// 7. Every ablation variant trains and lands in the table.
Outcome ablation_harness() {
  const auto dir = scratch("ablation");
  const auto r = run_cli({"ablate", "--config", kToyConfig, "--run-dir", dir.string(), "epochs=100"});
  if (r.code != 0) return {false, "ablate failed: " + r.err};
  const auto j = nlohmann::json::parse(r.out);
  std::vector<std::string> names;
  bool complete = true;
  for (const auto& row : j["variants"]) {
    names.push_back(row["variant"].get<std::string>());
    complete = complete && row["report"].contains("mrr") && row["report"].contains("hits1") &&
               row["report"].contains("hits10");
  }
  const std::vector<std::string> want = {"full", "w/o coo", "w/o att", "mean-pool readout"};
  const bool table = fs::exists(dir / "ablation.txt") && r.err.find("mean-pool readout") != std::string::npos;
  std::string listing;
  for (const auto& row : j["variants"])
    listing += row["variant"].get<std::string>() + " " + fmt(row["report"]["mrr"].get<double>()) + "; ";
  return {names == want && complete && table, "variants: " + listing + "table " + (table ? "emitted" : "missing")};
}

// 8. Identical config and seed give byte-identical artifacts.
Outcome determinism() {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::vector<std::string> common = {"--config", kTinyConfig, "epochs=6", "eval_every=2",
                                           "eval_splits=train,valid", "dropout=0.1", "decoder_dropout=0.1"};
  auto args_a = std::vector<std::string>{"train", "--run-dir", a.string()};
  auto args_b = std::vector<std::string>{"train", "--run-dir", b.string()};
  args_a.insert(args_a.end(), common.begin(), common.end());
  args_b.insert(args_b.end(), common.begin(), common.end());
  if (run_cli(args_a).code != 0 || run_cli(args_b).code != 0) return {false, "train failed"};
  bool same = true;
  std::string detail;
  for (const char* f : {"metrics.jsonl", "best.ckpt", "last.ckpt"}) {
    const auto x = slurp(a / f), y = slurp(b / f);
    const bool eq = !x.empty() && x == y;
    same = same && eq;
    detail += std::string(f) + (eq ? " identical (" + std::to_string(x.size()) + " bytes); " : " differs; ");
  }
  return {same, detail + "dropout on"};
}

// 9. Loss values on closed-form cases.
Outcome loss_correctness() {
  const Tensor zeros({4});
  const double l = train::compute_loss(zeros, 1, 0.0);
  const double err = std::abs(l - std::log(2.0));
  std::mt19937_64 rng(9);
  const Tensor s = random_tensor({4}, rng, 3.0);
  const double g0 = train::compute_loss(s, 0, 1.0), g3 = train::compute_loss(s, 3, 1.0);
  return {err <= 1e-12 && g0 == g3, "|loss - log 2| = " + fmt(err) + " (<= 1e-12); eps=1 gold 0 vs 3 differ by " +
                                        fmt(std::abs(g0 - g3))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"permutation invariance", permutation_invariance},
      {"co-occurrence oracle", cooccurrence_oracle},
      {"attention normalization", attention_normalization},
      {"metric oracle", metric_oracle},
      {"overfit sanity", overfit_sanity},
      {"ablation harness", ablation_harness},
      {"determinism", determinism},
      {"loss correctness", loss_correctness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::cout << (o.passed ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << ": " << criteria[i].first << " - "
              << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
