#include "resae/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "resae/checkpoint.hpp"
#include "resae/errors.hpp"
#include "resae/grad_check.hpp"
#include "resae/model.hpp"
#include "resae/train.hpp"

namespace resae::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Raised for files named by the user that do not exist.
class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (!path.empty() && !fs::exists(path)) throw MissingFile(std::string(what) + " not found: " + path);
}

kg::Dataset load_data(const RunConfig& config) {
  require_file(config.train_path, "train file");
  require_file(config.valid_path, "valid file");
  require_file(config.test_path, "test file");
  return load_run_dataset(config);
}

std::span<const kg::HyperFact> split_of(const kg::Dataset& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "valid") return data.valid;
  return data.test;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

ordered_json report_json(const train::EvalReport& r) { return ordered_json::parse(r.to_json()); }

struct VariantResult {
  std::string name;
  train::EvalReport report;
  std::size_t best_epoch = 0;
};

VariantResult train_and_report(const RunConfig& config, const kg::Dataset& data,
                               const std::string& name, const fs::path& run_dir, std::ostream& err) {
  ResaeModel model(config.model, data, config.seed);
  write_text(run_dir / "config.toml", to_toml(config));
  auto result = train::train(model, data, config.train, run_dir, &err);
  // Report on the requested split with the best checkpoint's weights.
  if (fs::exists(run_dir / "best.ckpt")) restore_checkpoint(model.params(), load_checkpoint(run_dir / "best.ckpt"));
  const auto filter = train::FilterIndex::from_dataset(data);
  auto report = train::evaluate(model, split_of(data, config.eval_split), filter,
                                {config.train.eval_batch_size, 0}, config.eval_split);
  return VariantResult{name, report, result.best_epoch};
}

}  // namespace

int cmd_stats(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto data = load_data(config);
  out << kg::stats_to_json(kg::dataset_stats(data)) << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto data = load_data(config);
  ResaeModel model(config.model, data, config.seed);
  const fs::path run_dir = config.run_dir;
  write_text(run_dir / "config.toml", to_toml(config));
  err << "training " << model.params().total_values() << " parameters on " << data.train.size()
      << " statements\n";
  const auto result = train::train(model, data, config.train, run_dir, &err);
  ordered_json j;
  j["run_dir"] = run_dir.string();
  j["best_epoch"] = result.best_epoch;
  if (result.best) j["best"] = report_json(*result.best);
  j["final_train_loss"] = result.epoch_loss.empty() ? ordered_json() : ordered_json(result.epoch_loss.back());
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto data = load_data(config);
  ResaeModel model(config.model, data, config.seed);
  const std::string ckpt = config.checkpoint.empty() ? (fs::path(config.run_dir) / "best.ckpt").string()
                                                     : config.checkpoint;
  require_file(ckpt, "checkpoint");
  restore_checkpoint(model.params(), load_checkpoint(ckpt));
  const auto filter = train::FilterIndex::from_dataset(data);
  const auto report = train::evaluate(model, split_of(data, config.eval_split), filter,
                                      {config.train.eval_batch_size, 0}, config.eval_split);
  out << report.to_json() << '\n';
  return kExitOk;
}

int cmd_ablate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto data = load_data(config);
  struct Variant {
    const char* name;
    void (*apply)(RunConfig&);
  };
  const Variant variants[] = {
      {"full", [](RunConfig&) {}},
      {"w/o coo", [](RunConfig& c) { c.model.encoder.use_coo = false; }},
      {"w/o att", [](RunConfig& c) { c.model.encoder.use_attention = false; }},
      {"mean-pool readout", [](RunConfig& c) { c.model.decoder.readout = Readout::kMean; }},
  };
  const char* dirs[] = {"full", "no_coo", "no_att", "mean_readout"};
  std::vector<VariantResult> results;
  for (std::size_t i = 0; i < std::size(variants); ++i) {
    RunConfig c = config;
    variants[i].apply(c);
    err << "== variant " << variants[i].name << '\n';
    results.push_back(train_and_report(c, data, variants[i].name, fs::path(config.run_dir) / dirs[i], err));
  }

  const std::string footnote =
      "reference at full scale (WD50K_100, not reproduced here): full 0.668 vs w/o att 0.657 MRR";
  ordered_json j;
  j["split"] = config.eval_split;
  j["seed"] = config.seed;
  j["epochs"] = config.train.epochs;
  j["variants"] = ordered_json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    ordered_json row;
    row["variant"] = results[i].name;
    row["baseline"] = i == 0;
    row["best_epoch"] = results[i].best_epoch;
    row["report"] = report_json(results[i].report);
    j["variants"].push_back(row);
  }
  j["footnote"] = footnote;

  std::ostringstream table;
  table << std::left << std::setw(20) << "variant" << std::right << std::setw(10) << "mrr"
        << std::setw(10) << "hits@1" << std::setw(10) << "hits@10" << std::setw(10) << "queries" << '\n';
  table << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i].report;
    table << std::left << std::setw(20) << (results[i].name + std::string(i == 0 ? " *" : ""))
          << std::right << std::setw(10) << r.mrr << std::setw(10) << r.hits1 << std::setw(10)
          << r.hits10 << std::setw(10) << r.queries << '\n';
  }
  table << "* baseline\n" << footnote << '\n';

  write_text(fs::path(config.run_dir) / "ablation.json", j.dump(2) + "\n");
  write_text(fs::path(config.run_dir) / "ablation.txt", table.str());
  err << table.str();
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_gen_toy(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto data = kg::generate_toy_kg(config.toy);
  const char delim = kg::parse_delimiter(config.delimiter);
  const fs::path dir = config.out_dir;
  ordered_json j;
  const std::pair<const char*, const std::vector<kg::HyperFact>*> splits[] = {
      {"train", &data.train}, {"valid", &data.valid}, {"test", &data.test}};
  for (const auto& [name, facts] : splits) {
    const fs::path path = dir / (std::string(name) + ".txt");
    write_text(path, kg::serialize_statements(kg::to_raw(*facts, data.vocab), delim));
    j[name] = path.string();
  }
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_grad_check(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.model.encoder.dim > kGradCheckMaxDim) {
    throw ConfigError("grad-check needs dim <= " + std::to_string(kGradCheckMaxDim) + ", got " +
                      std::to_string(config.model.encoder.dim));
  }
  const auto data = load_data(config);
  RunConfig c = config;
  c.model.encoder.dropout = 0.0;
  c.model.decoder.dropout = 0.0;
  ResaeModel model(c.model, data, c.seed);
  const auto examples = train::build_examples(data.train, data.vocab);
  std::vector<decoder::StatementSequence> batch;
  std::vector<std::vector<kg::EntityId>> golds;
  for (const auto& ex : examples) {
    batch.push_back(model.sequence(ex.query));
    golds.push_back(ex.golds);
  }
  GradCheckOptions opts;
  opts.eps = c.grad_check_eps;
  opts.tol = c.grad_check_tol;
  opts.max_coords_per_param = c.grad_check_coords;
  opts.seed = c.seed;
  const auto report = grad_check(
      model.params(),
      [&](ad::Tape& tape) {
        return train::batch_loss(model.forward(tape, batch), golds, c.train.label_smoothing);
      },
      opts);
  std::vector<std::string> failed;
  for (const auto& p : report.params) {
    ordered_json j;
    j["param"] = p.name;
    j["checked"] = p.checked;
    j["max_rel_error"] = p.max_rel_error;
    j["max_abs_error"] = p.max_abs_error;
    j["passed"] = p.passed;
    out << j.dump() << '\n';
    if (!p.passed) failed.push_back(p.name);
  }
  ordered_json summary;
  summary["passed"] = report.passed;
  summary["max_rel_error"] = report.max_rel_error;
  summary["tolerance"] = opts.tol;
  summary["failed"] = failed;
  out << summary.dump() << '\n';
  if (!report.passed) {
    err << "gradient check failed for:";
    for (const auto& n : failed) err << ' ' << n;
    err << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ReSaE hyper-relational link prediction"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string run_dir, out_dir, checkpoint;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Run configuration file");
  app.add_option("--seed", seed, "Override the seed");
  app.add_option("--run-dir", run_dir, "Override the run directory");
  for (const char* name : {"stats", "train", "eval", "ablate", "gen-toy", "grad-check"}) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
    sub->add_option("overrides", overrides, "key=value overrides");
    if (std::string(name) == "gen-toy") sub->add_option("--out-dir", out_dir, "Output directory");
    if (std::string(name) == "eval") sub->add_option("--checkpoint", checkpoint, "Checkpoint to load");
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw MissingFile("config file not found: " + config_path);
      config = load_run_config(config_path);
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
      set_config_value(config, o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed) {
      config.seed = *seed;
      config.train.seed = *seed;
      if (command == "gen-toy") config.toy.seed = *seed;
    }
    if (!run_dir.empty()) config.run_dir = run_dir;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!checkpoint.empty()) config.checkpoint = checkpoint;
    config.validate();

    if (command == "stats") return cmd_stats(config, out, err);
    if (command == "train") return cmd_train(config, out, err);
    if (command == "eval") return cmd_eval(config, out, err);
    if (command == "ablate") return cmd_ablate(config, out, err);
    if (command == "gen-toy") return cmd_gen_toy(config, out, err);
    return cmd_grad_check(config, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace resae::cli
