#pragma once

// Flat key = value run configuration. Blank lines and '#' comments are
// ignored; string values may be double-quoted. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "resae/kg.hpp"
#include "resae/model_config.hpp"
#include "resae/train.hpp"

namespace resae {

struct RunConfig {
  // Empty train_path selects the generated toy corpus described by `toy`.
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string delimiter = "comma";
  kg::ToyOptions toy;

  ModelConfig model;
  train::TrainConfig train;

  std::string run_dir = "runs/default";
  std::string checkpoint;  // eval input; defaults to <run_dir>/best.ckpt
  std::string eval_split = "test";
  std::string out_dir = "data/toy";  // gen-toy output
  std::uint64_t seed = 0;

  double grad_check_eps = 1e-5;
  double grad_check_tol = 1e-4;
  std::size_t grad_check_coords = 64;

  void validate() const;
};

// Applies one key/value pair; ConfigError for unknown keys or bad values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
// Parses a document over `base`; errors carry the line number.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);
// Every key in a fixed order; parse_run_config(to_toml(c)) reproduces c.
std::string to_toml(const RunConfig& config);
std::vector<std::string> config_keys();

// Loads the dataset named by the config or generates the toy corpus.
kg::Dataset load_run_dataset(const RunConfig& config);

}  // namespace resae
