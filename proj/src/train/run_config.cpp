#include "resae/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "resae/errors.hpp"

namespace resae {

namespace {

struct Entry {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return x;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + std::string(v) + "'");
}

std::string_view feature_name(FeatureVariant f) {
  return f == FeatureVariant::kSeparate ? "separate" : "merged";
}
FeatureVariant parse_feature(std::string_view v) {
  if (v == "separate") return FeatureVariant::kSeparate;
  if (v == "merged") return FeatureVariant::kMerged;
  throw ConfigError("unknown feature_variant '" + std::string(v) + "' (separate or merged)");
}
std::string_view norm_name(NeighborNorm n) { return n == NeighborNorm::kNone ? "none" : "in_degree_mean"; }
NeighborNorm parse_norm(std::string_view v) {
  if (v == "none") return NeighborNorm::kNone;
  if (v == "in_degree_mean") return NeighborNorm::kInDegreeMean;
  throw ConfigError("unknown neighbor_norm '" + std::string(v) + "' (none or in_degree_mean)");
}
std::string_view scorer_name(Scorer s) { return s == Scorer::kDot ? "dot" : "cosine"; }
Scorer parse_scorer(std::string_view v) {
  if (v == "dot") return Scorer::kDot;
  if (v == "cosine") return Scorer::kCosine;
  throw ConfigError("unknown scorer '" + std::string(v) + "' (dot or cosine)");
}
std::string_view readout_name(Readout r) { return r == Readout::kTypewise ? "typewise" : "mean"; }
Readout parse_readout(std::string_view v) {
  if (v == "typewise") return Readout::kTypewise;
  if (v == "mean") return Readout::kMean;
  throw ConfigError("unknown readout '" + std::string(v) + "' (typewise or mean)");
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto end = v.find(',', start);
    if (end == std::string_view::npos) end = v.size();
    std::string item(v.substr(start, end - start));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

#define STR(k, field) \
  Entry{k, [](const RunConfig& c) { return quote(c.field); }, \
        [](RunConfig& c, std::string_view v) { c.field = std::string(v); }}
#define DBL(k, field) \
  Entry{k, [](const RunConfig& c) { return fmt_double(c.field); }, \
        [](RunConfig& c, std::string_view v) { c.field = to_double(k, v); }}
#define UINT(k, field) \
  Entry{k, [](const RunConfig& c) { return std::to_string(c.field); }, \
        [](RunConfig& c, std::string_view v) { c.field = static_cast<decltype(c.field)>(to_uint(k, v)); }}
#define BOOL(k, field) \
  Entry{k, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
        [](RunConfig& c, std::string_view v) { c.field = to_bool(k, v); }}
#define ENUM(k, field, name_fn, parse_fn) \
  Entry{k, [](const RunConfig& c) { return quote(name_fn(c.field)); }, \
        [](RunConfig& c, std::string_view v) { c.field = parse_fn(v); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      STR("train_path", train_path),
      STR("valid_path", valid_path),
      STR("test_path", test_path),
      STR("delimiter", delimiter),
      UINT("toy_seed", toy.seed),
      UINT("toy_entities", toy.n_entities),
      UINT("toy_relations", toy.n_relations),
      UINT("toy_facts", toy.n_facts),
      DBL("toy_qualifier_ratio", toy.qualifier_ratio),
      UINT("toy_max_qualifiers", toy.max_qualifiers),
      UINT("toy_latent_rank", toy.latent_rank),
      UINT("dim", model.encoder.dim),
      UINT("encoder_layers", model.encoder.n_layers),
      DBL("dropout", model.encoder.dropout),
      ENUM("feature_variant", model.encoder.feature_variant, feature_name, parse_feature),
      ENUM("pool_attention", model.encoder.pool_attention, ad::pool_name, ad::parse_pool),
      ENUM("pool_qual_relation", model.encoder.pool_qual_relation, ad::pool_name, ad::parse_pool),
      ENUM("pool_qual_entity", model.encoder.pool_qual_entity, ad::pool_name, ad::parse_pool),
      ENUM("pool_second", model.encoder.pool_second, ad::pool_name, ad::parse_pool),
      ENUM("activation", model.encoder.activation, ad::activation_name, ad::parse_activation),
      ENUM("relation_activation", model.encoder.relation_activation, ad::activation_name,
           ad::parse_activation),
      BOOL("use_attention", model.encoder.use_attention),
      BOOL("use_coo", model.encoder.use_coo),
      ENUM("neighbor_norm", model.encoder.neighbor_norm, norm_name, parse_norm),
      DBL("alpha_init", model.encoder.alpha_init),
      DBL("beta_init", model.encoder.beta_init),
      STR("attention_variant", model.encoder.attention_variant),
      UINT("decoder_layers", model.decoder.n_layers),
      UINT("decoder_heads", model.decoder.n_heads),
      UINT("decoder_hidden", model.decoder.hidden_dim),
      DBL("decoder_dropout", model.decoder.dropout),
      ENUM("decoder_pool", model.decoder.pool, ad::pool_name, ad::parse_pool),
      ENUM("scorer", model.decoder.scorer, scorer_name, parse_scorer),
      ENUM("readout", model.decoder.readout, readout_name, parse_readout),
      UINT("max_qualifiers", model.decoder.max_qualifiers),
      ENUM("ffn_activation", model.decoder.ffn_activation, ad::activation_name, ad::parse_activation),
      ENUM("readout_activation", model.decoder.readout_activation, ad::activation_name,
           ad::parse_activation),
      DBL("temperature_init", model.decoder.temperature_init),
      UINT("epochs", train.epochs),
      UINT("batch_size", train.batch_size),
      DBL("lr", train.lr),
      DBL("label_smoothing", train.label_smoothing),
      UINT("eval_every", train.eval_every),
      Entry{"eval_splits", [](const RunConfig& c) { return quote(join(c.train.eval_splits)); },
            [](RunConfig& c, std::string_view v) { c.train.eval_splits = split_list(v); }},
      BOOL("trace_wall_time", train.trace_wall_time),
      UINT("eval_batch_size", train.eval_batch_size),
      Entry{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, std::string_view v) {
              c.seed = to_uint("seed", v);
              c.train.seed = c.seed;
            }},
      STR("run_dir", run_dir),
      STR("checkpoint", checkpoint),
      STR("eval_split", eval_split),
      STR("out_dir", out_dir),
      DBL("grad_check_eps", grad_check_eps),
      DBL("grad_check_tol", grad_check_tol),
      UINT("grad_check_coords", grad_check_coords),
  };
  return table;
}

#undef STR
#undef DBL
#undef UINT
#undef BOOL
#undef ENUM

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) ++i;
      out += v[i];
    }
    return out;
  }
  return std::string(v);
}

}  // namespace

void RunConfig::validate() const {
  model.encoder.validate();
  model.decoder.validate(model.encoder.dim);
  train.validate();
  kg::parse_delimiter(delimiter);
  if (eval_split != "train" && eval_split != "valid" && eval_split != "test") {
    throw ConfigError("eval_split must be train, valid or test");
  }
  if (!(toy.qualifier_ratio >= 0.0 && toy.qualifier_ratio <= 1.0)) {
    throw ConfigError("toy_qualifier_ratio must lie in [0, 1]");
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries()) keys.emplace_back(e.key);
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& e : entries()) {
    if (key == e.key) {
      e.set(config, unquote(trim(value)));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    // Strip comments outside quotes.
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_toml(const RunConfig& config) {
  std::string out;
  for (const auto& e : entries()) out += std::string(e.key) + " = " + e.get(config) + "\n";
  return out;
}

kg::Dataset load_run_dataset(const RunConfig& config) {
  if (config.train_path.empty()) return kg::generate_toy_kg(config.toy);
  return kg::load_dataset(config.train_path, config.valid_path, config.test_path,
                          kg::parse_delimiter(config.delimiter));
}

}  // namespace resae
