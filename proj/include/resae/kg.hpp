#pragma once

// Hyper-relational statements: ingestion, vocabularies, inverse augmentation,
// relation co-occurrence, statistics and a seeded toy-corpus generator.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "resae/tensor.hpp"

namespace resae::kg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Qualifier {
  RelationId relation;
  EntityId value;
  auto operator<=>(const Qualifier&) const = default;
};

struct HyperFact {
  EntityId subject;
  RelationId relation;
  EntityId object;
  std::vector<Qualifier> qualifiers;
  bool operator==(const HyperFact&) const = default;
};

// One statement line as label strings.
struct RawStatement {
  std::string subject;
  std::string relation;
  std::string object;
  std::vector<std::pair<std::string, std::string>> qualifiers;
  bool operator==(const RawStatement&) const = default;
};

enum class Direction { kForward, kInverse, kLoop };
inline constexpr Direction kAllDirections[] = {Direction::kForward, Direction::kInverse,
                                               Direction::kLoop};
std::string_view direction_name(Direction direction);

// Fields: s<D>r<D>o[<D>qr<D>qv]*. Blank lines are skipped and a trailing CR
// is dropped. Throws ParseError carrying the 1-based line number.
std::vector<RawStatement> parse_statements_text(std::string_view text, char delimiter = ',');
std::vector<RawStatement> parse_statements(const std::filesystem::path& path,
                                           char delimiter = ',');
std::string serialize_statements(std::span<const RawStatement> statements,
                                 char delimiter = ',');
char parse_delimiter(std::string_view name);

// Relation ids: real relations [0, R), their inverses [R, 2R), then the loop
// relation 2R and the pad relation 2R+1. Entity ids: real entities [0, V),
// then the pad entity V.
class Vocabulary {
 public:
  static constexpr std::string_view kInverseSuffix = "_inverse";
  static constexpr std::string_view kLoopLabel = "__self_loop__";
  static constexpr std::string_view kPadLabel = "__pad__";

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> entity_labels, std::vector<std::string> relation_labels);

  std::size_t num_real_entities() const noexcept { return real_entities_; }
  std::size_t num_entities() const noexcept { return entity_labels_.size(); }
  std::size_t num_real_relations() const noexcept { return real_relations_; }
  std::size_t num_relations() const noexcept { return relation_labels_.size(); }

  EntityId pad_entity() const noexcept { return static_cast<EntityId>(real_entities_); }
  RelationId loop_relation() const noexcept { return static_cast<RelationId>(2 * real_relations_); }
  RelationId pad_relation() const noexcept { return static_cast<RelationId>(2 * real_relations_ + 1); }

  bool is_forward(RelationId r) const noexcept { return r < real_relations_; }
  bool is_inverse(RelationId r) const noexcept {
    return r >= real_relations_ && r < 2 * real_relations_;
  }
  // Throws for loop and pad.
  RelationId inverse(RelationId r) const;
  // Throws for pad.
  Direction direction(RelationId r) const;

  const std::string& entity_label(EntityId e) const { return entity_labels_.at(e); }
  const std::string& relation_label(RelationId r) const { return relation_labels_.at(r); }
  std::optional<EntityId> find_entity(std::string_view label) const;
  std::optional<RelationId> find_relation(std::string_view label) const;
  EntityId entity_id(std::string_view label) const;
  RelationId relation_id(std::string_view label) const;

 private:
  std::size_t real_entities_ = 0;
  std::size_t real_relations_ = 0;
  std::vector<std::string> entity_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, EntityId> entity_index_;
  std::unordered_map<std::string, RelationId> relation_index_;
};

// First-seen order over the splits in the order given. Throws on empty input.
Vocabulary build_vocab(std::span<const RawStatement> train,
                       std::span<const RawStatement> valid = {},
                       std::span<const RawStatement> test = {});

struct Dataset {
  std::vector<HyperFact> train;
  std::vector<HyperFact> valid;
  std::vector<HyperFact> test;
  Vocabulary vocab;
};

Dataset index_dataset(std::span<const RawStatement> train, std::span<const RawStatement> valid,
                      std::span<const RawStatement> test);
// Empty paths yield empty splits; the train path is required.
Dataset load_dataset(const std::filesystem::path& train, const std::filesystem::path& valid,
                     const std::filesystem::path& test, char delimiter = ',');
std::vector<RawStatement> to_raw(std::span<const HyperFact> facts, const Vocabulary& vocab);
void validate_facts(std::span<const HyperFact> facts, const Vocabulary& vocab);

// Each fact followed by its mirror (o, r^-1, s, Q) with qualifiers copied.
std::vector<HyperFact> add_inverse_facts(std::span<const HyperFact> facts,
                                         const Vocabulary& vocab);
// Drops mirrored facts; the inverse of add_inverse_facts.
std::vector<HyperFact> strip_inverse_facts(std::span<const HyperFact> facts,
                                           const Vocabulary& vocab);

struct CooMatrix {
  Direction direction = Direction::kForward;
  Tensor values;  // [R, R]
};

// Raw counts N(i, j): facts with main relation i holding qualifier relation j,
// once per occurrence. Considers every fact given.
Tensor cooccurrence_counts(std::span<const HyperFact> facts, std::size_t n_relations);
// N / mean(row sums); all zeros when the mean is zero.
Tensor normalize_cooccurrence(const Tensor& counts);
// Counts over facts whose main relation has the requested direction.
CooMatrix compute_cooccurrence(std::span<const HyperFact> facts, const Vocabulary& vocab,
                               Direction direction);

struct SplitSizes {
  std::size_t train = 0, valid = 0, test = 0;
};

struct DatasetStats {
  std::size_t num_facts = 0;
  std::size_t facts_with_qualifiers = 0;
  double qualifier_percent = 0.0;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::size_t max_qualifiers = 0;
  SplitSizes splits;
  // "<count> (<pct with one decimal>%)"
  std::string qualified_summary() const;
};

DatasetStats dataset_stats(const Dataset& dataset);
std::string stats_to_json(const DatasetStats& stats);

struct ToyOptions {
  std::uint64_t seed = 7;
  std::size_t n_entities = 50;
  std::size_t n_relations = 8;
  std::size_t n_facts = 200;
  double qualifier_ratio = 0.4;
  std::size_t max_qualifiers = 2;
  std::size_t latent_rank = 4;
};

Dataset generate_toy_kg(const ToyOptions& options);

}  // namespace resae::kg
