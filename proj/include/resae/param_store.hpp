#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "resae/tensor.hpp"

namespace resae {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named trainable tensors in insertion order. References returned by add()
// and get() stay valid for the lifetime of the store.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  ParamStore(const ParamStore&);
  ParamStore& operator=(const ParamStore&);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(std::string name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t total_values() const;
  std::uint64_t seed() const noexcept { return seed_; }

  void zero_grad();
  std::vector<std::string> names() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  void reindex();

  std::uint64_t seed_ = 0;
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace resae
