#include "resae/param_store.hpp"

#include <stdexcept>

namespace resae {

ParamStore::ParamStore(const ParamStore& other)
    : seed_(other.seed_), params_(other.params_) {
  reindex();
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    seed_ = other.seed_;
    params_ = other.params_;
    reindex();
  }
  return *this;
}

void ParamStore::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

Parameter& ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) {
    throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  }
  index_[name] = params_.size();
  Tensor grad = Tensor::zeros_like(value);
  params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad)});
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("ParamStore: no parameter '" + name + "'");
  }
  return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

bool ParamStore::contains(const std::string& name) const { return index_.contains(name); }

std::size_t ParamStore::total_values() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

}  // namespace resae
