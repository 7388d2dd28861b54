// Copyright 2026 The cfm-workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFM_NN_PARAM_STORE_HPP_
#define CFM_NN_PARAM_STORE_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "cfm/nn/graph.hpp"
#include "cfm/nn/rng.hpp"
#include "cfm/nn/tensor.hpp"

namespace cfm::nn {

// Named parameters with per-parameter gradient buffers and Adam moments.
// Owned by a single trainer; iteration order is insertion order.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;
    Tensor<T> v;
  };

  void add(const std::string& name, Tensor<T> init) {
    if (index_.count(name)) {
      throw std::invalid_argument("ParamStore: duplicate name " + name);
    }
    Entry e;
    e.name = name;
    e.grad = Tensor<T>(init.shape);
    e.m = Tensor<T>(init.shape);
    e.v = Tensor<T>(init.shape);
    e.value = std::move(init);
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  int count() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  Tensor<T>& value(const std::string& name) { return at(name).value; }
  const Tensor<T>& value(const std::string& name) const { return at(name).value; }
  Tensor<T>& grad(const std::string& name) { return at(name).grad; }

  void zero_grads() {
    for (auto& e : entries_) e.grad.fill(T(0));
    grads_ready_ = false;
  }

  void mark_grads_ready() { grads_ready_ = true; }
  bool grads_ready() const { return grads_ready_; }
  int64_t step() const { return step_; }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  // Internal: used by adam_step.
  void advance_step() { ++step_; }

 private:
  Entry& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return entries_[static_cast<size_t>(it->second)];
  }
  const Entry& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return entries_[static_cast<size_t>(it->second)];
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  int64_t step_ = 0;
  bool grads_ready_ = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every parameter; increments the step counter and
// zeroes gradients afterwards. Throws if gradients were never populated or
// contain non-finite values.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg);

// Glue between a tape and a store: parameters become memoized leaf nodes,
// pull_grads() copies node gradients back after backward(). A binding built
// from a const store is read-only (inference).
template <typename T>
class GraphBinding {
 public:
  GraphBinding(Graph<T>& g, ParamStore<T>& store)
      : g_(&g), cstore_(&store), store_(&store) {}
  GraphBinding(Graph<T>& g, const ParamStore<T>& store)
      : g_(&g), cstore_(&store), store_(nullptr) {}

  int param(const std::string& name) {
    auto it = node_of_.find(name);
    if (it != node_of_.end()) return it->second;
    int id = g_->leaf(cstore_->value(name));
    node_of_[name] = id;
    return id;
  }

  void pull_grads() {
    if (store_ == nullptr) {
      throw std::logic_error("GraphBinding: read-only binding cannot pull gradients");
    }
    for (const auto& [name, node] : node_of_) {
      store_->grad(name) = g_->grad(node);
    }
    store_->mark_grads_ready();
  }

 private:
  Graph<T>* g_;
  const ParamStore<T>* cstore_;
  ParamStore<T>* store_;
  std::unordered_map<std::string, int> node_of_;
};

// Glorot-uniform initializer: U(-sqrt(6/(fan_in+fan_out)), +...).
template <typename T>
Tensor<T> glorot_uniform(const std::vector<int>& shape, int fan_in, int fan_out,
                         Rng& rng) {
  Tensor<T> t(shape);
  double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-a, a));
  return t;
}

extern template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
extern template void adam_step<double>(ParamStore<double>&, const AdamConfig&);

}  // namespace cfm::nn

#endif  // CFM_NN_PARAM_STORE_HPP_
