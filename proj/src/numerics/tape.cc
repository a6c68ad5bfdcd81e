// Copyright 2026 The LEA Authors
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

#include "lea/numerics/tape.h"

#include "lea/error.h"

namespace lea {

Tensor& ParamStore::add(std::string name, Tensor value, bool decay) {
  if (contains(name)) throw ValidationError("duplicate parameter name: " + name);
  index_[name] = entries_.size();
  entries_.push_back({std::move(name), std::move(value), decay});
  return entries_.back().value;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
  return entries_[it->second].value;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter: " + name);
  return entries_[it->second].value;
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, false, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const std::string& name, const Tensor& value, bool requires_grad) {
  if (params_.count(name)) throw ValidationError("parameter bound twice: " + name);
  nodes_.push_back({value, {}, requires_grad, {}, {}});
  params_[name] = nodes_.size() - 1;
  return {this, nodes_.size() - 1};
}

void Tape::bind(const ParamStore& params, bool requires_grad) {
  for (const auto& e : params.entries()) parameter(e.name, e.value, requires_grad);
}

Var Tape::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("parameter not bound on tape: " + name);
  return {const_cast<Tape*>(this), it->second};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_[p].requires_grad;
  Node node{std::move(value), {}, needs, {}, {}};
  if (needs) {
    node.parents = std::move(parents);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::grad(std::size_t id) const { return nodes_[id].grad; }

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ValidationError("backward: variable belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     shape_to_string(value(loss.id).shape()));
  }
  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

Tensor Tape::param_grad(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("parameter not bound on tape: " + name);
  const Node& n = nodes_[it->second];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

}  // namespace lea
