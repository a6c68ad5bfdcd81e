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

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lea/numerics/tensor.h"

namespace lea {

// Named parameter set in insertion order. Used as the model weight store,
// as the grad_check evaluation point and as the optimizer's target.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool decay = true;  // subject to decoupled weight decay
  };

  Tensor& add(std::string name, Tensor value, bool decay = true);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode gradient tape. Nodes are appended in evaluation order and
// backward() walks them once in reverse. A tape serves one forward/backward
// pass and is then discarded; it is never shared across threads.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Named leaf; receives a gradient unless requires_grad is false (inference).
  Var parameter(const std::string& name, const Tensor& value, bool requires_grad = true);
  // Binds every entry of the store as a parameter.
  void bind(const ParamStore& params, bool requires_grad = true);
  Var param(const std::string& name) const;

  // Appends an op node. `backward` runs only if some parent needs a gradient.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return requires_grad(v.id); }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  // Gradient buffer of `id`, allocated as zeros on first use.
  Tensor& grad_buffer(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var loss);

  // Gradient w.r.t. a named parameter; zeros if it did not influence the loss.
  Tensor param_grad(const std::string& name) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
};

}  // namespace lea
