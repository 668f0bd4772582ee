//------------------------------------------------------------------------------
//
//   Copyright 2026 The svdtrain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "svdtrain/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svdtrain {

class Tape;

using NodeId      = std::size_t;
using GradientMap = std::map<std::string, Tensor>;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape is cleared.
/// References returned by value() stay valid while further nodes are recorded.
class Var
{
public:
  Var() = default;

  const Tensor &value() const;
  const Shape  &shape() const
  {
    return value().shape();
  }
  bool requires_grad() const;

  NodeId id() const
  {
    return id_;
  }
  Tape &tape() const
  {
    return *tape_;
  }
  bool valid() const
  {
    return tape_ != nullptr;
  }

private:
  friend class Tape;
  Var(Tape *tape, NodeId id)
    : tape_(tape)
    , id_(id)
  {}

  Tape  *tape_ = nullptr;
  NodeId id_   = 0;
};

/// Accumulation target handed to a node's backward function.
class GradSink
{
public:
  bool wants(std::size_t input) const;
  /// Adds `grad` into the gradient of input `input` (no-op when it needs none).
  void add(std::size_t input, Tensor grad);

private:
  friend class Tape;
  GradSink(Tape &tape, const std::vector<NodeId> &inputs)
    : tape_(tape)
    , inputs_(inputs)
  {}

  Tape                      &tape_;
  const std::vector<NodeId> &inputs_;
};

using BackwardFn = std::function<void(const Tensor &grad_out, GradSink &sink)>;

/**
 * Reverse-mode recording of one forward pass.
 *
 * Nodes are appended in evaluation order, so the node list is always a
 * topological order. A tape belongs to a single thread for one
 * forward + backward pass and is discarded (or cleared) afterwards.
 */
class Tape
{
public:
  Tape()                        = default;
  Tape(const Tape &)            = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor value);
  /// Registers a trainable leaf under `name` (names must be unique per tape).
  Var parameter(const std::string &name, Tensor value);
  /// Appends an op node. `backward` is dropped when no input requires a gradient.
  Var record(Tensor value, const std::vector<Var> &inputs, BackwardFn backward);

  /// Reverse accumulation from a 0-d loss. Every registered parameter gets an
  /// entry; parameters the loss does not depend on get zeros.
  GradientMap backward(Var loss);

  const Tensor &value(NodeId id) const
  {
    return nodes_[id].value;
  }
  bool requires_grad(NodeId id) const
  {
    return nodes_[id].requires_grad;
  }
  std::size_t size() const
  {
    return nodes_.size();
  }
  std::vector<std::string> parameter_names() const;

  void clear();

private:
  friend class GradSink;

  struct Node
  {
    Tensor              value;
    std::vector<NodeId> inputs;
    BackwardFn          backward;
    bool                requires_grad = false;
  };

  std::deque<Node>                   nodes_;  // deque: values stay put as nodes are appended
  std::map<std::string, NodeId>      parameters_;
  std::vector<std::optional<Tensor>> grads_;
};

}  // namespace svdtrain
