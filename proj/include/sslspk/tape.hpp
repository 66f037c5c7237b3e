#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sslspk/tensor.hpp"

namespace sslspk {

// Handle into a GradTape; valid only for the tape that produced it.
struct Var {
  std::size_t idx = static_cast<std::size_t>(-1);
};

// Reverse-mode tape over dense 2-D tensors. Nodes are appended in forward
// (hence topological) order; backward replays them once in reverse, and
// gradients accumulate additively on fan-out. Values are immutable once
// recorded. One backward pass per forward pass: a second backward without
// reset() is rejected.
//
// Broadcast is limited to a 1xC row vector combined with an RxC matrix in
// add/sub; everything else requires exact shape agreement.
class GradTape {
 public:
  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  Var leaf(Tensor t);      // tracked iff t.requires_grad()
  Var constant(Tensor t);  // never receives gradient

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);
  Var exp(Var a);
  Var log(Var a);  // strict: any entry <= 0 is a domain error
  Var tanh(Var a);
  Var relu(Var a);
  Var softmax_rows(Var a);
  Var mean(Var a);  // over all entries, 1x1
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var l2_normalize_rows(Var a);  // rows with norm < 1e-12 are rejected
  Var concat_rows(Var a, Var b);
  Var concat_cols(Var a, Var b);
  // out(i,0) = a(i, col[i])
  Var gather_cols(Var a, std::vector<std::size_t> col);
  // out(i,0) = dot(a row i, b row i)
  Var rowwise_dot(Var a, Var b);
  // out(i,0) = log sum_j exp(a(i,j)) over columns with mask(i,j) != 0.
  // Null mask means all columns. Computed as max + log1p(rest) so that
  // near-dominated terms keep their tiny but nonzero contribution.
  Var logsumexp_rows(Var a, const Tensor* mask = nullptr);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  // After backward: gradient of the root w.r.t. node v. Nodes that do not
  // require grad report zeros (stop-gradient contract).
  Tensor grad(Var v) const;
  void backward(Var root);  // root must be 1x1
  void reset();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    std::function<void(GradTape&, std::size_t)> backprop;  // null for leaves
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;  // empty tensor = not yet touched
  bool backward_done_ = false;

  Var push(Tensor value, bool requires_grad,
           std::function<void(GradTape&, std::size_t)> backprop);
  const Node& node(Var v) const;
  // accumulation buffer for node idx, allocated on first use
  Tensor& grad_buf(std::size_t idx);
  void accumulate(std::size_t idx, const Tensor& g);
};

}  // namespace sslspk
