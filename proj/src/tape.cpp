#include "sslspk/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "sslspk/errors.hpp"
#include "sslspk/kernels.hpp"

namespace sslspk {

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (!t.is_matrix()) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor");
  }
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Var GradTape::push(Tensor value, bool requires_grad,
                   std::function<void(GradTape&, std::size_t)> backprop) {
  if (backward_done_) {
    throw NumericError(
        "tape: forward op recorded after backward; reset() before reuse");
  }
  nodes_.push_back(Node{std::move(value), requires_grad, std::move(backprop)});
  return Var{nodes_.size() - 1};
}

const GradTape::Node& GradTape::node(Var v) const {
  if (v.idx >= nodes_.size()) {
    throw ShapeError("tape: variable does not belong to this tape");
  }
  return nodes_[v.idx];
}

const Tensor& GradTape::value(Var v) const { return node(v).value; }

bool GradTape::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor& GradTape::grad_buf(std::size_t idx) {
  if (grads_[idx].empty()) {
    grads_[idx] = Tensor(nodes_[idx].value.shape());
  }
  return grads_[idx];
}

void GradTape::accumulate(std::size_t idx, const Tensor& g) {
  if (!nodes_[idx].requires_grad) return;
  Tensor& buf = grad_buf(idx);
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

Tensor GradTape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.requires_grad || v.idx >= grads_.size() || grads_[v.idx].empty()) {
    return Tensor(n.value.shape());
  }
  return grads_[v.idx];
}

void GradTape::backward(Var root) {
  const Node& r = node(root);
  if (backward_done_) {
    throw NumericError("tape: backward already ran; reset() before reuse");
  }
  if (r.value.size() != 1) {
    throw ShapeError("tape: backward root must be a 1x1 scalar");
  }
  backward_done_ = true;
  grads_.assign(nodes_.size(), Tensor());
  if (!r.requires_grad) return;
  grad_buf(root.idx).data()[0] = 1.0;
  for (std::size_t i = root.idx + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backprop || grads_[i].empty()) continue;
    n.backprop(*this, i);
  }
}

void GradTape::reset() {
  nodes_.clear();
  grads_.clear();
  backward_done_ = false;
}

Var GradTape::leaf(Tensor t) {
  const bool rg = t.requires_grad();
  return push(std::move(t), rg, nullptr);
}

Var GradTape::constant(Tensor t) {
  t.set_requires_grad(false);
  return push(std::move(t), false, nullptr);
}

Var GradTape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "add");
  require_matrix(y, "add");
  const bool bcast = !x.same_shape(y);
  if (bcast && !(y.rows() == 1 && y.cols() == x.cols())) {
    throw ShapeError("add: shapes " + shape_str(x) + " and " + shape_str(y) +
                     " are incompatible (broadcast is row-over-matrix only)");
  }
  Tensor out(x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out.data()[i * c + j] = x.data()[i * c + j] + y.data()[bcast ? j : i * c + j];
    }
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, bcast](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                t.accumulate(ai, g);
                if (!t.nodes_[bi].requires_grad) return;
                if (!bcast) {
                  t.accumulate(bi, g);
                } else {
                  Tensor gb(t.nodes_[bi].value.shape());
                  const std::size_t r2 = g.rows(), c2 = g.cols();
                  for (std::size_t i = 0; i < r2; ++i)
                    for (std::size_t j = 0; j < c2; ++j)
                      gb.data()[j] += g.data()[i * c2 + j];
                  t.accumulate(bi, gb);
                }
              });
}

Var GradTape::sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "sub");
  require_matrix(y, "sub");
  const bool bcast = !x.same_shape(y);
  if (bcast && !(y.rows() == 1 && y.cols() == x.cols())) {
    throw ShapeError("sub: shapes " + shape_str(x) + " and " + shape_str(y) +
                     " are incompatible (broadcast is row-over-matrix only)");
  }
  Tensor out(x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out.data()[i * c + j] = x.data()[i * c + j] - y.data()[bcast ? j : i * c + j];
    }
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, bcast](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                t.accumulate(ai, g);
                if (!t.nodes_[bi].requires_grad) return;
                Tensor gb(t.nodes_[bi].value.shape());
                const std::size_t r2 = g.rows(), c2 = g.cols();
                if (!bcast) {
                  for (std::size_t i = 0; i < gb.size(); ++i)
                    gb.data()[i] = -g.data()[i];
                } else {
                  for (std::size_t i = 0; i < r2; ++i)
                    for (std::size_t j = 0; j < c2; ++j)
                      gb.data()[j] -= g.data()[i * c2 + j];
                }
                t.accumulate(bi, gb);
              });
}

Var GradTape::scale(Var a, double c) {
  const Tensor& x = value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = c * x.data()[i];
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai, c](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i)
                  ga.data()[i] = c * g.data()[i];
                t.accumulate(ai, ga);
              });
}

Var GradTape::exp(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::exp(x.data()[i]);
  out.check_finite("exp");
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& y = t.nodes_[self].value;
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i)
                  ga.data()[i] = g.data()[i] * y.data()[i];
                t.accumulate(ai, ga);
              });
}

Var GradTape::log(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.data()[i] <= 0.0) {
      throw DomainError("log: non-positive input at flat index " +
                        std::to_string(i));
    }
    out.data()[i] = std::log(x.data()[i]);
  }
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& x2 = t.nodes_[ai].value;
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i)
                  ga.data()[i] = g.data()[i] / x2.data()[i];
                t.accumulate(ai, ga);
              });
}

Var GradTape::tanh(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::tanh(x.data()[i]);
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& y = t.nodes_[self].value;
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i)
                  ga.data()[i] = g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
                t.accumulate(ai, ga);
              });
}

Var GradTape::relu(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& x2 = t.nodes_[ai].value;
                Tensor ga(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i)
                  ga.data()[i] = x2.data()[i] > 0.0 ? g.data()[i] : 0.0;
                t.accumulate(ai, ga);
              });
}

Var GradTape::softmax_rows(Var a) {
  const Tensor& x = value(a);
  require_matrix(x, "softmax_rows");
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    double* oi = out.data() + i * c;
    double mx = xi[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      oi[j] = std::exp(xi[j] - mx);
      sum += oi[j];
    }
    for (std::size_t j = 0; j < c; ++j) oi[j] /= sum;
  }
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& y = t.nodes_[self].value;
                const std::size_t r2 = y.rows(), c2 = y.cols();
                Tensor ga(y.shape());
                for (std::size_t i = 0; i < r2; ++i) {
                  const double* yi = y.data() + i * c2;
                  const double* gi = g.data() + i * c2;
                  double dot = 0.0;
                  for (std::size_t j = 0; j < c2; ++j) dot += yi[j] * gi[j];
                  double* gai = ga.data() + i * c2;
                  for (std::size_t j = 0; j < c2; ++j)
                    gai[j] = yi[j] * (gi[j] - dot);
                }
                t.accumulate(ai, ga);
              });
}

Var GradTape::mean(Var a) {
  const Tensor& x = value(a);
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s / static_cast<double>(x.size()));
  const std::size_t ai = a.idx;
  const double inv = 1.0 / static_cast<double>(x.size());
  return push(std::move(out), requires_grad(a),
              [ai, inv](GradTape& t, std::size_t self) {
                const double g = t.grads_[self].data()[0];
                const Tensor& x2 = t.nodes_[ai].value;
                Tensor ga(x2.shape());
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] = g * inv;
                t.accumulate(ai, ga);
              });
}

Var GradTape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "matmul");
  require_matrix(y, "matmul");
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(x) +
                     " vs " + shape_str(y));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out({m, n});
  kernels::matmul_nn(x.data(), y.data(), out.data(), m, k, n);
  out.check_finite("matmul");
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, m, k, n](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& x2 = t.nodes_[ai].value;
                const Tensor& y2 = t.nodes_[bi].value;
                if (t.nodes_[ai].requires_grad) {
                  Tensor ga({m, k});
                  kernels::matmul_nt(g.data(), y2.data(), ga.data(), m, n, k);
                  t.accumulate(ai, ga);
                }
                if (t.nodes_[bi].requires_grad) {
                  Tensor gb({k, n});
                  kernels::matmul_tn(x2.data(), g.data(), gb.data(), m, k, n);
                  t.accumulate(bi, gb);
                }
              });
}

Var GradTape::transpose(Var a) {
  const Tensor& x = value(a);
  require_matrix(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.data()[j * r + i] = x.data()[i * c + j];
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai, r, c](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];  // c x r
                Tensor ga({r, c});
                for (std::size_t i = 0; i < c; ++i)
                  for (std::size_t j = 0; j < r; ++j)
                    ga.data()[j * c + i] = g.data()[i * r + j];
                t.accumulate(ai, ga);
              });
}

Var GradTape::l2_normalize_rows(Var a) {
  const Tensor& x = value(a);
  require_matrix(x, "l2_normalize_rows");
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out(x.shape());
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += xi[j] * xi[j];
    const double norm = std::sqrt(s);
    if (norm < 1e-12) {
      throw DomainError("l2_normalize_rows: degenerate embedding, row " +
                        std::to_string(i) + " has norm < 1e-12");
    }
    norms[i] = norm;
    double* oi = out.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) oi[j] = xi[j] / norm;
  }
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai, norms = std::move(norms)](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& y = t.nodes_[self].value;
                const std::size_t r2 = y.rows(), c2 = y.cols();
                Tensor ga(y.shape());
                for (std::size_t i = 0; i < r2; ++i) {
                  const double* yi = y.data() + i * c2;
                  const double* gi = g.data() + i * c2;
                  double dot = 0.0;
                  for (std::size_t j = 0; j < c2; ++j) dot += yi[j] * gi[j];
                  double* gai = ga.data() + i * c2;
                  for (std::size_t j = 0; j < c2; ++j)
                    gai[j] = (gi[j] - yi[j] * dot) / norms[i];
                }
                t.accumulate(ai, ga);
              });
}

Var GradTape::concat_rows(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "concat_rows");
  require_matrix(y, "concat_rows");
  if (x.cols() != y.cols()) {
    throw ShapeError("concat_rows: column counts disagree, " + shape_str(x) +
                     " vs " + shape_str(y));
  }
  const std::size_t ra = x.rows(), rb = y.rows(), c = x.cols();
  Tensor out({ra + rb, c});
  std::copy(x.data(), x.data() + ra * c, out.data());
  std::copy(y.data(), y.data() + rb * c, out.data() + ra * c);
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, ra, rb, c](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                if (t.nodes_[ai].requires_grad) {
                  Tensor ga({ra, c});
                  std::copy(g.data(), g.data() + ra * c, ga.data());
                  t.accumulate(ai, ga);
                }
                if (t.nodes_[bi].requires_grad) {
                  Tensor gb({rb, c});
                  std::copy(g.data() + ra * c, g.data() + (ra + rb) * c,
                            gb.data());
                  t.accumulate(bi, gb);
                }
              });
}

Var GradTape::concat_cols(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "concat_cols");
  require_matrix(y, "concat_cols");
  if (x.rows() != y.rows()) {
    throw ShapeError("concat_cols: row counts disagree, " + shape_str(x) +
                     " vs " + shape_str(y));
  }
  const std::size_t r = x.rows(), ca = x.cols(), cb = y.cols();
  Tensor out({r, ca + cb});
  for (std::size_t i = 0; i < r; ++i) {
    std::copy(x.data() + i * ca, x.data() + (i + 1) * ca,
              out.data() + i * (ca + cb));
    std::copy(y.data() + i * cb, y.data() + (i + 1) * cb,
              out.data() + i * (ca + cb) + ca);
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, r, ca, cb](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                if (t.nodes_[ai].requires_grad) {
                  Tensor ga({r, ca});
                  for (std::size_t i = 0; i < r; ++i)
                    std::copy(g.data() + i * (ca + cb),
                              g.data() + i * (ca + cb) + ca,
                              ga.data() + i * ca);
                  t.accumulate(ai, ga);
                }
                if (t.nodes_[bi].requires_grad) {
                  Tensor gb({r, cb});
                  for (std::size_t i = 0; i < r; ++i)
                    std::copy(g.data() + i * (ca + cb) + ca,
                              g.data() + (i + 1) * (ca + cb),
                              gb.data() + i * cb);
                  t.accumulate(bi, gb);
                }
              });
}

Var GradTape::gather_cols(Var a, std::vector<std::size_t> col) {
  const Tensor& x = value(a);
  require_matrix(x, "gather_cols");
  if (col.size() != x.rows()) {
    throw ShapeError("gather_cols: need one column index per row");
  }
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out({r, 1});
  for (std::size_t i = 0; i < r; ++i) {
    if (col[i] >= c) {
      throw ShapeError("gather_cols: column index " + std::to_string(col[i]) +
                       " out of range for " + shape_str(x));
    }
    out.data()[i] = x.data()[i * c + col[i]];
  }
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai, c, col = std::move(col)](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const std::size_t r2 = g.rows();
                Tensor ga(t.nodes_[ai].value.shape());
                for (std::size_t i = 0; i < r2; ++i)
                  ga.data()[i * c + col[i]] = g.data()[i];
                t.accumulate(ai, ga);
              });
}

Var GradTape::rowwise_dot(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_matrix(x, "rowwise_dot");
  require_matrix(y, "rowwise_dot");
  if (!x.same_shape(y)) {
    throw ShapeError("rowwise_dot: shapes disagree, " + shape_str(x) + " vs " +
                     shape_str(y));
  }
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out({r, 1});
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      s += x.data()[i * c + j] * y.data()[i * c + j];
    out.data()[i] = s;
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [ai, bi, c](GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& x2 = t.nodes_[ai].value;
                const Tensor& y2 = t.nodes_[bi].value;
                const std::size_t r2 = g.rows();
                if (t.nodes_[ai].requires_grad) {
                  Tensor ga(x2.shape());
                  for (std::size_t i = 0; i < r2; ++i)
                    for (std::size_t j = 0; j < c; ++j)
                      ga.data()[i * c + j] = g.data()[i] * y2.data()[i * c + j];
                  t.accumulate(ai, ga);
                }
                if (t.nodes_[bi].requires_grad) {
                  Tensor gb(y2.shape());
                  for (std::size_t i = 0; i < r2; ++i)
                    for (std::size_t j = 0; j < c; ++j)
                      gb.data()[i * c + j] = g.data()[i] * x2.data()[i * c + j];
                  t.accumulate(bi, gb);
                }
              });
}

Var GradTape::logsumexp_rows(Var a, const Tensor* mask) {
  const Tensor& x = value(a);
  require_matrix(x, "logsumexp_rows");
  if (mask && !mask->same_shape(x)) {
    throw ShapeError("logsumexp_rows: mask shape disagrees with input");
  }
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out({r, 1});
  Tensor mask_copy = mask ? *mask : Tensor();
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.data() + i * c;
    const double* mi = mask ? mask_copy.data() + i * c : nullptr;
    // max over active columns
    double mx = 0.0;
    std::size_t active = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (mi && mi[j] == 0.0) continue;
      if (active == 0 || xi[j] > mx) mx = xi[j];
      ++active;
    }
    if (active == 0) {
      throw DomainError("logsumexp_rows: row " + std::to_string(i) +
                        " has no active columns");
    }
    // log1p over the non-max remainder keeps dominated terms nonzero
    double rest = 0.0;
    bool max_taken = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (mi && mi[j] == 0.0) continue;
      if (!max_taken && xi[j] == mx) {
        max_taken = true;
        continue;
      }
      rest += std::exp(xi[j] - mx);
    }
    out.data()[i] = mx + std::log1p(rest);
  }
  const std::size_t ai = a.idx;
  return push(std::move(out), requires_grad(a),
              [ai, mask_copy = std::move(mask_copy), has_mask = mask != nullptr](
                  GradTape& t, std::size_t self) {
                const Tensor& g = t.grads_[self];
                const Tensor& lse = t.nodes_[self].value;
                const Tensor& x2 = t.nodes_[ai].value;
                const std::size_t r2 = x2.rows(), c2 = x2.cols();
                Tensor ga(x2.shape());
                for (std::size_t i = 0; i < r2; ++i) {
                  const double* xi = x2.data() + i * c2;
                  const double* mi =
                      has_mask ? mask_copy.data() + i * c2 : nullptr;
                  double* gai = ga.data() + i * c2;
                  for (std::size_t j = 0; j < c2; ++j) {
                    if (mi && mi[j] == 0.0) continue;
                    gai[j] = g.data()[i] * std::exp(xi[j] - lse.data()[i]);
                  }
                }
                t.accumulate(ai, ga);
              });
}

}  // namespace sslspk
