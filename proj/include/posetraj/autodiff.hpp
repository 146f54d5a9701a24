#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// Every operation returns a Var holding its value. While grad mode is on and at
// least one input requires a gradient, the result also records a closure that
// pushes its output gradient back to the inputs; `backward` replays those
// closures in reverse topological order. Parameter leaves accumulate gradients
// until `zero_grad` is called, which is what mini-batch accumulation relies on.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "posetraj/error.hpp"
#include "posetraj/skeleton.hpp"
#include "posetraj/types.hpp"

namespace posetraj::ad {

struct Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Matrix& grad_buffer() {
    if (!has_grad) {
      grad.setZero(value.rows(), value.cols());
      has_grad = true;
    }
    return grad;
  }
};

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Eigen::Index size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Zero matrix when nothing has flowed back yet.
  Matrix grad() const {
    if (node_->has_grad) return node_->grad;
    return Matrix::Zero(rows(), cols());
  }
  bool has_grad() const { return node_->has_grad; }
  void zero_grad() {
    if (node_->has_grad) node_->grad.setZero();
  }
  double item() const { return node_->value(0, 0); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

template <class Expr>
void accumulate(const Var& v, const Expr& g) {
  if (v.requires_grad()) v.node()->grad_buffer() += g;
}

template <class Backward>
Var make_op(Matrix value, std::initializer_list<const Var*> inputs, Backward&& fn) {
  Var out(std::move(value));
  if (!grad_mode()) return out;
  bool any = false;
  for (const Var* in : inputs) any = any || in->requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const Var* in : inputs) {
    if (in->requires_grad()) node.parents.push_back(in->node());
  }
  node.backward = std::forward<Backward>(fn);
  return out;
}

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string(op) + ": shape " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

}  // namespace detail

// Reverse pass from a scalar (1x1) root; `seed` overrides the unit seed for
// non-scalar roots.
inline void backward(const Var& root, const Matrix* seed = nullptr) {
  if (!root.requires_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  Matrix& g = root.node()->grad_buffer();
  if (seed) {
    detail::check_same_shape(g, *seed, "backward seed");
    g += *seed;
  } else {
    g.array() += 1.0;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

inline Var constant(Matrix m) { return Var(std::move(m), false); }

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out = a.value() * b.value();
  return detail::make_op(std::move(out), {&a, &b}, [a, b](Node& self) {
    if (a.requires_grad()) detail::accumulate(a, self.grad * b.value().transpose());
    if (b.requires_grad()) detail::accumulate(b, a.value().transpose() * self.grad);
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::check_same_shape(a.value(), b.value(), "add");
  return detail::make_op(a.value() + b.value(), {&a, &b}, [a, b](Node& self) {
    detail::accumulate(a, self.grad);
    detail::accumulate(b, self.grad);
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::check_same_shape(a.value(), b.value(), "sub");
  return detail::make_op(a.value() - b.value(), {&a, &b}, [a, b](Node& self) {
    detail::accumulate(a, self.grad);
    detail::accumulate(b, -self.grad);
  });
}

// Adds a fixed matrix (e.g. a positional-encoding table).
inline Var add_const(const Var& a, const Matrix& c) {
  detail::check_same_shape(a.value(), c, "add_const");
  return detail::make_op(a.value() + c, {&a}, [a](Node& self) { detail::accumulate(a, self.grad); });
}

// Broadcasts a 1 x C row over every row of a.
inline Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw DimensionMismatch("add_row: bias width");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return detail::make_op(std::move(out), {&a, &row}, [a, row](Node& self) {
    detail::accumulate(a, self.grad);
    if (row.requires_grad()) detail::accumulate(row, self.grad.colwise().sum());
  });
}

inline Var scale(const Var& a, double s) {
  return detail::make_op(a.value() * s, {&a}, [a, s](Node& self) { detail::accumulate(a, self.grad * s); });
}

inline Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return detail::make_op(std::move(out), {&a}, [a](Node& self) {
    detail::accumulate(a, (a.value().array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

// Inverted dropout; identity when p == 0.
inline Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  return detail::make_op(std::move(out), {&a}, [a, mask = std::move(mask)](Node& self) {
    detail::accumulate(a, self.grad.cwiseProduct(mask));
  });
}

// Per-row normalisation over columns followed by a learned affine map.
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  if (gamma.cols() != cols || beta.cols() != cols) throw DimensionMismatch("layer_norm: width");
  Matrix xhat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.value().row(r).mean();
    const double var = (x.value().row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  return detail::make_op(std::move(out), {&x, &gamma, &beta},
                         [x, gamma, beta, xhat = std::move(xhat), inv_std](Node& self) {
                           const Matrix& g = self.grad;
                           if (gamma.requires_grad()) {
                             detail::accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                           }
                           if (beta.requires_grad()) detail::accumulate(beta, g.colwise().sum());
                           if (!x.requires_grad()) return;
                           const Matrix dxhat = g.array().rowwise() * gamma.value().row(0).array();
                           const auto n = static_cast<double>(dxhat.cols());
                           Matrix dx(dxhat.rows(), dxhat.cols());
                           for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                             const double mean_d = dxhat.row(r).sum() / n;
                             const double mean_dx = dxhat.row(r).dot(xhat.row(r)) / n;
                             dx.row(r) = inv_std(r) * (dxhat.row(r).array() - mean_d -
                                                       xhat.row(r).array() * mean_dx)
                                                          .matrix();
                           }
                           detail::accumulate(x, dx);
                         });
}

inline Var rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw DimensionMismatch("rows: out of range");
  Matrix out = a.value().middleRows(start, count);
  return detail::make_op(std::move(out), {&a}, [a, start, count](Node& self) {
    a.node()->grad_buffer().middleRows(start, count) += self.grad;
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionMismatch("concat_rows: nothing to join");
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.cols() != parts.front().cols()) throw DimensionMismatch("concat_rows: widths differ");
    total += p.rows();
  }
  Matrix out(total, parts.front().cols());
  Eigen::Index at = 0;
  bool any = false;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    any = any || p.requires_grad();
  }
  Var result(std::move(out));
  if (!grad_mode() || !any) return result;
  auto& node = *result.node();
  node.requires_grad = true;
  for (const Var& p : parts) {
    if (p.requires_grad()) node.parents.push_back(p.node());
  }
  node.backward = [parts](Node& self) {
    Eigen::Index offset = 0;
    for (const Var& p : parts) {
      detail::accumulate(p, self.grad.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  };
  return result;
}

// Row-major reinterpretation; element order is unchanged.
inline Var reshape(const Var& a, Eigen::Index r, Eigen::Index c) {
  if (r * c != a.size()) throw DimensionMismatch("reshape: element count changes");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), r, c);
  const Eigen::Index ar = a.rows();
  const Eigen::Index ac = a.cols();
  return detail::make_op(std::move(out), {&a}, [a, ar, ac](Node& self) {
    detail::accumulate(a, Eigen::Map<const Matrix>(self.grad.data(), ar, ac));
  });
}

// `count` copies of row `index` of a.
inline Var repeat_row(const Var& a, Eigen::Index index, Eigen::Index count) {
  if (index < 0 || index >= a.rows()) throw DimensionMismatch("repeat_row: index out of range");
  Matrix out = a.value().row(index).replicate(count, 1);
  return detail::make_op(std::move(out), {&a}, [a, index](Node& self) {
    a.node()->grad_buffer().row(index) += self.grad.colwise().sum();
  });
}

inline Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

// Sum of all elements, as a 1x1.
inline Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return detail::make_op(std::move(out), {&a}, [a](Node& self) {
    a.node()->grad_buffer().array() += self.grad(0, 0);
  });
}

// <a, c> for a fixed weight matrix c; a convenient scalar probe for gradient checks.
inline Var weighted_sum(const Var& a, const Matrix& c) {
  detail::check_same_shape(a.value(), c, "weighted_sum");
  Matrix out(1, 1);
  out(0, 0) = a.value().cwiseProduct(c).sum();
  return detail::make_op(std::move(out), {&a}, [a, c](Node& self) {
    detail::accumulate(a, c * self.grad(0, 0));
  });
}

// Mean over rows of the Euclidean norm of (pred_row - target_row). A row with
// zero error contributes a zero subgradient.
inline Var mean_row_distance(const Var& pred, const Matrix& target) {
  detail::check_same_shape(pred.value(), target, "mean_row_distance");
  const Matrix diff = pred.value() - target;
  const Eigen::VectorXd norms = diff.rowwise().norm();
  Matrix out(1, 1);
  out(0, 0) = norms.mean();
  return detail::make_op(std::move(out), {&pred}, [pred, diff, norms](Node& self) {
    const double scale = self.grad(0, 0) / static_cast<double>(diff.rows());
    Matrix g(diff.rows(), diff.cols());
    for (Eigen::Index r = 0; r < diff.rows(); ++r) {
      g.row(r) = norms(r) > 0.0 ? (diff.row(r) * (scale / norms(r))).eval()
                                : RowVector::Zero(diff.cols()).eval();
    }
    detail::accumulate(pred, g);
  });
}

struct AttentionOptions {
  int heads = 1;
  bool causal = false;
  // Relative distances are clipped to [-rel_clip, rel_clip]; only used when
  // relative embeddings are supplied.
  int rel_clip = 0;
};

inline int relative_slot(Eigen::Index i, Eigen::Index j, int clip) {
  const auto d = static_cast<int>(j - i);
  return std::clamp(d, -clip, clip) + clip;
}

inline void softmax_rows_inplace(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

// Multi-head scaled dot-product attention over already-projected q (Tq x D),
// k and v (Tk x D). With relative tables (each (2*rel_clip+1) x D/heads, shared
// across heads) the logits gain q_i . rk[j-i] and the values gain rv[j-i].
// `weights_out`, when given, receives one Tq x Tk attention matrix per head.
inline Var attention(const Var& q, const Var& k, const Var& v, const AttentionOptions& opt,
                     const Var* rel_key = nullptr, const Var* rel_value = nullptr,
                     std::vector<Matrix>* weights_out = nullptr) {
  const Eigen::Index tq = q.rows();
  const Eigen::Index tk = k.rows();
  const Eigen::Index d = q.cols();
  if (opt.heads < 1 || d % opt.heads != 0) throw DimensionMismatch("attention: width not divisible by heads");
  if (k.cols() != d || v.cols() != d || v.rows() != tk) throw DimensionMismatch("attention: q/k/v shapes");
  if (opt.causal && tq != tk) throw DimensionMismatch("attention: causal mask needs square attention");
  const bool relative = rel_key != nullptr;
  if (relative != (rel_value != nullptr)) throw InvalidArgument("attention: relative tables come in pairs");
  const Eigen::Index dh = d / opt.heads;
  const int clip = opt.rel_clip;
  if (relative) {
    if (clip < 1) throw InvalidArgument("attention: rel_clip must be >= 1");
    if (rel_key->rows() != 2 * clip + 1 || rel_key->cols() != dh || rel_value->rows() != 2 * clip + 1 ||
        rel_value->cols() != dh) {
      throw DimensionMismatch("attention: relative table shape");
    }
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  const Eigen::Index slots = relative ? 2 * clip + 1 : 0;

  std::vector<Matrix> weights(static_cast<std::size_t>(opt.heads));
  Matrix out(tq, d);
  for (int h = 0; h < opt.heads; ++h) {
    const auto qh = q.value().middleCols(h * dh, dh);
    const auto kh = k.value().middleCols(h * dh, dh);
    const auto vh = v.value().middleCols(h * dh, dh);
    Matrix s = (qh * kh.transpose()) * inv;
    if (relative) {
      const Matrix qr = (qh * rel_key->value().transpose()) * inv;
      for (Eigen::Index i = 0; i < tq; ++i)
        for (Eigen::Index j = 0; j < tk; ++j) s(i, j) += qr(i, relative_slot(i, j, clip));
    }
    if (opt.causal) {
      for (Eigen::Index i = 0; i < tq; ++i)
        for (Eigen::Index j = i + 1; j < tk; ++j) s(i, j) = -std::numeric_limits<double>::infinity();
    }
    softmax_rows_inplace(s);
    Matrix oh = s * vh;
    if (relative) {
      Matrix arel = Matrix::Zero(tq, slots);
      for (Eigen::Index i = 0; i < tq; ++i)
        for (Eigen::Index j = 0; j < tk; ++j) arel(i, relative_slot(i, j, clip)) += s(i, j);
      oh += arel * rel_value->value();
    }
    out.middleCols(h * dh, dh) = oh;
    weights[static_cast<std::size_t>(h)] = std::move(s);
  }
  if (weights_out) *weights_out = weights;

  Var rk = relative ? *rel_key : Var();
  Var rv = relative ? *rel_value : Var();
  auto fn = [q, k, v, rk, rv, relative, clip, slots, inv, dh, heads = opt.heads,
             weights = std::move(weights)](Node& self) {
    const Eigen::Index tq = q.rows();
    const Eigen::Index tk = k.rows();
    Matrix dq = Matrix::Zero(tq, q.cols());
    Matrix dk = Matrix::Zero(tk, k.cols());
    Matrix dv = Matrix::Zero(tk, v.cols());
    Matrix drk = relative ? Matrix::Zero(slots, dh) : Matrix();
    Matrix drv = relative ? Matrix::Zero(slots, dh) : Matrix();
    for (int h = 0; h < heads; ++h) {
      const Matrix& a = weights[static_cast<std::size_t>(h)];
      const auto qh = q.value().middleCols(h * dh, dh);
      const auto kh = k.value().middleCols(h * dh, dh);
      const auto vh = v.value().middleCols(h * dh, dh);
      const auto gh = self.grad.middleCols(h * dh, dh);
      Matrix da = gh * vh.transpose();
      dv.middleCols(h * dh, dh) += a.transpose() * gh;
      if (relative) {
        const Matrix gr = gh * rv.value().transpose();
        Matrix arel = Matrix::Zero(tq, slots);
        for (Eigen::Index i = 0; i < tq; ++i) {
          for (Eigen::Index j = 0; j < tk; ++j) {
            const int r = relative_slot(i, j, clip);
            da(i, j) += gr(i, r);
            arel(i, r) += a(i, j);
          }
        }
        drv += arel.transpose() * gh;
      }
      Matrix ds(tq, tk);
      for (Eigen::Index i = 0; i < tq; ++i) {
        const double dot = a.row(i).dot(da.row(i));
        ds.row(i) = a.row(i).cwiseProduct((da.row(i).array() - dot).matrix());
      }
      dq.middleCols(h * dh, dh) += (ds * kh) * inv;
      dk.middleCols(h * dh, dh) += (ds.transpose() * qh) * inv;
      if (relative) {
        Matrix dsrel = Matrix::Zero(tq, slots);
        for (Eigen::Index i = 0; i < tq; ++i)
          for (Eigen::Index j = 0; j < tk; ++j) dsrel(i, relative_slot(i, j, clip)) += ds(i, j);
        dq.middleCols(h * dh, dh) += (dsrel * rk.value()) * inv;
        drk += (dsrel.transpose() * qh) * inv;
      }
    }
    detail::accumulate(q, dq);
    detail::accumulate(k, dk);
    detail::accumulate(v, dv);
    if (relative) {
      detail::accumulate(rk, drk);
      detail::accumulate(rv, drv);
    }
  };
  if (relative) {
    // make_op takes a fixed input list; relative tables join it here
    return detail::make_op(std::move(out), {&q, &k, &v, rel_key, rel_value}, std::move(fn));
  }
  return detail::make_op(std::move(out), {&q, &k, &v}, std::move(fn));
}

// One graph-attention head. `h` holds F frames of N joint feature rows
// ((F*N) x J), `attn` is the 1 x 2J attention vector [a_src | a_dst]. Joint i
// scores neighbour j with LeakyReLU(a_src.h_i + a_dst.h_j), softmaxes over
// adjacency row i and aggregates the neighbours' rows.
// `weights_out` receives (F*N) x N attention rows (zeros off the adjacency).
inline Var graph_attention(const Var& h, const Var& attn, const Adjacency& adj, double slope,
                           Matrix* weights_out = nullptr) {
  const Eigen::Index n = adj.rows();
  const Eigen::Index feat = h.cols();
  if (adj.cols() != n || n == 0 || h.rows() % n != 0) throw DimensionMismatch("graph_attention: adjacency vs rows");
  if (attn.rows() != 1 || attn.cols() != 2 * feat) throw DimensionMismatch("graph_attention: attention vector width");
  const Eigen::Index frames = h.rows() / n;
  const auto a_src = attn.value().leftCols(feat);
  const auto a_dst = attn.value().rightCols(feat);
  const Eigen::VectorXd sl = h.value() * a_src.transpose();
  const Eigen::VectorXd sr = h.value() * a_dst.transpose();

  Matrix alpha = Matrix::Zero(h.rows(), n);
  Matrix out(h.rows(), feat);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index base = f * n;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!adj(i, j)) continue;
        const double e = sl(base + i) + sr(base + j);
        const double score = e > 0.0 ? e : slope * e;
        alpha(base + i, j) = score;
        mx = std::max(mx, score);
      }
      double z = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!adj(i, j)) continue;
        alpha(base + i, j) = std::exp(alpha(base + i, j) - mx);
        z += alpha(base + i, j);
      }
      alpha.row(base + i) /= z;
    }
    out.middleRows(base, n) = alpha.middleRows(base, n) * h.value().middleRows(base, n);
  }
  if (weights_out) *weights_out = alpha;

  return detail::make_op(std::move(out), {&h, &attn},
                         [h, attn, adj, slope, alpha = std::move(alpha), sl, sr, n, frames,
                          feat](Node& self) {
                           Matrix dh = Matrix::Zero(h.rows(), feat);
                           Eigen::VectorXd dsl = Eigen::VectorXd::Zero(h.rows());
                           Eigen::VectorXd dsr = Eigen::VectorXd::Zero(h.rows());
                           for (Eigen::Index f = 0; f < frames; ++f) {
                             const Eigen::Index base = f * n;
                             const auto hf = h.value().middleRows(base, n);
                             const auto gf = self.grad.middleRows(base, n);
                             const auto af = alpha.middleRows(base, n);
                             dh.middleRows(base, n) += af.transpose() * gf;
                             const Matrix da = gf * hf.transpose();
                             for (Eigen::Index i = 0; i < n; ++i) {
                               const double dot = af.row(i).dot(da.row(i));
                               for (Eigen::Index j = 0; j < n; ++j) {
                                 if (!adj(i, j)) continue;
                                 const double de = af(i, j) * (da(i, j) - dot);
                                 const double e = sl(base + i) + sr(base + j);
                                 const double dpre = e > 0.0 ? de : slope * de;
                                 dsl(base + i) += dpre;
                                 dsr(base + j) += dpre;
                               }
                             }
                           }
                           const auto a_src = attn.value().leftCols(feat);
                           const auto a_dst = attn.value().rightCols(feat);
                           if (h.requires_grad()) {
                             dh += dsl * a_src + dsr * a_dst;
                             detail::accumulate(h, dh);
                           }
                           if (attn.requires_grad()) {
                             Matrix da(1, 2 * feat);
                             da.leftCols(feat) = dsl.transpose() * h.value();
                             da.rightCols(feat) = dsr.transpose() * h.value();
                             detail::accumulate(attn, da);
                           }
                         });
}

}  // namespace posetraj::ad
