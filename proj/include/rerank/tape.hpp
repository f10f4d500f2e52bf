#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rerank/errors.hpp"
#include "rerank/optim.hpp"
#include "rerank/tensor.hpp"

namespace rerank {

class Graph;

// Handle to a node on a Graph. Cheap to copy; valid as long as the graph
// lives.
class Value {
 public:
  Value() = default;
  Value(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. A graph records one forward computation and is torn
// down afterwards; parameters are referenced in place, never copied.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value input(Tensor t) {
    return Value(this, add_node(std::move(t)));
  }

  Value scalar(double v) { return input(Tensor::scalar(v)); }

  // Leaf bound to a named parameter; gradients flow back into the store.
  Value param(ParamStore& store, const std::string& name) {
    const std::size_t id = add_node(Tensor());
    Node& n = nodes_[id];
    n.view = &store.value(name);
    n.store = &store;
    n.pname = name;
    n.pull = [](Graph& g, std::size_t self) {
      Node& node = g.nodes_[self];
      node.store->accumulate_grad(node.pname, g.grad(self));
    };
    stores_.insert(&store);
    return Value(this, id);
  }

  // Row lookup into a table parameter. The gradient is scattered straight
  // into the store so the table itself never enters the tape densely.
  Value embed(ParamStore& store, const std::string& name, std::size_t row) {
    const Tensor& table = store.value(name);
    if (row >= table.rows()) {
      throw DataError("embedding id " + std::to_string(row) +
                      " out of vocabulary for '" + name + "' (" +
                      std::to_string(table.rows()) + " rows)");
    }
    Tensor out(1, table.cols());
    std::copy_n(table.data() + row * table.cols(), table.cols(), out.data());
    const std::size_t id = add_node(std::move(out));
    Node& n = nodes_[id];
    n.store = &store;
    n.pname = name;
    n.embed_row = row;
    n.pull = [](Graph& g, std::size_t self) {
      Node& node = g.nodes_[self];
      node.store->accumulate_grad_row(node.pname, node.embed_row,
                                      g.grad(self));
    };
    stores_.insert(&store);
    return Value(this, id);
  }

  const Tensor& value_of(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.view ? *n.view : n.owned;
  }

  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }

  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  Tensor& grad_mut(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
      const Tensor& v = value_of(id);
      n.grad = Tensor(v.rows(), v.cols());
    }
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
  // order. Parameter leaves accumulate into their stores; parameters no
  // recorded computation reached get zero gradients.
  void backward(Value loss) {
    if (loss.graph() != this) {
      throw UsageError("backward: value was not produced by this graph");
    }
    if (swept_) {
      throw UsageError("backward: graph already swept; record a new forward "
                       "pass");
    }
    const Tensor& v = value_of(loss.id());
    if (v.rows() != 1 || v.cols() != 1) {
      throw UsageError("backward: loss must be a 1x1 scalar, got " +
                       v.shape_str());
    }
    swept_ = true;
    grad_mut(loss.id()).at(0, 0) = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.pull && !n.grad.empty()) n.pull(*this, i);
    }
    for (ParamStore* s : stores_) s->fill_missing_grads();
  }

  std::size_t node_count() const { return nodes_.size(); }

  using PullFn = std::function<void(Graph&, std::size_t)>;

  Value make(Tensor value, PullFn pull) {
    const std::size_t id = add_node(std::move(value));
    nodes_[id].pull = std::move(pull);
    return Value(this, id);
  }

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;  // parameter leaves alias the store
    Tensor grad;
    PullFn pull;
    ParamStore* store = nullptr;
    std::string pname;
    std::size_t embed_row = 0;
  };

  std::size_t add_node(Tensor t) {
    nodes_.push_back(Node{std::move(t), nullptr, Tensor(), nullptr, nullptr,
                          std::string(), 0});
    return nodes_.size() - 1;
  }

  std::vector<Node> nodes_;
  std::set<ParamStore*> stores_;
  bool swept_ = false;
};

inline const Tensor& Value::value() const {
  if (!graph_) throw UsageError("Value: empty handle");
  return graph_->value_of(id_);
}

namespace detail {

inline Graph& same_graph(Value a, Value b) {
  if (!a.valid() || a.graph() != b.graph()) {
    throw UsageError("operands belong to different graphs");
  }
  return *a.graph();
}

}  // namespace detail

// ---- recorded operations ----

inline Value matmul(Value a, Value b) {
  Graph& g = detail::same_graph(a, b);
  Tensor c = matmul_value(a.value(), b.value());
  return g.make(std::move(c), [ai = a.id(), bi = b.id()](Graph& g,
                                                         std::size_t self) {
    const Tensor& dc = g.grad(self);
    detail::gemm_nt_accum(dc, g.value_of(bi), g.grad_mut(ai));
    detail::gemm_tn_accum(g.value_of(ai), dc, g.grad_mut(bi));
  });
}

inline Value add(Value a, Value b) {
  Graph& g = detail::same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ShapeError("add: shapes differ, " + av.shape_str() + " vs " +
                     bv.shape_str());
  }
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.flat()[i] += bv.flat()[i];
  return g.make(std::move(c), [ai = a.id(), bi = b.id()](Graph& g,
                                                         std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    Tensor& db = g.grad_mut(bi);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += dc.flat()[i];
      db.flat()[i] += dc.flat()[i];
    }
  });
}

inline Value sub(Value a, Value b) {
  Graph& g = detail::same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ShapeError("sub: shapes differ, " + av.shape_str() + " vs " +
                     bv.shape_str());
  }
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.flat()[i] -= bv.flat()[i];
  return g.make(std::move(c), [ai = a.id(), bi = b.id()](Graph& g,
                                                         std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    Tensor& db = g.grad_mut(bi);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += dc.flat()[i];
      db.flat()[i] -= dc.flat()[i];
    }
  });
}

// Hadamard product.
inline Value mul(Value a, Value b) {
  Graph& g = detail::same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    throw ShapeError("mul: shapes differ, " + av.shape_str() + " vs " +
                     bv.shape_str());
  }
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.flat()[i] *= bv.flat()[i];
  return g.make(std::move(c), [ai = a.id(), bi = b.id()](Graph& g,
                                                         std::size_t self) {
    const Tensor& dc = g.grad(self);
    const Tensor& av = g.value_of(ai);
    const Tensor& bv = g.value_of(bi);
    Tensor& da = g.grad_mut(ai);
    Tensor& db = g.grad_mut(bi);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += dc.flat()[i] * bv.flat()[i];
      db.flat()[i] += dc.flat()[i] * av.flat()[i];
    }
  });
}

// Elementwise alpha*x + beta.
inline Value affine(Value a, double alpha, double beta) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = alpha * v + beta;
  return g.make(std::move(c), [ai = a.id(), alpha](Graph& g,
                                                   std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += alpha * dc.flat()[i];
    }
  });
}

// Elementwise multiply by a constant tensor (no gradient into k).
inline Value mul_const(Value a, const Tensor& k) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (!av.same_shape(k)) {
    throw ShapeError("mul_const: shapes differ, " + av.shape_str() + " vs " +
                     k.shape_str());
  }
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.flat()[i] *= k.flat()[i];
  return g.make(std::move(c), [ai = a.id(), k](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += dc.flat()[i] * k.flat()[i];
    }
  });
}

// Adds a 1 x c bias row to every row of a.
inline Value add_rows(Value a, Value bias) {
  Graph& g = detail::same_graph(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_rows: bias " + bv.shape_str() +
                     " does not broadcast over " + av.shape_str());
  }
  Tensor c = av;
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) c.at(i, j) += bv.at(0, j);
  }
  return g.make(std::move(c), [ai = a.id(), bi = bias.id()](
                                  Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    Tensor& db = g.grad_mut(bi);
    for (std::size_t i = 0; i < dc.size(); ++i) da.flat()[i] += dc.flat()[i];
    for (std::size_t i = 0; i < dc.rows(); ++i) {
      for (std::size_t j = 0; j < dc.cols(); ++j) db.at(0, j) += dc.at(i, j);
    }
  });
}

// Repeats a 1 x c row n times.
inline Value repeat_rows(Value a, std::size_t n) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rows() != 1) {
    throw ShapeError("repeat_rows: expected a row vector, got " +
                     av.shape_str());
  }
  Tensor c(n, av.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(av.data(), av.cols(), c.data() + i * av.cols());
  }
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.rows(); ++i) {
      for (std::size_t j = 0; j < dc.cols(); ++j) da.at(0, j) += dc.at(i, j);
    }
  });
}

inline Value concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no operands");
  Graph& g = *parts.front().graph();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Value& p : parts) {
    detail::same_graph(parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row counts differ");
    }
    cols += p.cols();
  }
  Tensor c(rows, cols);
  std::size_t off = 0;
  for (const Value& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(pv.data() + i * pv.cols(), pv.cols(),
                  c.data() + i * cols + off);
    }
    off += pv.cols();
  }
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (const Value& p : parts) ids.push_back(p.id());
  return g.make(std::move(c), [ids](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    std::size_t off = 0;
    for (std::size_t pid : ids) {
      Tensor& dp = g.grad_mut(pid);
      for (std::size_t i = 0; i < dp.rows(); ++i) {
        for (std::size_t j = 0; j < dp.cols(); ++j) {
          dp.at(i, j) += dc.at(i, off + j);
        }
      }
      off += dp.cols();
    }
  });
}

inline Value concat_cols(Value a, Value b) { return concat_cols({a, b}); }

// Stacks 1 x c rows into an n x c matrix.
inline Value stack_rows(const std::vector<Value>& rows) {
  if (rows.empty()) throw UsageError("stack_rows: no operands");
  Graph& g = *rows.front().graph();
  const std::size_t cols = rows.front().cols();
  for (const Value& r : rows) {
    detail::same_graph(rows.front(), r);
    if (r.rows() != 1 || r.cols() != cols) {
      throw ShapeError("stack_rows: operands must be matching row vectors");
    }
  }
  Tensor c(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(rows[i].value().data(), cols, c.data() + i * cols);
  }
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (const Value& r : rows) ids.push_back(r.id());
  return g.make(std::move(c), [ids](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Tensor& dr = g.grad_mut(ids[i]);
      for (std::size_t j = 0; j < dc.cols(); ++j) dr.at(0, j) += dc.at(i, j);
    }
  });
}

inline Value take_cols(Value a, std::size_t start, std::size_t len) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (start + len > av.cols()) {
    throw ShapeError("take_cols: slice out of range");
  }
  Tensor c(av.rows(), len);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    std::copy_n(av.data() + i * av.cols() + start, len, c.data() + i * len);
  }
  return g.make(std::move(c),
                [ai = a.id(), start, len](Graph& g, std::size_t self) {
                  const Tensor& dc = g.grad(self);
                  Tensor& da = g.grad_mut(ai);
                  for (std::size_t i = 0; i < dc.rows(); ++i) {
                    for (std::size_t j = 0; j < len; ++j) {
                      da.at(i, start + j) += dc.at(i, j);
                    }
                  }
                });
}

inline Value take_row(Value a, std::size_t row) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (row >= av.rows()) throw ShapeError("take_row: row out of range");
  Tensor c(1, av.cols());
  std::copy_n(av.data() + row * av.cols(), av.cols(), c.data());
  return g.make(std::move(c), [ai = a.id(), row](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t j = 0; j < dc.cols(); ++j) da.at(row, j) += dc.at(0, j);
  });
}

inline Value pick(Value a, std::size_t row, std::size_t col) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (row >= av.rows() || col >= av.cols()) {
    throw ShapeError("pick: index out of range");
  }
  return g.make(Tensor::scalar(av.at(row, col)),
                [ai = a.id(), row, col](Graph& g, std::size_t self) {
                  g.grad_mut(ai).at(row, col) += g.grad(self).at(0, 0);
                });
}

inline Value transpose(Value a) {
  Graph& g = *a.graph();
  return g.make(a.value().transposed(), [ai = a.id()](Graph& g,
                                                      std::size_t self) {
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.rows(); ++i) {
      for (std::size_t j = 0; j < dc.cols(); ++j) da.at(j, i) += dc.at(i, j);
    }
  });
}

inline Value sigmoid(Value a) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = 1.0 / (1.0 + std::exp(-v));
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& y = g.value_of(self);
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      const double yi = y.flat()[i];
      da.flat()[i] += dc.flat()[i] * yi * (1.0 - yi);
    }
  });
}

inline Value tanh_act(Value a) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = std::tanh(v);
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& y = g.value_of(self);
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      const double yi = y.flat()[i];
      da.flat()[i] += dc.flat()[i] * (1.0 - yi * yi);
    }
  });
}

inline Value relu(Value a) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = v > 0.0 ? v : 0.0;
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& x = g.value_of(ai);
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      if (x.flat()[i] > 0.0) da.flat()[i] += dc.flat()[i];
    }
  });
}

// Natural log; caller guarantees positive input (clip first).
inline Value log_elem(Value a) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = std::log(v);
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& x = g.value_of(ai);
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.flat()[i] += dc.flat()[i] / x.flat()[i];
    }
  });
}

// Clamp; gradient passes only strictly inside the interval.
inline Value clip(Value a, double lo, double hi) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (double& v : c.flat()) v = std::min(hi, std::max(lo, v));
  return g.make(std::move(c),
                [ai = a.id(), lo, hi](Graph& g, std::size_t self) {
                  const Tensor& x = g.value_of(ai);
                  const Tensor& dc = g.grad(self);
                  Tensor& da = g.grad_mut(ai);
                  for (std::size_t i = 0; i < dc.size(); ++i) {
                    const double xi = x.flat()[i];
                    if (xi > lo && xi < hi) da.flat()[i] += dc.flat()[i];
                  }
                });
}

// Row-wise softmax with max subtraction; every row sums to 1.
inline Value softmax_rows(Value a) {
  Graph& g = *a.graph();
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double mx = c.at(i, 0);
    for (std::size_t j = 1; j < c.cols(); ++j) mx = std::max(mx, c.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      c.at(i, j) = std::exp(c.at(i, j) - mx);
      sum += c.at(i, j);
    }
    for (std::size_t j = 0; j < c.cols(); ++j) c.at(i, j) /= sum;
  }
  return g.make(std::move(c), [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& y = g.value_of(self);
    const Tensor& dc = g.grad(self);
    Tensor& da = g.grad_mut(ai);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) {
        dot += dc.at(i, j) * y.at(i, j);
      }
      for (std::size_t j = 0; j < y.cols(); ++j) {
        da.at(i, j) += y.at(i, j) * (dc.at(i, j) - dot);
      }
    }
  });
}

// Softmax over the unmasked entries of a 1 x m logit row. Masked entries get
// probability zero before normalization, so the remaining entries form a
// proper distribution. Keeps everything finite rather than materializing
// -inf logits.
inline Value masked_softmax_row(Value a, const std::vector<bool>& masked) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rows() != 1) {
    throw ShapeError("masked_softmax_row: expected a row vector, got " +
                     av.shape_str());
  }
  if (masked.size() != av.cols()) {
    throw ShapeError("masked_softmax_row: mask length mismatch");
  }
  std::size_t open = 0;
  double mx = -1e308;
  for (std::size_t j = 0; j < av.cols(); ++j) {
    if (!masked[j]) {
      ++open;
      mx = std::max(mx, av.at(0, j));
    }
  }
  if (open == 0) {
    throw UsageError("masked_softmax_row: all candidates are masked");
  }
  Tensor c(1, av.cols());
  double sum = 0.0;
  for (std::size_t j = 0; j < av.cols(); ++j) {
    if (!masked[j]) {
      c.at(0, j) = std::exp(av.at(0, j) - mx);
      sum += c.at(0, j);
    }
  }
  for (std::size_t j = 0; j < av.cols(); ++j) c.at(0, j) /= sum;
  return g.make(std::move(c),
                [ai = a.id(), masked](Graph& g, std::size_t self) {
                  const Tensor& y = g.value_of(self);
                  const Tensor& dc = g.grad(self);
                  Tensor& da = g.grad_mut(ai);
                  double dot = 0.0;
                  for (std::size_t j = 0; j < y.cols(); ++j) {
                    if (!masked[j]) dot += dc.at(0, j) * y.at(0, j);
                  }
                  for (std::size_t j = 0; j < y.cols(); ++j) {
                    if (!masked[j]) {
                      da.at(0, j) += y.at(0, j) * (dc.at(0, j) - dot);
                    }
                  }
                });
}

inline Value sum_all(Value a) {
  Graph& g = *a.graph();
  double s = 0.0;
  for (double v : a.value().flat()) s += v;
  return g.make(Tensor::scalar(s), [ai = a.id()](Graph& g, std::size_t self) {
    const double d = g.grad(self).at(0, 0);
    Tensor& da = g.grad_mut(ai);
    for (double& v : da.flat()) v += d;
  });
}

inline Value mean_all(Value a) {
  const double inv = 1.0 / static_cast<double>(a.value().size());
  return affine(sum_all(a), inv, 0.0);
}

enum class Activation { sigmoid, tanh, relu, softmax_rows };

inline Value activation(Value a, Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return sigmoid(a);
    case Activation::tanh: return tanh_act(a);
    case Activation::relu: return relu(a);
    case Activation::softmax_rows: return softmax_rows(a);
  }
  throw UsageError("activation: unknown kind");
}

}  // namespace rerank
