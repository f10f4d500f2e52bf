#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "rerank/errors.hpp"
#include "rerank/tensor.hpp"

namespace rerank {

// Named parameter set with gradients and Adam state. One store per model;
// iteration order is the map order, which keeps updates deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor init) {
    if (params_.count(name) > 0) {
      throw UsageError("ParamStore: parameter '" + name + "' already exists");
    }
    adam_m_.emplace(name, Tensor(init.rows(), init.cols()));
    adam_v_.emplace(name, Tensor(init.rows(), init.cols()));
    return params_.emplace(name, std::move(init)).first->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  const Tensor& value(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw UsageError("ParamStore: unknown parameter '" + name + "'");
    }
    return it->second;
  }

  Tensor& mutable_value(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw UsageError("ParamStore: unknown parameter '" + name + "'");
    }
    return it->second;
  }

  void accumulate_grad(const std::string& name, const Tensor& g) {
    Tensor& slot = grad_slot(name);
    if (!slot.same_shape(g)) {
      throw ShapeError("ParamStore: gradient shape " + g.shape_str() +
                       " does not match parameter '" + name + "' " +
                       slot.shape_str());
    }
    double* d = slot.data();
    const double* s = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += s[i];
  }

  // Adds g (1 x cols) into one row of the gradient of a table parameter.
  void accumulate_grad_row(const std::string& name, std::size_t row,
                           const Tensor& g) {
    Tensor& slot = grad_slot(name);
    if (row >= slot.rows() || g.rows() != 1 || g.cols() != slot.cols()) {
      throw ShapeError("ParamStore: bad row gradient for '" + name + "'");
    }
    double* d = slot.data() + row * slot.cols();
    const double* s = g.data();
    for (std::size_t i = 0; i < g.cols(); ++i) d[i] += s[i];
  }

  const Tensor* grad(const std::string& name) const {
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &it->second;
  }

  // Creates zero gradients for parameters that none of the recorded
  // computations reached.
  void fill_missing_grads() {
    for (const auto& [name, p] : params_) {
      if (grads_.count(name) == 0) {
        grads_.emplace(name, Tensor(p.rows(), p.cols()));
      }
    }
  }

  void clear_grads() { grads_.clear(); }

  // Standard Adam with bias correction; clears gradients afterwards.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8) {
    for (const auto& [name, p] : params_) {
      if (grads_.count(name) == 0) {
        throw UsageError("ParamStore: adam_step without gradient for '" +
                         name + "'");
      }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (auto& [name, p] : params_) {
      const Tensor& g = grads_.at(name);
      Tensor& m = adam_m_.at(name);
      Tensor& v = adam_v_.at(name);
      double* pd = p.data();
      double* md = m.data();
      double* vd = v.data();
      const double* gd = g.data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        md[i] = beta1 * md[i] + (1.0 - beta1) * gd[i];
        vd[i] = beta2 * vd[i] + (1.0 - beta2) * gd[i] * gd[i];
        const double mhat = md[i] / bc1;
        const double vhat = vd[i] / bc2;
        pd[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
    grads_.clear();
  }

  std::int64_t step() const { return step_; }

  const std::map<std::string, Tensor>& params() const { return params_; }
  const std::map<std::string, Tensor>& grads() const { return grads_; }

  // Parameter values only; optimizer state is not part of a snapshot.
  std::map<std::string, Tensor> snapshot() const { return params_; }

  void restore(const std::map<std::string, Tensor>& snap) {
    for (const auto& [name, t] : snap) {
      mutable_value(name) = t;
    }
  }

  bool values_equal(const ParamStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    auto it = other.params_.begin();
    for (const auto& [name, t] : params_) {
      if (it->first != name || !it->second.same_shape(t)) return false;
      if (it->second.flat() != t.flat()) return false;
      ++it;
    }
    return true;
  }

 private:
  Tensor& grad_slot(const std::string& name) {
    auto pit = params_.find(name);
    if (pit == params_.end()) {
      throw UsageError("ParamStore: gradient for unknown parameter '" + name +
                       "'");
    }
    auto git = grads_.find(name);
    if (git == grads_.end()) {
      git = grads_.emplace(name, Tensor(pit->second.rows(),
                                        pit->second.cols())).first;
    }
    return git->second;
  }

  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> grads_;
  std::map<std::string, Tensor> adam_m_;
  std::map<std::string, Tensor> adam_v_;
  std::int64_t step_ = 0;
};

}  // namespace rerank
