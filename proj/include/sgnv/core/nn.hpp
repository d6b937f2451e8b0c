#pragma once

#include <map>
#include <string>

#include "sgnv/core/ops.hpp"
#include "sgnv/core/rng.hpp"

namespace sgnv {

/// Named trainable parameters, iterated in insertion order so the optimizer
/// and checkpoints are deterministic.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init) {
    if (index_.count(name))
      throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    Var v = make_leaf(std::move(init), true);
    index_[name] = params_.size();
    params_.emplace_back(name, v);
    return v;
  }

  Var get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::out_of_range("ParamStore: unknown parameter " + name);
    return params_[it->second].second;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::pair<std::string, Var>>& all() const {
    return params_;
  }

  void zero_grads() {
    for (auto& [name, v] : params_) v->zero_grad();
  }

  int64_t count_scalars() const {
    int64_t n = 0;
    for (auto& [name, v] : params_) n += v->val.size();
    return n;
  }

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::map<std::string, size_t> index_;
};

inline Tensor init_uniform(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

inline Tensor init_normal(std::vector<int> shape, double sd, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sd);
  return t;
}

/// Fully connected layer, x [n,in] -> [n,out].
struct Linear {
  Var w, b;

  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng) {
    double bound = std::sqrt(1.0 / double(in));
    w = ps.add(name + ".w", init_uniform({in, out}, bound, rng));
    b = ps.add(name + ".b", Tensor({1, out}));
  }

  Var operator()(const Var& x) const { return add_rowvec(matmul(x, w), b); }
};

/// 2-d convolution layer (square kernel, zero padding).
struct Conv {
  Var w, b;
  int stride = 1, pad = 0;

  Conv() = default;
  Conv(ParamStore& ps, const std::string& name, int in_ch, int out_ch, int k,
       int stride_, int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    double bound = std::sqrt(1.0 / double(in_ch * k * k));
    w = ps.add(name + ".w", init_uniform({out_ch, in_ch, k, k}, bound, rng));
    b = ps.add(name + ".b", Tensor({out_ch}));
  }

  Var operator()(const Var& x) const { return conv2d(x, w, b, stride, pad); }
};

struct LayerNorm {
  Var gain, bias;

  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int d) {
    gain = ps.add(name + ".gain", Tensor::full({1, d}, 1.0));
    bias = ps.add(name + ".bias", Tensor({1, d}));
  }

  Var operator()(const Var& x) const { return layer_norm_rows(x, gain, bias); }
};

/// Adam with bias correction; state is per-parameter, keyed by store order.
class Adam {
 public:
  explicit Adam(ParamStore& ps, double lr = 1e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : ps_(ps), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& [name, v] : ps.all()) {
      m_.emplace_back(v->val.shape());
      v_.emplace_back(v->val.shape());
    }
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    size_t k = 0;
    for (auto& [name, p] : ps_.all()) {
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      ++k;
      if (p->grad.size() != p->val.size()) continue;  // untouched this step
      for (int64_t i = 0; i < p->val.size(); ++i) {
        double g = p->grad[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        p->val[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      }
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  ParamStore& ps_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace sgnv
