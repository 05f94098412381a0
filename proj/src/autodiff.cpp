#include "hgre/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace hgre::ad {

Parameter* ParamStore::create(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw std::logic_error("parameter already exists: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Mat::Zero(rows, cols);
  p->grad = Mat::Zero(rows, cols);
  Parameter* raw = p.get();
  params_.push_back(std::move(p));
  index_[name] = raw;
  return raw;
}

Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Parameter* ParamStore::require(const std::string& name) const {
  Parameter* p = find(name);
  if (!p) throw std::logic_error("no such parameter: " + name);
  return p;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.setZero();
}

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void init_xavier(Parameter& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / (p.value.rows() + p.value.cols()));
  for (int i = 0; i < p.value.rows(); ++i)
    for (int j = 0; j < p.value.cols(); ++j) p.value(i, j) = rng.uniform_real(-limit, limit);
}

void init_normal(Parameter& p, Rng& rng, double stddev) {
  for (int i = 0; i < p.value.rows(); ++i)
    for (int j = 0; j < p.value.cols(); ++j) p.value(i, j) = stddev * rng.normal();
}

Var Tape::push(Mat value, bool needs_grad, std::function<void(Tape&, int)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Mat v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Parameter* p) {
  Var v = push(p->value, true, [](Tape& t, int id) {
    Node& n = t.nodes_[id];
    n.leaf->grad += n.grad;
  });
  nodes_[v.id].leaf = p;
  return v;
}

void Tape::reset() { nodes_.clear(); }

void Tape::backward(Var loss) {
  if (nodes_[loss.id].value.size() != 1)
    throw std::logic_error("backward: loss must be a 1x1 value");
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.needs_grad && n.backprop) n.backprop(*this, id);
  }
}

Var Tape::add(Var a, Var b) {
  Mat out = val(a) + val(b);
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a)) t.grad_ref(a.id) += g;
    if (t.needs(b)) t.grad_ref(b.id) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  Mat out = val(a) - val(b);
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a)) t.grad_ref(a.id) += g;
    if (t.needs(b)) t.grad_ref(b.id) -= g;
  });
}

Var Tape::cmul(Var a, Var b) {
  Mat out = val(a).cwiseProduct(val(b));
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a)) t.grad_ref(a.id) += g.cwiseProduct(t.val(b));
    if (t.needs(b)) t.grad_ref(b.id) += g.cwiseProduct(t.val(a));
  });
}

Var Tape::scale(Var a, double s) {
  Mat out = val(a) * s;
  return push(std::move(out), needs(a), [a, s](Tape& t, int id) {
    if (t.needs(a)) t.grad_ref(a.id) += s * t.grad_ref(id);
  });
}

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  Mat out;
  if (!trans_a && !trans_b) out.noalias() = A * B;
  else if (trans_a && !trans_b) out.noalias() = A.transpose() * B;
  else if (!trans_a && trans_b) out.noalias() = A * B.transpose();
  else out.noalias() = A.transpose() * B.transpose();
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b, trans_a, trans_b](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    const Mat& A = t.val(a);
    const Mat& B = t.val(b);
    if (t.needs(a)) {
      Mat& da = t.grad_ref(a.id);
      if (!trans_a && !trans_b) da.noalias() += g * B.transpose();
      else if (trans_a && !trans_b) da.noalias() += B * g.transpose();
      else if (!trans_a && trans_b) da.noalias() += g * B;
      else da.noalias() += B.transpose() * g.transpose();
    }
    if (t.needs(b)) {
      Mat& db = t.grad_ref(b.id);
      if (!trans_a && !trans_b) db.noalias() += A.transpose() * g;
      else if (trans_a && !trans_b) db.noalias() += A * g;
      else if (!trans_a && trans_b) db.noalias() += g.transpose() * A;
      else db.noalias() += g.transpose() * A.transpose();
    }
  });
}

Var Tape::add_rowvec(Var a, Var row) {
  Mat out = val(a).rowwise() + val(row).row(0);
  const bool ng = needs(a) || needs(row);
  return push(std::move(out), ng, [a, row](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a)) t.grad_ref(a.id) += g;
    if (t.needs(row)) t.grad_ref(row.id) += g.colwise().sum();
  });
}

Var Tape::mul_colvec(Var a, Var col) {
  Mat out = val(a).array().colwise() * val(col).col(0).array();
  const bool ng = needs(a) || needs(col);
  return push(std::move(out), ng, [a, col](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a))
      t.grad_ref(a.id).array() += g.array().colwise() * t.val(col).col(0).array();
    if (t.needs(col))
      t.grad_ref(col.id).col(0) += g.cwiseProduct(t.val(a)).rowwise().sum();
  });
}

Var Tape::scale_by(Var a, Var s) {
  Mat out = val(a) * val(s)(0, 0);
  const bool ng = needs(a) || needs(s);
  return push(std::move(out), ng, [a, s](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(a)) t.grad_ref(a.id) += t.val(s)(0, 0) * g;
    if (t.needs(s)) t.grad_ref(s.id)(0, 0) += g.cwiseProduct(t.val(a)).sum();
  });
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  const long rows = val(xs[0]).rows();
  long cols = 0;
  bool ng = false;
  for (Var x : xs) {
    cols += val(x).cols();
    ng = ng || needs(x);
  }
  Mat out(rows, cols);
  long at = 0;
  for (Var x : xs) {
    out.middleCols(at, val(x).cols()) = val(x);
    at += val(x).cols();
  }
  return push(std::move(out), ng, [xs](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    long at = 0;
    for (Var x : xs) {
      const long w = t.val(x).cols();
      if (t.needs(x)) t.grad_ref(x.id) += g.middleCols(at, w);
      at += w;
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
  const long cols = val(xs[0]).cols();
  long rows = 0;
  bool ng = false;
  for (Var x : xs) {
    rows += val(x).rows();
    ng = ng || needs(x);
  }
  Mat out(rows, cols);
  long at = 0;
  for (Var x : xs) {
    out.middleRows(at, val(x).rows()) = val(x);
    at += val(x).rows();
  }
  return push(std::move(out), ng, [xs](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    long at = 0;
    for (Var x : xs) {
      const long h = t.val(x).rows();
      if (t.needs(x)) t.grad_ref(x.id) += g.middleRows(at, h);
      at += h;
    }
  });
}

Var Tape::slice_cols(Var a, int start, int n) {
  Mat out = val(a).middleCols(start, n);
  return push(std::move(out), needs(a), [a, start, n](Tape& t, int id) {
    if (t.needs(a)) t.grad_ref(a.id).middleCols(start, n) += t.grad_ref(id);
  });
}

Var Tape::slice_rows(Var a, int start, int n) {
  Mat out = val(a).middleRows(start, n);
  return push(std::move(out), needs(a), [a, start, n](Tape& t, int id) {
    if (t.needs(a)) t.grad_ref(a.id).middleRows(start, n) += t.grad_ref(id);
  });
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  Mat out(static_cast<long>(idx.size()), val(a).cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<long>(i)) = val(a).row(idx[i]);
  return push(std::move(out), needs(a), [a, idx = std::move(idx)](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& g = t.grad_ref(id);
    Mat& da = t.grad_ref(a.id);
    for (size_t i = 0; i < idx.size(); ++i) da.row(idx[i]) += g.row(static_cast<long>(i));
  });
}

Var Tape::tanh(Var a) {
  Mat out = val(a).array().tanh();
  return push(std::move(out), needs(a), [a](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& y = t.nodes_[id].value;
    t.grad_ref(a.id).array() += t.grad_ref(id).array() * (1.0 - y.array().square());
  });
}

Var Tape::gelu(Var a) {
  const Mat& x = val(a);
  Mat out = x.array() * (0.5 * (1.0 + (x.array() / std::sqrt(2.0)).erf()));
  return push(std::move(out), needs(a), [a](Tape& t, int id) {
    if (!t.needs(a)) return;
    const auto x = t.val(a).array();
    const auto cdf = 0.5 * (1.0 + (x / std::sqrt(2.0)).erf());
    const auto pdf = (-0.5 * x.square()).exp() / std::sqrt(2.0 * M_PI);
    t.grad_ref(a.id).array() += t.grad_ref(id).array() * (cdf + x * pdf);
  });
}

Var Tape::sigmoid(Var a) {
  Mat out = 1.0 / (1.0 + (-val(a).array()).exp());
  return push(std::move(out), needs(a), [a](Tape& t, int id) {
    if (!t.needs(a)) return;
    const auto y = t.nodes_[id].value.array();
    t.grad_ref(a.id).array() += t.grad_ref(id).array() * y * (1.0 - y);
  });
}

Var Tape::softmax_rows(Var a) {
  Mat out = val(a);
  for (long r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return push(std::move(out), needs(a), [a](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& y = t.nodes_[id].value;
    const Mat& g = t.grad_ref(id);
    Mat& da = t.grad_ref(a.id);
    for (long r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      da.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Mat& X = val(x);
  const long d = X.cols();
  Mat xhat(X.rows(), d);
  Eigen::VectorXd inv_std(X.rows());
  for (long r = 0; r < X.rows(); ++r) {
    const double mu = X.row(r).mean();
    const double var = (X.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (X.row(r).array() - mu) * inv_std(r);
  }
  Mat out = (xhat.array().rowwise() * val(gamma).row(0).array()).rowwise() +
            val(beta).row(0).array();
  const bool ng = needs(x) || needs(gamma) || needs(beta);
  return push(std::move(out), ng,
              [x, gamma, beta, xhat = std::move(xhat),
               inv_std = std::move(inv_std)](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    if (t.needs(beta)) t.grad_ref(beta.id) += g.colwise().sum();
    if (t.needs(gamma)) t.grad_ref(gamma.id) += g.cwiseProduct(xhat).colwise().sum();
    if (t.needs(x)) {
      using RowArr = Eigen::Array<double, 1, Eigen::Dynamic>;
      Mat& dx = t.grad_ref(x.id);
      const RowArr gam = t.val(gamma).row(0).array();
      for (long r = 0; r < g.rows(); ++r) {
        const RowArr dxhat = g.row(r).array() * gam;
        const RowArr xh = xhat.row(r).array();
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat = (dxhat * xh).mean();
        dx.row(r).array() += inv_std(r) * (dxhat - mean_dxhat - xh * mean_dxhat_xhat);
      }
    }
  });
}

Var Tape::segment_softmax(Var a, std::vector<int> seg_of_row, int nseg) {
  const Mat& A = val(a);
  Mat out = A;
  std::vector<double> seg_max(nseg, -std::numeric_limits<double>::infinity());
  std::vector<double> seg_sum(nseg, 0.0);
  const long n = A.rows();
  for (long r = 0; r < n; ++r) seg_max[seg_of_row[r]] = std::max(seg_max[seg_of_row[r]], A(r, 0));
  for (long r = 0; r < n; ++r) {
    out(r, 0) = std::exp(A(r, 0) - seg_max[seg_of_row[r]]);
    seg_sum[seg_of_row[r]] += out(r, 0);
  }
  for (long r = 0; r < n; ++r) out(r, 0) /= seg_sum[seg_of_row[r]];
  return push(std::move(out), needs(a),
              [a, seg_of_row = std::move(seg_of_row), nseg](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& y = t.nodes_[id].value;
    const Mat& g = t.grad_ref(id);
    std::vector<double> seg_dot(nseg, 0.0);
    const long n = y.rows();
    for (long r = 0; r < n; ++r) seg_dot[seg_of_row[r]] += g(r, 0) * y(r, 0);
    Mat& da = t.grad_ref(a.id);
    for (long r = 0; r < n; ++r)
      da(r, 0) += y(r, 0) * (g(r, 0) - seg_dot[seg_of_row[r]]);
  });
}

Var Tape::segment_sum(Var a, std::vector<int> seg_of_row, int nseg) {
  const Mat& A = val(a);
  Mat out = Mat::Zero(nseg, A.cols());
  for (long r = 0; r < A.rows(); ++r) out.row(seg_of_row[r]) += A.row(r);
  return push(std::move(out), needs(a),
              [a, seg_of_row = std::move(seg_of_row)](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& g = t.grad_ref(id);
    Mat& da = t.grad_ref(a.id);
    for (long r = 0; r < da.rows(); ++r) da.row(r) += g.row(seg_of_row[r]);
  });
}

Var Tape::segment_max(Var a, std::vector<int> seg_of_row, int nseg) {
  const Mat& A = val(a);
  const long d = A.cols();
  Mat out = Mat::Constant(nseg, d, -std::numeric_limits<double>::infinity());
  Eigen::MatrixXi argmax = Eigen::MatrixXi::Constant(nseg, d, -1);
  for (long r = 0; r < A.rows(); ++r) {
    const int s = seg_of_row[r];
    for (long c = 0; c < d; ++c) {
      if (A(r, c) > out(s, c)) {
        out(s, c) = A(r, c);
        argmax(s, c) = static_cast<int>(r);
      }
    }
  }
  // Segments with no rows pool to zero.
  for (long s = 0; s < nseg; ++s)
    for (long c = 0; c < d; ++c)
      if (argmax(s, c) < 0) out(s, c) = 0.0;
  return push(std::move(out), needs(a), [a, argmax = std::move(argmax)](Tape& t, int id) {
    if (!t.needs(a)) return;
    const Mat& g = t.grad_ref(id);
    Mat& da = t.grad_ref(a.id);
    for (long s = 0; s < g.rows(); ++s)
      for (long c = 0; c < g.cols(); ++c)
        if (argmax(s, c) >= 0) da(argmax(s, c), c) += g(s, c);
  });
}

Var Tape::bilinear(Var u, Var v, Var w, int k) {
  const Mat& U = val(u);
  const Mat& V = val(v);
  const Mat& W = val(w);
  const long S = U.rows();
  const long q = V.cols();
  if (W.cols() != k * q) throw std::logic_error("bilinear: w must be p x (k*q)");
  Mat T;
  T.noalias() = U * W;  // S x (k*q)
  Mat out(S, k);
  for (long s = 0; s < S; ++s) {
    for (int i = 0; i < k; ++i) {
      out(s, i) = T.row(s).segment(static_cast<long>(i) * q, q).dot(V.row(s));
    }
  }
  const bool ng = needs(u) || needs(v) || needs(w);
  return push(std::move(out), ng, [u, v, w, k, T = std::move(T)](Tape& t, int id) {
    const Mat& g = t.grad_ref(id);
    const Mat& U = t.val(u);
    const Mat& V = t.val(v);
    const Mat& W = t.val(w);
    const long S = U.rows();
    const long q = V.cols();
    Mat dT = Mat::Zero(S, static_cast<long>(k) * q);
    for (long s = 0; s < S; ++s) {
      for (int i = 0; i < k; ++i) {
        dT.row(s).segment(static_cast<long>(i) * q, q) += g(s, i) * V.row(s);
      }
    }
    if (t.needs(v)) {
      Mat& dv = t.grad_ref(v.id);
      for (long s = 0; s < S; ++s)
        for (int i = 0; i < k; ++i)
          dv.row(s) += g(s, i) * T.row(s).segment(static_cast<long>(i) * q, q);
    }
    if (t.needs(u)) t.grad_ref(u.id).noalias() += dT * W.transpose();
    if (t.needs(w)) t.grad_ref(w.id).noalias() += U.transpose() * dT;
  });
}

Var Tape::sum_all(Var a) {
  Mat out(1, 1);
  out(0, 0) = val(a).sum();
  return push(std::move(out), needs(a), [a](Tape& t, int id) {
    if (t.needs(a)) t.grad_ref(a.id).array() += t.grad_ref(id)(0, 0);
  });
}

Var Tape::mean_bce_with_logits(Var logits, Mat targets) {
  const Mat& Z = val(logits);
  const long S = Z.rows();
  double loss = 0.0;
  for (long i = 0; i < S; ++i) {
    const double z = Z(i, 0);
    // max(z,0) - z*t + log(1 + exp(-|z|))
    loss += std::max(z, 0.0) - z * targets(i, 0) + std::log1p(std::exp(-std::abs(z)));
  }
  Mat out(1, 1);
  out(0, 0) = loss / static_cast<double>(S);
  return push(std::move(out), needs(logits),
              [logits, targets = std::move(targets)](Tape& t, int id) {
    if (!t.needs(logits)) return;
    const Mat& Z = t.val(logits);
    const long S = Z.rows();
    const double g = t.grad_ref(id)(0, 0) / static_cast<double>(S);
    Mat& dz = t.grad_ref(logits.id);
    for (long i = 0; i < S; ++i) {
      const double sig = 1.0 / (1.0 + std::exp(-Z(i, 0)));
      dz(i, 0) += g * (sig - targets(i, 0));
    }
  });
}

Var Tape::sum_xent_with_logits(Var logits, std::vector<int> labels) {
  const Mat& Z = val(logits);
  double loss = 0.0;
  for (long r = 0; r < Z.rows(); ++r) {
    const double m = Z.row(r).maxCoeff();
    const double lse = m + std::log((Z.row(r).array() - m).exp().sum());
    loss += lse - Z(r, labels[r]);
  }
  Mat out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out), needs(logits),
              [logits, labels = std::move(labels)](Tape& t, int id) {
    if (!t.needs(logits)) return;
    const Mat& Z = t.val(logits);
    const double g = t.grad_ref(id)(0, 0);
    Mat& dz = t.grad_ref(logits.id);
    for (long r = 0; r < Z.rows(); ++r) {
      const double m = Z.row(r).maxCoeff();
      Eigen::ArrayXd p = (Z.row(r).array() - m).exp();
      p /= p.sum();
      dz.row(r).array() += g * p.transpose();
      dz(r, labels[r]) -= g;
    }
  });
}

void Adam::add_group(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    Slot s;
    s.p = p;
    s.m = Mat::Zero(p->value.rows(), p->value.cols());
    s.v = Mat::Zero(p->value.rows(), p->value.cols());
    s.lr = lr;
    slots_.push_back(std::move(s));
  }
}

void Adam::step(double lr_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& s : slots_) {
    s.m = beta1_ * s.m + (1.0 - beta1_) * s.p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * s.p->grad.cwiseProduct(s.p->grad);
    const double lr = s.lr * lr_scale;
    s.p->value.array() -=
        lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps_);
    s.p->grad.setZero();
  }
}

double linear_schedule(long step, long total_steps, double warmup_ratio) {
  const long warmup = std::max<long>(1, static_cast<long>(warmup_ratio * total_steps));
  if (step < warmup) return static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total_steps <= warmup) return 1.0;
  const double rest = static_cast<double>(total_steps - step) /
                      static_cast<double>(total_steps - warmup);
  return std::max(0.0, rest);
}

}  // namespace hgre::ad
