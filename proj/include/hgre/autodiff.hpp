#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "hgre/rng.hpp"

namespace hgre::ad {

using Mat = Eigen::MatrixXd;

// A named trainable matrix. Gradients accumulate across tape runs until the
// optimizer consumes them.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
};

class ParamStore {
 public:
  Parameter* create(const std::string& name, int rows, int cols);
  Parameter* find(const std::string& name) const;  // nullptr if absent
  Parameter* require(const std::string& name) const;
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  void zero_grads();
  size_t total_size() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> index_;
};

void init_xavier(Parameter& p, Rng& rng);
void init_normal(Parameter& p, Rng& rng, double stddev);

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Eigen matrices, double precision throughout.
// Build a fresh graph per training example; parameters live in ParamStore
// and survive tape resets.
class Tape {
 public:
  Var constant(Mat v);
  Var zeros(int rows, int cols) { return constant(Mat::Zero(rows, cols)); }
  Var ones(int rows, int cols) { return constant(Mat::Ones(rows, cols)); }
  Var param(Parameter* p);

  const Mat& val(Var v) const { return nodes_[v.id].value; }
  void backward(Var loss);  // loss must be 1x1
  void reset();
  size_t size() const { return nodes_.size(); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);          // elementwise
  Var scale(Var a, double s);
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add_rowvec(Var a, Var row);  // a: n x d, row: 1 x d
  Var mul_colvec(Var a, Var col);  // a: n x d, col: n x 1, broadcast across columns
  Var scale_by(Var a, Var s);      // s: 1 x 1 (learnable scalar gates)
  Var concat_cols(const std::vector<Var>& xs);
  Var concat_rows(const std::vector<Var>& xs);
  Var slice_cols(Var a, int start, int n);
  Var slice_rows(Var a, int start, int n);
  Var gather_rows(Var a, std::vector<int> idx);
  Var tanh(Var a);
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var softmax_rows(Var a);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

  // Segmented ops: seg_of_row maps each row to its segment id in [0, nseg).
  Var segment_softmax(Var a, std::vector<int> seg_of_row, int nseg);  // a: n x 1
  Var segment_sum(Var a, std::vector<int> seg_of_row, int nseg);
  Var segment_max(Var a, std::vector<int> seg_of_row, int nseg);

  // Batched bilinear form: u: S x p, v: S x q, w: p x (k*q), output S x k with
  // out(s,i) = u.row(s) * W_i * v.row(s)^T where W_i = w.middleCols(i*q, q).
  Var bilinear(Var u, Var v, Var w, int k);

  Var sum_all(Var a);  // 1 x 1
  Var mean_bce_with_logits(Var logits, Mat targets);               // logits: S x 1
  Var sum_xent_with_logits(Var logits, std::vector<int> labels);   // logits: R x K

  // affine(x, w, b) = x*w + b with b broadcast over rows
  Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape&, int)> backprop;  // id of this node passed in
    Parameter* leaf = nullptr;
  };

  Var push(Mat value, bool needs_grad, std::function<void(Tape&, int)> backprop);
  Mat& grad_ref(int id) { return nodes_[id].grad; }
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
};

// Adam with parameter groups (distinct base learning rates) and a shared
// step counter for bias correction.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void add_group(const std::vector<Parameter*>& params, double lr);
  void step(double lr_scale = 1.0);  // consumes grads, leaves them zeroed
  long steps_taken() const { return t_; }

 private:
  struct Slot {
    Parameter* p;
    Mat m, v;
    double lr;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Linear warmup then linear decay to zero over total_steps.
double linear_schedule(long step, long total_steps, double warmup_ratio);

}  // namespace hgre::ad
