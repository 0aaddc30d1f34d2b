// src/graph.h

// Copyright 2026  The bargein Authors

// See ../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BARGEIN_GRAPH_H_
#define BARGEIN_GRAPH_H_

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Graph records every op in creation order; Backward() walks the tape in
// reverse. Parameters live in a ParamStore and are referenced by index, so a
// model is a plain value (store + indices) and can be copied freely. Gradients
// of trainable parameters land in a GradBuffer supplied at Graph construction;
// a Graph built without one is inference-only and records no closures.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bargein::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  bool trainable = true;
};

class ParamStore {
 public:
  // Registers a new parameter; names must be unique.
  int Add(std::string name, Mat init, bool trainable = true);
  // -1 when absent.
  int Find(std::string_view name) const;

  Parameter &at(int i) { return params_.at(i); }
  const Parameter &at(int i) const { return params_.at(i); }
  size_t size() const { return params_.size(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  size_t NumScalars(bool trainable_only = false) const;
  void SetTrainable(std::string_view prefix, bool trainable);

  // FNV-1a over names, shapes and raw values of every parameter whose name
  // starts with prefix.
  uint64_t Hash(std::string_view prefix = {}) const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, int, std::less<>> index_;
};

// Per-parameter gradient accumulators. Slots are allocated on first touch so
// frozen tables never cost memory.
class GradBuffer {
 public:
  explicit GradBuffer(const ParamStore &store);
  Mat &Slot(int i);
  bool Touched(int i) const { return grads_[i].size() > 0; }
  const Mat &at(int i) const { return grads_[i]; }
  size_t size() const { return grads_.size(); }
  void Zero();
  void AddFrom(const GradBuffer &other);
  void Scale(double s);
  double SquaredNorm() const;

 private:
  const ParamStore *store_;
  std::vector<Mat> grads_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  using BackFn = std::function<void(Graph &, int)>;

  explicit Graph(GradBuffer *grads = nullptr) : grads_(grads) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  Var Constant(Mat value);
  // Reads the store value by reference; the store must outlive the graph.
  Var Param(const ParamStore &store, int index);

  const Mat &value(Var v) const;
  const Mat &grad(Var v) const { return nodes_[v.id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool recording() const { return grads_ != nullptr; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1; loss must be 1x1.
  void Backward(Var loss);

  // Op construction interface.
  Var Push(Mat value, std::initializer_list<Var> inputs, BackFn back);
  Var Push(Mat value, std::span<const Var> inputs, BackFn back);
  template <typename Expr>
  void Accumulate(int id, const Expr &g) {
    Node &n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }
  // Adds g into the block of node id's gradient starting at (row, col).
  template <typename Expr>
  void AccumulateBlock(int id, Eigen::Index row, Eigen::Index col, const Expr &g) {
    Node &n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      const Mat &v = value(Var{id});
      n.grad = Mat::Zero(v.rows(), v.cols());
    }
    n.grad.block(row, col, g.rows(), g.cols()) += g;
  }
  const Mat &node_grad(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Mat value;
    const Mat *ref = nullptr;
    Mat grad;
    bool requires_grad = false;
    int param = -1;
    BackFn back;
  };
  std::vector<Node> nodes_;
  GradBuffer *grads_;
};

// Ops. Row vectors are 1xN matrices; sequences are (frames x width).
Var MatMul(Graph &g, Var a, Var b);          // a * b
Var MatMulNT(Graph &g, Var a, Var b);        // a * b^T
Var Linear(Graph &g, Var x, Var w, Var b);   // x * w^T (+ b broadcast over rows)
Var Add(Graph &g, Var a, Var b);
Var Sub(Graph &g, Var a, Var b);
Var Mul(Graph &g, Var a, Var b);             // elementwise
Var Scale(Graph &g, Var a, double s);
Var AddRowBroadcast(Graph &g, Var a, Var row);
Var Tanh(Graph &g, Var a);
Var Sigmoid(Graph &g, Var a);
Var Gelu(Graph &g, Var a);
Var Square(Graph &g, Var a);
Var LogEps(Graph &g, Var a, double eps);     // log(a + eps)
Var SoftmaxRows(Graph &g, Var a);
Var MeanRows(Graph &g, Var a);               // (M x h) -> (1 x h)
Var ConcatCols(Graph &g, std::span<const Var> parts);
Var ConcatCols(Graph &g, std::initializer_list<Var> parts);
Var ConcatRows(Graph &g, std::span<const Var> parts);
Var SliceCols(Graph &g, Var a, int start, int count);
Var GatherRows(Graph &g, Var a, std::vector<int> rows);
Var LayerNorm(Graph &g, Var a, Var gamma, Var beta, double eps = 1e-5);
Var Sum(Graph &g, Var a);                    // -> 1x1
Var SumSquares(Graph &g, Var a);             // -> 1x1
// Negative log softmax probability of `label` for a 1xC logit row.
Var CrossEntropy(Graph &g, Var logits, int label);

Mat Softmax(const Mat &logits_row);

}  // namespace bargein::nn

#endif  // BARGEIN_GRAPH_H_
