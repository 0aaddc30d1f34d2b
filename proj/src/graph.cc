// src/graph.cc

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

#include "graph.h"

#include <cmath>
#include <cstring>
#include <numbers>

#include "error.h"

namespace bargein::nn {

int ParamStore::Add(std::string name, Mat init, bool trainable) {
  if (index_.count(name))
    throw ValidationError("duplicate parameter name: " + name);
  int id = static_cast<int>(params_.size());
  index_.emplace(name, id);
  params_.push_back(Parameter{std::move(name), std::move(init), trainable});
  return id;
}

int ParamStore::Find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

size_t ParamStore::NumScalars(bool trainable_only) const {
  size_t n = 0;
  for (const auto &p : params_)
    if (!trainable_only || p.trainable) n += p.value.size();
  return n;
}

void ParamStore::SetTrainable(std::string_view prefix, bool trainable) {
  for (auto &p : params_)
    if (std::string_view(p.name).substr(0, prefix.size()) == prefix)
      p.trainable = trainable;
}

namespace {
void Fnv(uint64_t *h, const void *data, size_t n) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < n; ++i) {
    *h ^= p[i];
    *h *= 1099511628211ULL;
  }
}
}  // namespace

uint64_t ParamStore::Hash(std::string_view prefix) const {
  uint64_t h = 14695981039346656037ULL;
  for (const auto &p : params_) {
    if (std::string_view(p.name).substr(0, prefix.size()) != prefix) continue;
    Fnv(&h, p.name.data(), p.name.size());
    int64_t shape[2] = {p.value.rows(), p.value.cols()};
    Fnv(&h, shape, sizeof(shape));
    Fnv(&h, p.value.data(), sizeof(double) * p.value.size());
  }
  return h;
}

GradBuffer::GradBuffer(const ParamStore &store)
    : store_(&store), grads_(store.size()) {}

Mat &GradBuffer::Slot(int i) {
  Mat &g = grads_[i];
  if (g.size() == 0) {
    const Mat &v = store_->at(i).value;
    g = Mat::Zero(v.rows(), v.cols());
  }
  return g;
}

void GradBuffer::Zero() {
  for (auto &g : grads_) g.resize(0, 0);
}

void GradBuffer::AddFrom(const GradBuffer &other) {
  for (size_t i = 0; i < grads_.size(); ++i)
    if (other.Touched(i)) Slot(static_cast<int>(i)) += other.grads_[i];
}

void GradBuffer::Scale(double s) {
  for (auto &g : grads_)
    if (g.size()) g *= s;
}

double GradBuffer::SquaredNorm() const {
  double s = 0.0;
  for (const auto &g : grads_)
    if (g.size()) s += g.squaredNorm();
  return s;
}

Var Graph::Constant(Mat value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::Param(const ParamStore &store, int index) {
  Node n;
  n.ref = &store.at(index).value;
  n.param = index;
  n.requires_grad = grads_ != nullptr && store.at(index).trainable;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Mat &Graph::value(Var v) const {
  const Node &n = nodes_[v.id];
  return n.ref ? *n.ref : n.value;
}

Var Graph::Push(Mat value, std::initializer_list<Var> inputs, BackFn back) {
  return Push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(back));
}

Var Graph::Push(Mat value, std::span<const Var> inputs, BackFn back) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs)
    if (nodes_[in.id].requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::Backward(Var loss) {
  if (value(loss).size() != 1)
    throw ValidationError("Backward() needs a scalar loss");
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = Mat::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node &n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param >= 0) {
      grads_->Slot(n.param) += n.grad;
    } else if (n.back) {
      n.back(*this, i);
    }
  }
}

Var MatMul(Graph &g, Var a, Var b) {
  return g.Push(g.value(a) * g.value(b), {a, b}, [a, b](Graph &g, int self) {
    const Mat &d = g.node_grad(self);
    if (g.requires_grad(a)) g.Accumulate(a.id, d * g.value(b).transpose());
    if (g.requires_grad(b)) g.Accumulate(b.id, g.value(a).transpose() * d);
  });
}

Var MatMulNT(Graph &g, Var a, Var b) {
  return g.Push(g.value(a) * g.value(b).transpose(), {a, b},
                [a, b](Graph &g, int self) {
                  const Mat &d = g.node_grad(self);
                  if (g.requires_grad(a)) g.Accumulate(a.id, d * g.value(b));
                  if (g.requires_grad(b))
                    g.Accumulate(b.id, d.transpose() * g.value(a));
                });
}

Var Linear(Graph &g, Var x, Var w, Var b) {
  Var y = MatMulNT(g, x, w);
  return b.valid() ? AddRowBroadcast(g, y, b) : y;
}

Var Add(Graph &g, Var a, Var b) {
  return g.Push(g.value(a) + g.value(b), {a, b}, [a, b](Graph &g, int self) {
    g.Accumulate(a.id, g.node_grad(self));
    g.Accumulate(b.id, g.node_grad(self));
  });
}

Var Sub(Graph &g, Var a, Var b) {
  return g.Push(g.value(a) - g.value(b), {a, b}, [a, b](Graph &g, int self) {
    g.Accumulate(a.id, g.node_grad(self));
    g.Accumulate(b.id, -g.node_grad(self));
  });
}

Var Mul(Graph &g, Var a, Var b) {
  return g.Push(g.value(a).cwiseProduct(g.value(b)), {a, b},
                [a, b](Graph &g, int self) {
                  const Mat &d = g.node_grad(self);
                  if (g.requires_grad(a)) g.Accumulate(a.id, d.cwiseProduct(g.value(b)));
                  if (g.requires_grad(b)) g.Accumulate(b.id, d.cwiseProduct(g.value(a)));
                });
}

Var Scale(Graph &g, Var a, double s) {
  return g.Push(g.value(a) * s, {a}, [a, s](Graph &g, int self) {
    g.Accumulate(a.id, g.node_grad(self) * s);
  });
}

Var AddRowBroadcast(Graph &g, Var a, Var row) {
  Mat y = g.value(a);
  y.rowwise() += g.value(row).row(0);
  return g.Push(std::move(y), {a, row}, [a, row](Graph &g, int self) {
    const Mat &d = g.node_grad(self);
    g.Accumulate(a.id, d);
    if (g.requires_grad(row)) g.Accumulate(row.id, d.colwise().sum());
  });
}

Var Tanh(Graph &g, Var a) {
  Mat y = g.value(a).array().tanh().matrix();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Mat &y = g.value(Var{self});
    g.Accumulate(a.id, g.node_grad(self).cwiseProduct(
                           (1.0 - y.array().square()).matrix()));
  });
}

Var Sigmoid(Graph &g, Var a) {
  Mat y = (1.0 / (1.0 + (-g.value(a).array()).exp())).matrix();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const auto y = g.value(Var{self}).array();
    g.Accumulate(a.id, (g.node_grad(self).array() * y * (1.0 - y)).matrix());
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Gelu(Graph &g, Var a) {
  const auto x = g.value(a).array();
  Mat y = (0.5 * x * (1.0 + (kGeluC * (x + kGeluA * x.cube())).tanh())).matrix();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const auto x = g.value(a).array();
    auto t = (kGeluC * (x + kGeluA * x.cube())).tanh();
    auto dt = kGeluC * (1.0 + 3.0 * kGeluA * x.square());
    Mat dy = (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * dt).matrix();
    g.Accumulate(a.id, g.node_grad(self).cwiseProduct(dy));
  });
}

Var Square(Graph &g, Var a) {
  return g.Push(g.value(a).array().square().matrix(), {a}, [a](Graph &g, int self) {
    g.Accumulate(a.id, (2.0 * g.node_grad(self).array() * g.value(a).array()).matrix());
  });
}

Var LogEps(Graph &g, Var a, double eps) {
  Mat y = (g.value(a).array() + eps).log().matrix();
  return g.Push(std::move(y), {a}, [a, eps](Graph &g, int self) {
    g.Accumulate(a.id, (g.node_grad(self).array() / (g.value(a).array() + eps)).matrix());
  });
}

Mat Softmax(const Mat &z) {
  Mat y(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    y.row(r) = (z.row(r).array() - mx).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

Var SoftmaxRows(Graph &g, Var a) {
  return g.Push(Softmax(g.value(a)), {a}, [a](Graph &g, int self) {
    const Mat &y = g.value(Var{self});
    const Mat &d = g.node_grad(self);
    Eigen::VectorXd dot = d.cwiseProduct(y).rowwise().sum();
    Mat dx = y.cwiseProduct(d);
    dx -= y.cwiseProduct(dot.replicate(1, y.cols()));
    g.Accumulate(a.id, dx);
  });
}

Var MeanRows(Graph &g, Var a) {
  const Mat &x = g.value(a);
  if (x.rows() == 0) throw ValidationError("mean over an empty sequence");
  Mat y = x.colwise().mean();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    Eigen::Index m = g.value(a).rows();
    g.Accumulate(a.id, g.node_grad(self).replicate(m, 1) / static_cast<double>(m));
  });
}

Var ConcatCols(Graph &g, std::initializer_list<Var> parts) {
  return ConcatCols(g, std::span<const Var>(parts.begin(), parts.size()));
}

Var ConcatCols(Graph &g, std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concatenation of zero parts");
  Eigen::Index rows = g.value(parts[0]).rows(), cols = 0;
  for (Var p : parts) {
    if (g.value(p).rows() != rows)
      throw ValidationError("row count mismatch in concatenation");
    cols += g.value(p).cols();
  }
  Mat y(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    y.middleCols(c, g.value(p).cols()) = g.value(p);
    c += g.value(p).cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return g.Push(std::move(y), parts, [ins](Graph &g, int self) {
    const Mat &d = g.node_grad(self);
    Eigen::Index c = 0;
    for (Var p : ins) {
      Eigen::Index w = g.value(p).cols();
      if (g.requires_grad(p)) g.Accumulate(p.id, d.middleCols(c, w));
      c += w;
    }
  });
}

Var ConcatRows(Graph &g, std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concatenation of zero parts");
  Eigen::Index cols = g.value(parts[0]).cols(), rows = 0;
  for (Var p : parts) {
    if (g.value(p).cols() != cols)
      throw ValidationError("column count mismatch in concatenation");
    rows += g.value(p).rows();
  }
  Mat y(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    y.middleRows(r, g.value(p).rows()) = g.value(p);
    r += g.value(p).rows();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return g.Push(std::move(y), parts, [ins](Graph &g, int self) {
    const Mat &d = g.node_grad(self);
    Eigen::Index r = 0;
    for (Var p : ins) {
      Eigen::Index h = g.value(p).rows();
      if (g.requires_grad(p)) g.Accumulate(p.id, d.middleRows(r, h));
      r += h;
    }
  });
}

Var SliceCols(Graph &g, Var a, int start, int count) {
  return g.Push(g.value(a).middleCols(start, count), {a},
                [a, start, count](Graph &g, int self) {
                  g.AccumulateBlock(a.id, 0, start, g.node_grad(self));
                });
}

Var GatherRows(Graph &g, Var a, std::vector<int> rows) {
  const Mat &x = g.value(a);
  Mat y(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= x.rows())
      throw ValidationError("row index out of range");
    y.row(k) = x.row(rows[k]);
  }
  return g.Push(std::move(y), {a}, [a, rows = std::move(rows)](Graph &g, int self) {
    const Mat &d = g.node_grad(self);
    for (size_t k = 0; k < rows.size(); ++k) g.AccumulateBlock(a.id, rows[k], 0, d.row(k));
  });
}

Var LayerNorm(Graph &g, Var a, Var gamma, Var beta, double eps) {
  const Mat &x = g.value(a);
  const Eigen::Index n = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat xc = x - mean.replicate(1, n);
  Eigen::VectorXd inv =
      ((xc.array().square().rowwise().sum() / static_cast<double>(n)) + eps).rsqrt();
  Mat xhat = xc.cwiseProduct(inv.replicate(1, n));
  Mat y = xhat.cwiseProduct(g.value(gamma).replicate(x.rows(), 1));
  y.rowwise() += g.value(beta).row(0);
  return g.Push(std::move(y), {a, gamma, beta},
                [a, gamma, beta, xhat = std::move(xhat), inv = std::move(inv)](
                    Graph &g, int self) {
                  const Mat &d = g.node_grad(self);
                  const Eigen::Index n = d.cols();
                  if (g.requires_grad(gamma))
                    g.Accumulate(gamma.id, d.cwiseProduct(xhat).colwise().sum());
                  if (g.requires_grad(beta)) g.Accumulate(beta.id, d.colwise().sum());
                  if (g.requires_grad(a)) {
                    Mat dxhat = d.cwiseProduct(g.value(gamma).replicate(d.rows(), 1));
                    Eigen::VectorXd m1 = dxhat.rowwise().mean();
                    Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
                    Mat dx = dxhat - m1.replicate(1, n) -
                             xhat.cwiseProduct(m2.replicate(1, n));
                    g.Accumulate(a.id, dx.cwiseProduct(inv.replicate(1, n)));
                  }
                });
}

Var Sum(Graph &g, Var a) {
  Mat y(1, 1);
  y(0, 0) = g.value(a).sum();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    const Mat &x = g.value(a);
    g.Accumulate(a.id, Mat::Constant(x.rows(), x.cols(), g.node_grad(self)(0, 0)));
  });
}

Var SumSquares(Graph &g, Var a) {
  Mat y(1, 1);
  y(0, 0) = g.value(a).squaredNorm();
  return g.Push(std::move(y), {a}, [a](Graph &g, int self) {
    g.Accumulate(a.id, 2.0 * g.node_grad(self)(0, 0) * g.value(a));
  });
}

Var CrossEntropy(Graph &g, Var logits, int label) {
  const Mat &z = g.value(logits);
  if (z.rows() != 1 || label < 0 || label >= z.cols())
    throw ValidationError("cross entropy needs a single logit row and a valid label");
  double mx = z.maxCoeff();
  double lse = mx + std::log((z.array() - mx).exp().sum());
  Mat y(1, 1);
  y(0, 0) = lse - z(0, label);
  return g.Push(std::move(y), {logits}, [logits, label](Graph &g, int self) {
    Mat p = Softmax(g.value(logits));
    p(0, label) -= 1.0;
    g.Accumulate(logits.id, p * g.node_grad(self)(0, 0));
  });
}

}  // namespace bargein::nn
