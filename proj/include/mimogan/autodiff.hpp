// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mimogan/common.hpp"

namespace mimogan::ad {

using Mat = Eigen::MatrixXd;

// Reverse-mode tape over real matrices.  Values are computed eagerly, so node
// ids are topologically ordered.  grad() runs a plain numeric reverse pass;
// grad_nodes() emits the reverse pass as new tape nodes, which makes the
// gradient itself differentiable (double backward, needed for the gradient
// penalty).  A tape is single-threaded; distinct tapes are independent.
class Tape {
 public:
  enum class Op : unsigned char {
    Leaf, Const, MatMul, Transpose, Add, Scale, AddConst, CMul, Relu,
    RowSelect, RowScatter, SumCols, SumRows, SumAll,
    BroadcastCols, BroadcastRows, BroadcastScalar, PowConst, VertCat
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    double c = 0.0;
    int start = 0, stride = 1, nsel = 0, total = 0;  // RowSelect / RowScatter
    std::vector<int> parts;                          // VertCat
    Mat value;
  };

  int leaf(Mat v) { return push(Op::Leaf, std::move(v)); }
  int constant(Mat v) { return push(Op::Const, std::move(v)); }
  int scalar_const(double v) { return constant(Mat::Constant(1, 1, v)); }

  int matmul(int a, int b);
  int transpose(int a);
  int add(int a, int b);
  int sub(int a, int b) { return add(a, scale(b, -1.0)); }
  int scale(int a, double c);
  int add_const(int a, double c);
  int cmul(int a, int b);
  int relu(int a);
  /// Rows start, start+stride, ..., nsel of them.
  int row_select(int a, int start, int stride, int nsel);
  /// Inverse placement: rows of `a` scattered into a (total x cols) zero matrix.
  int row_scatter(int a, int start, int stride, int total);
  int sum_cols(int a);
  int sum_rows(int a);
  int sum_all(int a);
  int broadcast_cols(int a, int ncols);   // a is m x 1
  int broadcast_rows(int a, int nrows);   // a is 1 x n
  int broadcast_scalar(int a, int rows, int cols);  // a is 1 x 1
  /// Elementwise power with fixed exponent.  Non-integer exponents use the
  /// subgradient-0 convention at and below zero (so d sqrt(0) := 0).
  int pow_const(int a, double e);
  int vert_cat(std::vector<int> parts);

  const Mat& value(int id) const { return nodes_[id].value; }
  double scalar(int id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Plain reverse pass from the scalar node `out`; returns d out / d wrt[i]
  /// (zero matrix when wrt[i] does not influence out).
  std::vector<Mat> grad(int out, const std::vector<int>& wrt) const;

  /// Differentiable reverse pass: the adjoints are emitted as new tape nodes
  /// and their ids returned (-1 entries are replaced by zero constants).
  std::vector<int> grad_nodes(int out, const std::vector<int>& wrt);

 private:
  int push(Op op, Mat v) {
    Node n;
    n.op = op;
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  const Node& at(int id) const { return nodes_[id]; }
  static Mat pow_eval(const Mat& x, double e);

  std::vector<Node> nodes_;
};

}  // namespace mimogan::ad
