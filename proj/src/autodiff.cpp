// SPDX-License-Identifier: Apache-2.0
#include "mimogan/autodiff.hpp"

#include <cmath>

namespace mimogan::ad {

namespace {

bool is_integer(double e) { return e == std::floor(e); }

}  // namespace

int Tape::matmul(int a, int b) {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  require(va.cols() == vb.rows(), "matmul: inner dimensions mismatch");
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  n.value = va * vb;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::transpose(int a) {
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.value = value(a).transpose();
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::add(int a, int b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
          "add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.value = value(a) + value(b);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::scale(int a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.c = c;
  n.value = c * value(a);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::add_const(int a, double c) {
  Node n;
  n.op = Op::AddConst;
  n.a = a;
  n.c = c;
  n.value = value(a).array() + c;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::cmul(int a, int b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
          "cmul: shape mismatch");
  Node n;
  n.op = Op::CMul;
  n.a = a;
  n.b = b;
  n.value = value(a).cwiseProduct(value(b));
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::relu(int a) {
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.value = value(a).cwiseMax(0.0);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::row_select(int a, int start, int stride, int nsel) {
  const Mat& va = value(a);
  require(nsel >= 1 && start >= 0 && stride >= 1, "row_select: bad arguments");
  require(start + (nsel - 1) * stride < va.rows(), "row_select: out of range");
  Node n;
  n.op = Op::RowSelect;
  n.a = a;
  n.start = start;
  n.stride = stride;
  n.nsel = nsel;
  n.value = Mat(nsel, va.cols());
  for (int k = 0; k < nsel; ++k) n.value.row(k) = va.row(start + k * stride);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::row_scatter(int a, int start, int stride, int total) {
  const Mat& va = value(a);
  require(start + (static_cast<int>(va.rows()) - 1) * stride < total,
          "row_scatter: out of range");
  Node n;
  n.op = Op::RowScatter;
  n.a = a;
  n.start = start;
  n.stride = stride;
  n.total = total;
  n.value = Mat::Zero(total, va.cols());
  for (int k = 0; k < va.rows(); ++k) n.value.row(start + k * stride) = va.row(k);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::sum_cols(int a) {
  Node n;
  n.op = Op::SumCols;
  n.a = a;
  n.value = value(a).rowwise().sum();
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::sum_rows(int a) {
  Node n;
  n.op = Op::SumRows;
  n.a = a;
  n.value = value(a).colwise().sum();
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::sum_all(int a) {
  Node n;
  n.op = Op::SumAll;
  n.a = a;
  n.value = Mat::Constant(1, 1, value(a).sum());
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::broadcast_cols(int a, int ncols) {
  require(value(a).cols() == 1, "broadcast_cols: input must be a column");
  Node n;
  n.op = Op::BroadcastCols;
  n.a = a;
  n.value = value(a).replicate(1, ncols);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::broadcast_rows(int a, int nrows) {
  require(value(a).rows() == 1, "broadcast_rows: input must be a row");
  Node n;
  n.op = Op::BroadcastRows;
  n.a = a;
  n.value = value(a).replicate(nrows, 1);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::broadcast_scalar(int a, int rows, int cols) {
  require(value(a).size() == 1, "broadcast_scalar: input must be 1x1");
  Node n;
  n.op = Op::BroadcastScalar;
  n.a = a;
  n.value = Mat::Constant(rows, cols, value(a)(0, 0));
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat Tape::pow_eval(const Mat& x, double e) {
  if (is_integer(e)) return x.array().pow(e);
  Mat r(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      r(i, j) = x(i, j) > 0.0 ? std::pow(x(i, j), e) : 0.0;
  return r;
}

int Tape::pow_const(int a, double e) {
  Node n;
  n.op = Op::PowConst;
  n.a = a;
  n.c = e;
  n.value = pow_eval(value(a), e);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::vert_cat(std::vector<int> parts) {
  require(!parts.empty(), "vert_cat: empty");
  long rows = 0;
  const long cols = value(parts[0]).cols();
  for (int p : parts) {
    require(value(p).cols() == cols, "vert_cat: column mismatch");
    rows += value(p).rows();
  }
  Node n;
  n.op = Op::VertCat;
  n.value = Mat(rows, cols);
  long off = 0;
  for (int p : parts) {
    n.value.middleRows(off, value(p).rows()) = value(p);
    off += value(p).rows();
  }
  n.parts = std::move(parts);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

double Tape::scalar(int id) const {
  require(value(id).size() == 1, "scalar: node is not 1x1");
  return value(id)(0, 0);
}

std::vector<Mat> Tape::grad(int out, const std::vector<int>& wrt) const {
  require(value(out).size() == 1, "grad: output must be scalar");
  std::vector<Mat> adj(static_cast<std::size_t>(out) + 1);
  adj[out] = Mat::Constant(1, 1, 1.0);

  auto acc = [&](int id, const Mat& contrib) {
    if (adj[id].size() == 0)
      adj[id] = contrib;
    else
      adj[id] += contrib;
  };

  for (int id = out; id >= 0; --id) {
    if (adj[id].size() == 0) continue;
    const Node& n = at(id);
    const Mat& g = adj[id];
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::MatMul:
        acc(n.a, g * value(n.b).transpose());
        acc(n.b, value(n.a).transpose() * g);
        break;
      case Op::Transpose:
        acc(n.a, g.transpose());
        break;
      case Op::Add:
        acc(n.a, g);
        acc(n.b, g);
        break;
      case Op::Scale:
        acc(n.a, n.c * g);
        break;
      case Op::AddConst:
        acc(n.a, g);
        break;
      case Op::CMul:
        acc(n.a, g.cwiseProduct(value(n.b)));
        acc(n.b, g.cwiseProduct(value(n.a)));
        break;
      case Op::Relu:
        acc(n.a, g.cwiseProduct((value(n.a).array() > 0.0).cast<double>().matrix()));
        break;
      case Op::RowSelect: {
        Mat z = Mat::Zero(value(n.a).rows(), value(n.a).cols());
        for (int k = 0; k < n.nsel; ++k) z.row(n.start + k * n.stride) = g.row(k);
        acc(n.a, z);
        break;
      }
      case Op::RowScatter: {
        Mat z(value(n.a).rows(), value(n.a).cols());
        for (int k = 0; k < z.rows(); ++k) z.row(k) = g.row(n.start + k * n.stride);
        acc(n.a, z);
        break;
      }
      case Op::SumCols:
        acc(n.a, g.replicate(1, value(n.a).cols()));
        break;
      case Op::SumRows:
        acc(n.a, g.replicate(value(n.a).rows(), 1));
        break;
      case Op::SumAll:
        acc(n.a, Mat::Constant(value(n.a).rows(), value(n.a).cols(), g(0, 0)));
        break;
      case Op::BroadcastCols:
        acc(n.a, g.rowwise().sum());
        break;
      case Op::BroadcastRows:
        acc(n.a, g.colwise().sum());
        break;
      case Op::BroadcastScalar:
        acc(n.a, Mat::Constant(1, 1, g.sum()));
        break;
      case Op::PowConst:
        acc(n.a, g.cwiseProduct(n.c * pow_eval(value(n.a), n.c - 1.0)));
        break;
      case Op::VertCat: {
        long off = 0;
        for (int p : n.parts) {
          const long r = value(p).rows();
          acc(p, g.middleRows(off, r));
          off += r;
        }
        break;
      }
    }
  }

  std::vector<Mat> result;
  result.reserve(wrt.size());
  for (int w : wrt) {
    if (w <= out && adj[w].size() != 0)
      result.push_back(std::move(adj[w]));
    else
      result.push_back(Mat::Zero(value(w).rows(), value(w).cols()));
  }
  return result;
}

std::vector<int> Tape::grad_nodes(int out, const std::vector<int>& wrt) {
  require(value(out).size() == 1, "grad_nodes: output must be scalar");
  std::vector<int> adj(static_cast<std::size_t>(out) + 1, -1);
  adj[out] = scalar_const(1.0);

  auto acc = [&](int id, int contrib) {
    adj[id] = adj[id] < 0 ? contrib : add(adj[id], contrib);
  };

  for (int id = out; id >= 0; --id) {
    if (adj[id] < 0) continue;
    const int g = adj[id];
    // Copy the node fields we need; pushing new nodes may reallocate nodes_.
    const Op op = at(id).op;
    const int na = at(id).a, nb = at(id).b;
    const double nc = at(id).c;
    const int start = at(id).start, stride = at(id).stride, nsel = at(id).nsel;
    const std::vector<int> parts = at(id).parts;
    switch (op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::MatMul:
        acc(na, matmul(g, transpose(nb)));
        acc(nb, matmul(transpose(na), g));
        break;
      case Op::Transpose:
        acc(na, transpose(g));
        break;
      case Op::Add:
        acc(na, g);
        acc(nb, g);
        break;
      case Op::Scale:
        acc(na, scale(g, nc));
        break;
      case Op::AddConst:
        acc(na, g);
        break;
      case Op::CMul:
        acc(na, cmul(g, nb));
        acc(nb, cmul(g, na));
        break;
      case Op::Relu: {
        // The ReLU derivative (0 at exactly 0) is locally constant; it enters
        // the double-backward pass as a constant mask.
        const int mask = constant((value(na).array() > 0.0).cast<double>().matrix());
        acc(na, cmul(g, mask));
        break;
      }
      case Op::RowSelect:
        acc(na, row_scatter(g, start, stride, static_cast<int>(value(na).rows())));
        break;
      case Op::RowScatter:
        acc(na, row_select(g, start, stride, static_cast<int>(value(na).rows())));
        break;
      case Op::SumCols:
        acc(na, broadcast_cols(g, static_cast<int>(value(na).cols())));
        break;
      case Op::SumRows:
        acc(na, broadcast_rows(g, static_cast<int>(value(na).rows())));
        break;
      case Op::SumAll:
        acc(na, broadcast_scalar(g, static_cast<int>(value(na).rows()),
                                 static_cast<int>(value(na).cols())));
        break;
      case Op::BroadcastCols:
        acc(na, sum_cols(g));
        break;
      case Op::BroadcastRows:
        acc(na, sum_rows(g));
        break;
      case Op::BroadcastScalar:
        acc(na, sum_all(g));
        break;
      case Op::PowConst:
        acc(na, cmul(g, scale(pow_const(na, nc - 1.0), nc)));
        break;
      case Op::VertCat: {
        int off = 0;
        for (int p : parts) {
          const int r = static_cast<int>(value(p).rows());
          acc(p, row_select(g, off, 1, r));
          off += r;
        }
        break;
      }
    }
  }

  std::vector<int> result;
  result.reserve(wrt.size());
  for (int w : wrt) {
    if (w <= out && adj[w] >= 0)
      result.push_back(adj[w]);
    else
      result.push_back(constant(Mat::Zero(value(w).rows(), value(w).cols())));
  }
  return result;
}

}  // namespace mimogan::ad
