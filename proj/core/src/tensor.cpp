#include "concmtf/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace concmtf {

void CooTensor::canonicalize() {
  const auto [di, dj, dk] = dims;
  for (const auto& e : entries) {
    if (e.i < 0 || e.i >= di || e.j < 0 || e.j >= dj || e.k < 0 || e.k >= dk)
      throw DimensionError("CooTensor: entry index out of range");
  }
  auto linear = [&](const CooEntry& e) { return e.i + di * (e.j + dj * e.k); };
  std::sort(entries.begin(), entries.end(),
            [&](const CooEntry& a, const CooEntry& b) { return linear(a) < linear(b); });
  std::vector<CooEntry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && linear(merged.back()) == linear(e)) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const CooEntry& e) { return e.value == 0.0; });
  entries = std::move(merged);
}

Tensor3 CooTensor::densify() const {
  Tensor3 t(dims[0], dims[1], dims[2]);
  for (const auto& e : entries) {
    if (e.i < 0 || e.i >= dims[0] || e.j < 0 || e.j >= dims[1] || e.k < 0 || e.k >= dims[2])
      throw DimensionError("CooTensor: entry index out of range");
    t(e.i, e.j, e.k) += e.value;
  }
  return t;
}

CooTensor CooTensor::from_dense(const Tensor3& t) {
  CooTensor coo;
  coo.dims = t.dims();
  for (Index k = 0; k < t.dim(2); ++k)
    for (Index j = 0; j < t.dim(1); ++j)
      for (Index i = 0; i < t.dim(0); ++i)
        if (t(i, j, k) != 0.0) coo.entries.push_back({i, j, k, t(i, j, k)});
  return coo;
}

double CooTensor::total() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value;
  return s;
}

Matrix unfold(const Tensor3& t, int mode) {
  const Index di = t.dim(0), dj = t.dim(1), dk = t.dim(2);
  switch (mode) {
    case 1: {
      // The buffer already is the I x (J*K) column-major unfolding.
      return Eigen::Map<const Matrix>(t.values().data(), di, dj * dk);
    }
    case 2: {
      Matrix m(dj, di * dk);
      for (Index k = 0; k < dk; ++k)
        for (Index j = 0; j < dj; ++j)
          for (Index i = 0; i < di; ++i) m(j, i + di * k) = t(i, j, k);
      return m;
    }
    case 3: {
      Matrix m(dk, di * dj);
      for (Index k = 0; k < dk; ++k)
        for (Index j = 0; j < dj; ++j)
          for (Index i = 0; i < di; ++i) m(k, i + di * j) = t(i, j, k);
      return m;
    }
    default:
      throw DimensionError("unfold: mode must be 1, 2 or 3");
  }
}

Tensor3 fold(const Matrix& m, int mode, std::array<Index, 3> dims) {
  const auto [di, dj, dk] = dims;
  auto expect = [&](Index rows, Index cols) {
    if (m.rows() != rows || m.cols() != cols)
      throw DimensionError("fold: matrix shape does not match unfolding shape");
  };
  Tensor3 t(di, dj, dk);
  switch (mode) {
    case 1:
      expect(di, dj * dk);
      t.values() = Eigen::Map<const Vector>(m.data(), m.size());
      return t;
    case 2:
      expect(dj, di * dk);
      for (Index k = 0; k < dk; ++k)
        for (Index j = 0; j < dj; ++j)
          for (Index i = 0; i < di; ++i) t(i, j, k) = m(j, i + di * k);
      return t;
    case 3:
      expect(dk, di * dj);
      for (Index k = 0; k < dk; ++k)
        for (Index j = 0; j < dj; ++j)
          for (Index i = 0; i < di; ++i) t(i, j, k) = m(k, i + di * j);
      return t;
    default:
      throw DimensionError("fold: mode must be 1, 2 or 3");
  }
}

Vector vectorize(const Tensor3& t) { return t.values(); }

Matrix kronecker(const Matrix& p, const Matrix& q) {
  Matrix out(p.rows() * q.rows(), p.cols() * q.cols());
  for (Index r = 0; r < p.rows(); ++r)
    for (Index c = 0; c < p.cols(); ++c)
      out.block(r * q.rows(), c * q.cols(), q.rows(), q.cols()) = p(r, c) * q;
  return out;
}

Matrix khatri_rao(const Matrix& p, const Matrix& q) {
  if (p.cols() != q.cols()) throw DimensionError("khatri_rao: column counts differ");
  Matrix out(p.rows() * q.rows(), p.cols());
  for (Index c = 0; c < p.cols(); ++c)
    for (Index r = 0; r < p.rows(); ++r)
      out.col(c).segment(r * q.rows(), q.rows()) = p(r, c) * q.col(c);
  return out;
}

Tensor3 tucker_reconstruct(const Tensor3& g, const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.cols() != g.dim(0) || b.cols() != g.dim(1) || c.cols() != g.dim(2))
    throw DimensionError("tucker_reconstruct: factor columns do not match core dims");
  // Mode-1 identity: X_(1) = A G_(1) (C kron B)^T.
  Matrix x1 = a * (unfold(g, 1) * kronecker(c, b).transpose());
  return fold(x1, 1, {a.rows(), b.rows(), c.rows()});
}

Tensor3 superdiagonal_core(const Vector& weights, Index r) {
  if (weights.size() != r) throw DimensionError("superdiagonal_core: weight count != r");
  Tensor3 g(r, r, r);
  for (Index p = 0; p < r; ++p) g(p, p, p) = weights[p];
  return g;
}

double frobenius_error(const Tensor3& x, const Tensor3& y) {
  if (x.dims() != y.dims()) throw DimensionError("frobenius_error: tensor dims differ");
  return (x.values() - y.values()).norm();
}

double frobenius_error(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionError("frobenius_error: matrix shapes differ");
  return (x - y).norm();
}

}  // namespace concmtf
