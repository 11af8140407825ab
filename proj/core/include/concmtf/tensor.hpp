#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace concmtf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when operand shapes do not match an operation's contract.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense 3-mode tensor, first-mode-fastest layout: element (i,j,k) lives at
/// buffer index i + I*j + I*J*k. vectorize() returns exactly this buffer.
class Tensor3 {
 public:
  Tensor3() : dims_{0, 0, 0} {}
  Tensor3(Index i, Index j, Index k) : dims_{i, j, k}, values_(Vector::Zero(i * j * k)) {
    if (i < 0 || j < 0 || k < 0) throw DimensionError("Tensor3: negative dimension");
  }
  Tensor3(std::array<Index, 3> dims, Vector values) : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims_[0] * dims_[1] * dims_[2])
      throw DimensionError("Tensor3: value count does not match dims");
  }

  const std::array<Index, 3>& dims() const { return dims_; }
  Index dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  Index size() const { return values_.size(); }

  double operator()(Index i, Index j, Index k) const {
    return values_[i + dims_[0] * (j + dims_[1] * k)];
  }
  double& operator()(Index i, Index j, Index k) {
    return values_[i + dims_[0] * (j + dims_[1] * k)];
  }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  bool all_finite() const { return values_.allFinite(); }

  bool operator==(const Tensor3& other) const {
    return dims_ == other.dims_ && values_ == other.values_;
  }

 private:
  std::array<Index, 3> dims_;
  Vector values_;
};

/// Sparse coordinate interchange form for corpus tensors. Entries are kept
/// canonical: sorted by linear index i + I*j + I*J*k, duplicates summed,
/// zero values dropped.
struct CooEntry {
  Index i, j, k;
  double value;
};

struct CooTensor {
  std::array<Index, 3> dims{0, 0, 0};
  std::vector<CooEntry> entries;

  /// Sum duplicate (i,j,k) triples, drop zeros, sort by linear index.
  /// Throws DimensionError if any index is out of range.
  void canonicalize();

  Tensor3 densify() const;
  static CooTensor from_dense(const Tensor3& t);

  double total() const;
};

/// Mode-n matricization, mode in {1,2,3}. Column orders:
///   mode 1: I x (J*K), column j + J*k
///   mode 2: J x (I*K), column i + I*k
///   mode 3: K x (I*J), column i + I*j
Matrix unfold(const Tensor3& t, int mode);

/// Inverse of unfold for the given mode and dims; exact round trip.
Tensor3 fold(const Matrix& m, int mode, std::array<Index, 3> dims);

/// First-mode-fastest flattening; equals the stored layout and the
/// column-by-column flattening of the mode-1 unfolding.
Vector vectorize(const Tensor3& t);

/// Kronecker product: block (r,c) of the result is p(r,c) * q.
Matrix kronecker(const Matrix& p, const Matrix& q);

/// Column-wise Kronecker product; p and q must have equal column counts.
Matrix khatri_rao(const Matrix& p, const Matrix& q);

/// Tucker reconstruction: result(i,j,k) = sum_{pqr} g(p,q,r) a(i,p) b(j,q) c(k,r).
/// Factor column counts must match the core dims.
Tensor3 tucker_reconstruct(const Tensor3& g, const Matrix& a, const Matrix& b, const Matrix& c);

/// r x r x r tensor with weights on the superdiagonal, zero elsewhere.
Tensor3 superdiagonal_core(const Vector& weights, Index r);

double frobenius_error(const Tensor3& x, const Tensor3& y);
double frobenius_error(const Matrix& x, const Matrix& y);

}  // namespace concmtf
