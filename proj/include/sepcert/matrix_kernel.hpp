#pragma once

// Dense complex linear-algebra primitives shared by every other module.
//
// Tolerance policy: every threshold is relative to max(1, ||M||_F) of the
// matrix being tested, and all defaults live in `Tolerances`.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace sepcert {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerances {
  double herm = 1e-10;   // Hermiticity check
  double pd = 1e-9;      // positive definiteness (strict)
  double rank = 1e-9;    // numerical rank / kernel
  double recon = 1e-9;   // internal reconstruction checks
  double cert = 1e-8;    // certificate residual and factor eigenvalues
  std::size_t dense_limit = 256;

  /// Named profiles: "default", "strict", "loose". Unknown names throw ParseError.
  static Tolerances profile(std::string_view name) {
    Tolerances t;
    if (name.empty() || name == "default") return t;
    if (name == "strict") {
      t.herm = 1e-12;
      t.pd = 1e-10;
      t.rank = 1e-11;
      t.recon = 1e-11;
      t.cert = 1e-10;
      return t;
    }
    if (name == "loose") {
      t.herm = 1e-8;
      t.pd = 1e-7;
      t.rank = 1e-7;
      t.recon = 1e-7;
      t.cert = 1e-6;
      return t;
    }
    fail(Errc::ParseError, "unknown tolerance profile '" + std::string(name) + "'");
  }
};

inline double frob(const CMatrix& m) { return m.norm(); }

inline double scale_of(const CMatrix& m) { return std::max(1.0, m.norm()); }

inline void require_finite(const CMatrix& m, std::string_view what = "matrix") {
  if (!m.allFinite()) fail(Errc::NonFinite, std::string(what) + " has NaN/Inf entries");
}

inline void require_square(const CMatrix& m, std::string_view what = "matrix") {
  if (m.rows() != m.cols() || m.rows() == 0)
    fail(Errc::DimensionMismatch, std::string(what) + " must be square and nonempty");
}

/// (M + M^dagger) / 2. The single definition of "Hermitian part" used everywhere.
inline CMatrix hermitian_part(const CMatrix& m) { return (m + m.adjoint()) / 2.0; }

/// -i (M - M^dagger) / 2, so that M = hermitian_part(M) + i * antihermitian_coefficient(M).
inline CMatrix antihermitian_coefficient(const CMatrix& m) {
  return Complex(0.0, -0.5) * (m - m.adjoint());
}

inline double hermiticity_defect(const CMatrix& m) { return (m - m.adjoint()).norm(); }

inline bool is_hermitian(const CMatrix& m, double herm_tol) {
  return hermiticity_defect(m) <= herm_tol * scale_of(m);
}

/// Square complex matrix known to be Hermitian within `herm_tol`. The stored
/// matrix is the exact Hermitian part of the input.
class HermMatrix {
 public:
  HermMatrix() = default;

  explicit HermMatrix(const CMatrix& m, double herm_tol = Tolerances{}.herm) {
    require_square(m, "HermMatrix");
    require_finite(m, "HermMatrix");
    if (!is_hermitian(m, herm_tol))
      fail(Errc::NonHermitianInput,
           "||M - M^dagger||_F = " + std::to_string(hermiticity_defect(m)) + " exceeds tolerance");
    m_ = hermitian_part(m);
  }

  static HermMatrix hermitian_part_of(const CMatrix& m) {
    require_square(m, "HermMatrix");
    require_finite(m, "HermMatrix");
    HermMatrix h;
    h.m_ = hermitian_part(m);
    return h;
  }

  const CMatrix& mat() const { return m_; }
  Index dim() const { return m_.rows(); }
  double norm() const { return m_.norm(); }

 private:
  CMatrix m_;
};

inline HermMatrix real_combination(double x, const HermMatrix& a, double y, const HermMatrix& b) {
  if (a.dim() != b.dim()) fail(Errc::DimensionMismatch, "pencil matrices differ in dimension");
  return HermMatrix::hermitian_part_of(x * a.mat() + y * b.mat());
}

struct EigSystem {
  RVector eigenvalues;   // ascending
  CMatrix eigenvectors;  // orthonormal columns
};

inline EigSystem herm_eig(const HermMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.mat());
  if (solver.info() != Eigen::Success) fail(Errc::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RVector herm_eigenvalues(const HermMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.mat(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(Errc::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return solver.eigenvalues();
}

struct PsdCheck {
  bool psd = false;
  double min_eigenvalue = 0.0;
};

/// PSD iff lambda_min >= -tol * max(1, ||H||_F).
inline PsdCheck is_psd(const HermMatrix& h, double tol) {
  const double lmin = herm_eigenvalues(h)(0);
  return {lmin >= -tol * scale_of(h.mat()), lmin};
}

/// Invertible P with P^dagger H P = I, for positive definite H.
inline CMatrix congruence_normalizer(const HermMatrix& h, double pd_tol = Tolerances{}.pd) {
  const EigSystem es = herm_eig(h);
  if (es.eigenvalues(0) <= pd_tol * scale_of(h.mat()))
    fail(Errc::NotPositiveDefinite,
         "lambda_min = " + std::to_string(es.eigenvalues(0)) + " is not above the PD tolerance");
  const RVector inv_sqrt = es.eigenvalues.array().rsqrt();
  return es.eigenvectors * inv_sqrt.asDiagonal();
}

/// Orthonormal basis (columns) for eigenvectors with |lambda| <= tol * max(1, ||H||_F).
inline CMatrix kernel_basis(const HermMatrix& h, double tol) {
  const EigSystem es = herm_eig(h);
  const double thr = tol * scale_of(h.mat());
  std::vector<Index> cols;
  for (Index i = 0; i < es.eigenvalues.size(); ++i)
    if (std::abs(es.eigenvalues(i)) <= thr) cols.push_back(i);
  CMatrix k(h.dim(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) k.col(static_cast<Index>(j)) = es.eigenvectors.col(cols[j]);
  return k;
}

/// Orthonormal basis of the orthogonal complement of kernel_basis(h, tol).
inline CMatrix range_basis(const HermMatrix& h, double tol) {
  const EigSystem es = herm_eig(h);
  const double thr = tol * scale_of(h.mat());
  std::vector<Index> cols;
  for (Index i = 0; i < es.eigenvalues.size(); ++i)
    if (std::abs(es.eigenvalues(i)) > thr) cols.push_back(i);
  CMatrix r(h.dim(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) r.col(static_cast<Index>(j)) = es.eigenvectors.col(cols[j]);
  return r;
}

struct SvdResult {
  CMatrix u;       // orthonormal columns
  RVector s;       // descending, nonnegative
  CMatrix v;       // orthonormal columns; M = U diag(s) V^dagger
};

inline SvdResult svd(const CMatrix& m) {
  require_finite(m, "svd input");
  if (m.size() == 0) fail(Errc::DimensionMismatch, "svd of an empty matrix");
  Eigen::BDCSVD<CMatrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) fail(Errc::ConvergenceFailure, "SVD did not converge");
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// Count of singular values strictly above tol * s_max.
inline int numerical_rank(const RVector& s, double tol) {
  if (s.size() == 0) return 0;
  const double smax = s.maxCoeff();
  if (!(smax > 0.0)) return 0;
  int r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * smax) ++r;
  return r;
}

inline CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

struct RankCheck {
  bool independent = false;
  int rank = 0;
};

/// Vectorizes each matrix as a column and measures the numerical rank.
inline RankCheck lin_independent(std::span<const CMatrix> mats, double tol) {
  if (mats.empty()) fail(Errc::EmptyList, "lin_independent needs at least one matrix");
  const Index rows = mats.front().size();
  CMatrix stacked(rows, static_cast<Index>(mats.size()));
  for (std::size_t j = 0; j < mats.size(); ++j) {
    if (mats[j].rows() != mats.front().rows() || mats[j].cols() != mats.front().cols())
      fail(Errc::DimensionMismatch, "lin_independent: matrices differ in shape");
    stacked.col(static_cast<Index>(j)) = vec(mats[j]);
  }
  const int r = numerical_rank(svd(stacked).s, tol);
  return {r == static_cast<int>(mats.size()), r};
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// tr_1 over the first factor of a (d1*d2)-dimensional operator.
inline CMatrix partial_trace_first(const CMatrix& rho, int d1, int d2) {
  if (rho.rows() != static_cast<Index>(d1) * d2 || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "partial trace: operator dimension is not d1*d2");
  CMatrix out = CMatrix::Zero(d2, d2);
  for (int i = 0; i < d1; ++i) out += rho.block(i * d2, i * d2, d2, d2);
  return out;
}

/// tr_2 over the second factor.
inline CMatrix partial_trace_second(const CMatrix& rho, int d1, int d2) {
  if (rho.rows() != static_cast<Index>(d1) * d2 || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "partial trace: operator dimension is not d1*d2");
  CMatrix out(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j) out(i, j) = rho.block(i * d2, j * d2, d2, d2).trace();
  return out;
}

/// Real coordinates (re, im of every entry). The Euclidean inner product of
/// two such vectors is Re tr(X^dagger Y).
inline RVector real_vec(const CMatrix& m) {
  RVector out(2 * m.size());
  for (Index i = 0; i < m.size(); ++i) {
    out(2 * i) = m.data()[i].real();
    out(2 * i + 1) = m.data()[i].imag();
  }
  return out;
}

inline CMatrix from_real_vec(const RVector& v, Index rows, Index cols) {
  CMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(v(2 * i), v(2 * i + 1));
  return m;
}

struct RealFit {
  RVector coefficients;
  double residual = 0.0;  // ||target - sum c_k basis_k||_F
};

/// Least-squares fit of `target` by real combinations of `basis`.
inline RealFit real_least_squares(std::span<const CMatrix> basis, const CMatrix& target) {
  if (basis.empty()) fail(Errc::EmptyList, "real_least_squares needs a basis");
  RMatrix g(2 * target.size(), static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].rows() != target.rows() || basis[k].cols() != target.cols())
      fail(Errc::DimensionMismatch, "real_least_squares: shape mismatch");
    g.col(static_cast<Index>(k)) = real_vec(basis[k]);
  }
  const RVector t = real_vec(target);
  RealFit fit;
  fit.coefficients = g.completeOrthogonalDecomposition().solve(t);
  fit.residual = (g * fit.coefficients - t).norm();
  return fit;
}

/// Orthonormal (Hilbert-Schmidt) Hermitian basis of the real span of the
/// Hermitian and anti-Hermitian parts of `mats`, ordered by descending
/// singular value. When span_C(mats) is closed under adjoint and has complex
/// dimension r, the returned r matrices also span it over C. Throws
/// NotHermitianSum when the span is not adjoint-closed, i.e. the real span
/// of the parts has dimension above `expected`.
inline std::vector<CMatrix> hermitian_basis(std::span<const CMatrix> mats, int expected, double tol) {
  if (mats.empty()) fail(Errc::EmptyList, "hermitian_basis needs matrices");
  const Index rows = mats.front().rows();
  const Index cols = mats.front().cols();
  RMatrix g(2 * rows * cols, 2 * static_cast<Index>(mats.size()));
  for (std::size_t k = 0; k < mats.size(); ++k) {
    g.col(2 * static_cast<Index>(k)) = real_vec(hermitian_part(mats[k]));
    g.col(2 * static_cast<Index>(k) + 1) = real_vec(antihermitian_coefficient(mats[k]));
  }
  Eigen::BDCSVD<RMatrix> solver(g, Eigen::ComputeThinU);
  if (solver.info() != Eigen::Success) fail(Errc::ConvergenceFailure, "SVD did not converge");
  const int r = numerical_rank(solver.singularValues(), tol);
  if (r != expected)
    fail(Errc::NotHermitianSum, "Hermitian parts span real dimension " + std::to_string(r) + ", expected " +
                                    std::to_string(expected));
  std::vector<CMatrix> basis;
  basis.reserve(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) basis.push_back(hermitian_part(from_real_vec(solver.matrixU().col(k), rows, cols)));
  return basis;
}

}  // namespace sepcert
