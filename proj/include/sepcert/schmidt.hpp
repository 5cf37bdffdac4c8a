#pragma once

// Operator Schmidt decompositions of bipartite operators and their
// Hermitian forms.

#include <string>
#include <utility>
#include <vector>

#include "matrix_kernel.hpp"

namespace sepcert {

struct FactorPair {
  CMatrix a;  // d1 x d1
  CMatrix b;  // d2 x d2
};

/// rho = sum_alpha a_alpha (x) b_alpha.
struct PairDecomposition {
  int d1 = 0;
  int d2 = 0;
  std::vector<FactorPair> pairs;
  bool independent = false;

  std::size_t size() const { return pairs.size(); }

  CMatrix contract() const {
    CMatrix out = CMatrix::Zero(static_cast<Index>(d1) * d2, static_cast<Index>(d1) * d2);
    for (const auto& p : pairs) out += kron(p.a, p.b);
    return out;
  }

  void validate() const {
    if (d1 <= 0 || d2 <= 0) fail(Errc::DimensionMismatch, "pair decomposition needs positive dims");
    for (const auto& p : pairs) {
      if (p.a.rows() != d1 || p.a.cols() != d1 || p.b.rows() != d2 || p.b.cols() != d2)
        fail(Errc::DimensionMismatch, "factor pair has wrong local dimension");
    }
  }

  std::vector<CMatrix> left_factors() const {
    std::vector<CMatrix> out;
    for (const auto& p : pairs) out.push_back(p.a);
    return out;
  }
  std::vector<CMatrix> right_factors() const {
    std::vector<CMatrix> out;
    for (const auto& p : pairs) out.push_back(p.b);
    return out;
  }
};

inline void require_bipartite_dims(const CMatrix& rho, int d1, int d2) {
  if (d1 <= 0 || d2 <= 0 || rho.rows() != static_cast<Index>(d1) * d2 || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "operator of size " + std::to_string(rho.rows()) + "x" +
                                      std::to_string(rho.cols()) + " does not match dims " + std::to_string(d1) +
                                      "x" + std::to_string(d2));
}

/// Reshuffle R with R(i*d1 + j, k*d2 + l) = <i,k| rho |j,l>; rank R = osr(rho).
inline CMatrix realign(const CMatrix& rho, int d1, int d2) {
  require_bipartite_dims(rho, d1, d2);
  CMatrix r(static_cast<Index>(d1) * d1, static_cast<Index>(d2) * d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k)
        for (int l = 0; l < d2; ++l) r(i * d1 + j, k * d2 + l) = rho(i * d2 + k, j * d2 + l);
  return r;
}

inline CMatrix unrealign(const CMatrix& r, int d1, int d2) {
  if (r.rows() != static_cast<Index>(d1) * d1 || r.cols() != static_cast<Index>(d2) * d2)
    fail(Errc::DimensionMismatch, "realigned matrix has the wrong shape");
  CMatrix rho(static_cast<Index>(d1) * d2, static_cast<Index>(d1) * d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k)
        for (int l = 0; l < d2; ++l) rho(i * d2 + k, j * d2 + l) = r(i * d1 + j, k * d2 + l);
  return rho;
}

/// Row-major reshape of a length-d^2 vector into a d x d matrix.
inline CMatrix unvec_rows(const CVector& v, int d) {
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  return m;
}

inline int operator_schmidt_rank(const CMatrix& rho, int d1, int d2, const Tolerances& tol = {}) {
  return numerical_rank(svd(realign(rho, d1, d2)).s, tol.rank);
}

/// Operator Schmidt decomposition via SVD of the realigned matrix. The left
/// factors are Hilbert-Schmidt orthonormal; the right factors carry the
/// singular values and are mutually orthogonal. The zero operator yields an
/// empty decomposition.
inline PairDecomposition operator_schmidt(const CMatrix& rho, int d1, int d2, const Tolerances& tol = {}) {
  require_finite(rho, "state");
  const SvdResult f = svd(realign(rho, d1, d2));
  const int p = numerical_rank(f.s, tol.rank);
  PairDecomposition dec;
  dec.d1 = d1;
  dec.d2 = d2;
  for (int a = 0; a < p; ++a) {
    FactorPair fp;
    fp.a = unvec_rows(f.u.col(a), d1);
    fp.b = unvec_rows(f.s(a) * f.v.col(a).conjugate(), d2);
    dec.pairs.push_back(std::move(fp));
  }
  dec.independent = true;
  return dec;
}

/// Rewrites a decomposition with a Hermitian sum as the same number of pairs
/// with Hermitian factors. Both factor families must be linearly independent.
inline PairDecomposition hermitize_bipartite(const PairDecomposition& dec, const Tolerances& tol = {}) {
  dec.validate();
  if (dec.pairs.empty()) fail(Errc::EmptyList, "hermitize_bipartite on an empty decomposition");
  const CMatrix total = dec.contract();
  if (!is_hermitian(total, tol.herm))
    fail(Errc::NotHermitianSum, "sum of factor products is not Hermitian (defect " +
                                    std::to_string(hermiticity_defect(total)) + ")");
  const auto lefts = dec.left_factors();
  const auto rights = dec.right_factors();
  const int r = static_cast<int>(dec.size());
  if (!lin_independent(lefts, tol.rank).independent || !lin_independent(rights, tol.rank).independent)
    fail(Errc::DependentFactors, "factor families must be linearly independent");

  const std::vector<CMatrix> basis = hermitian_basis(lefts, r, tol.rank);
  PairDecomposition out;
  out.d1 = dec.d1;
  out.d2 = dec.d2;
  out.independent = true;
  for (int b = 0; b < r; ++b) {
    // a_alpha = sum_b tr(H_b a_alpha) H_b, so the partner of H_b collects
    // the matching coefficients of every b_alpha.
    CMatrix partner = CMatrix::Zero(dec.d2, dec.d2);
    for (int a = 0; a < r; ++a) partner += (basis[b] * lefts[a]).trace() * rights[a];
    if (hermiticity_defect(partner) > tol.herm * scale_of(total) + tol.recon * partner.norm())
      fail(Errc::NotHermitianSum, "partner factor is not Hermitian; the sum is not Hermitian");
    out.pairs.push_back({basis[b], hermitian_part(partner)});
  }
  const double err = (out.contract() - total).norm();
  if (err > tol.recon * scale_of(total))
    fail(Errc::NotHermitianSum, "Hermitian rewrite does not reproduce the operator (error " + std::to_string(err) + ")");
  return out;
}

}  // namespace sepcert
