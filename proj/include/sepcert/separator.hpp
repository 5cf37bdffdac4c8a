#pragma once

// Constructive separability for operator Schmidt rank 2: bipartite
// decompositions into two PSD product terms and bond-2 PSD chains for
// multipartite operators, plus independent certificate checking.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cone.hpp"
#include "matrix_kernel.hpp"
#include "mpdo.hpp"
#include "schmidt.hpp"

namespace sepcert {

/// rho = A (x) C + B (x) D with all four Hermitian.
struct HermitianPencil {
  HermMatrix a, b, c, d;

  CMatrix contract() const { return kron(a.mat(), c.mat()) + kron(b.mat(), d.mat()); }
};

inline void require_psd_state(const CMatrix& rho, const Tolerances& tol) {
  require_finite(rho, "state");
  if (!is_hermitian(rho, tol.herm))
    fail(Errc::NonHermitianInput, "state is not Hermitian (defect " + std::to_string(hermiticity_defect(rho)) + ")");
  const PsdCheck chk = is_psd(HermMatrix::hermitian_part_of(rho), tol.cert);
  if (!chk.psd) fail(Errc::NotPSDInput, "state has eigenvalue " + std::to_string(chk.min_eigenvalue));
}

/// Rewrites two factor pairs with a PSD sum as a Hermitian pencil: split
/// each left factor into Hermitian and anti-Hermitian coefficients, keep the
/// first two independent ones (by descending norm) as A, B, and collect the
/// complex coordinates of the right factors into C, D.
inline HermitianPencil step1_hermitian_pencil(const PairDecomposition& dec, const Tolerances& tol = {}) {
  dec.validate();
  if (dec.size() != 2) fail(Errc::DependentFactors, "a pencil needs exactly two factor pairs, got " + std::to_string(dec.size()));
  const CMatrix rho = dec.contract();
  require_psd_state(rho, tol);
  if (!lin_independent(dec.left_factors(), tol.rank).independent ||
      !lin_independent(dec.right_factors(), tol.rank).independent)
    fail(Errc::DependentFactors, "factor families are linearly dependent");

  std::vector<CMatrix> parts;
  for (const auto& p : dec.pairs) {
    parts.push_back(hermitian_part(p.a));
    parts.push_back(antihermitian_coefficient(p.a));
  }
  std::vector<std::size_t> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return parts[x].norm() > parts[y].norm(); });
  const CMatrix& first = parts[order[0]];
  std::optional<std::size_t> second;
  for (std::size_t k = 1; k < 4; ++k) {
    const std::vector<CMatrix> pair{first, parts[order[k]]};
    if (lin_independent(pair, tol.rank).independent) {
      second = order[k];
      break;
    }
  }
  if (!second) fail(Errc::DependentFactors, "Hermitian parts of the left factors span only one dimension");
  const std::vector<CMatrix> basis{first, parts[*second]};

  CMatrix c = CMatrix::Zero(dec.d2, dec.d2);
  CMatrix d = CMatrix::Zero(dec.d2, dec.d2);
  for (std::size_t alpha = 0; alpha < 2; ++alpha) {
    const RealFit re = real_least_squares(basis, parts[2 * alpha]);
    const RealFit im = real_least_squares(basis, parts[2 * alpha + 1]);
    const double slack = tol.recon * scale_of(dec.pairs[alpha].a);
    if (re.residual > slack || im.residual > slack)
      fail(Errc::NotHermitianSum, "left factor leaves the span of the chosen Hermitian pair");
    const Complex z0(re.coefficients(0), im.coefficients(0));
    const Complex z1(re.coefficients(1), im.coefficients(1));
    c += z0 * dec.pairs[alpha].b;
    d += z1 * dec.pairs[alpha].b;
  }
  const double slack = tol.herm * scale_of(rho) + tol.recon * (c.norm() + d.norm());
  if (hermiticity_defect(c) > slack || hermiticity_defect(d) > slack)
    fail(Errc::NotHermitianSum, "right pencil matrices are not Hermitian");
  HermitianPencil pen{HermMatrix::hermitian_part_of(basis[0]), HermMatrix::hermitian_part_of(basis[1]),
                      HermMatrix::hermitian_part_of(c), HermMatrix::hermitian_part_of(d)};
  const double err = (pen.contract() - rho).norm();
  if (err > tol.recon * scale_of(rho))
    fail(Errc::NotHermitianSum, "Hermitian pencil does not reproduce the operator (error " + std::to_string(err) + ")");
  return pen;
}

struct HPair {
  HermMatrix h1, h2;
};

/// Solves C = u1 H1 + v1 H2, D = u2 H1 + v2 H2.
inline HPair solve_H(const HermMatrix& c, const HermMatrix& d, const Ray& u, const Ray& v, const Tolerances& tol = {}) {
  const double det = u.x() * v.y() - v.x() * u.y();
  if (std::abs(det) <= 1e-12 * u.norm() * v.norm()) fail(Errc::DependentRays, "rays u and v are parallel");
  const CMatrix h1 = (v.y() * c.mat() - v.x() * d.mat()) / det;
  const CMatrix h2 = (-u.y() * c.mat() + u.x() * d.mat()) / det;
  HPair out{HermMatrix::hermitian_part_of(h1), HermMatrix::hermitian_part_of(h2)};
  const double scale = std::max(1.0, c.norm() + d.norm()) / std::abs(det) * std::max(u.norm(), v.norm());
  for (const HermMatrix* h : {&out.h1, &out.h2}) {
    const double lmin = herm_eigenvalues(*h)(0);
    if (lmin < -tol.cert * scale) fail(Errc::HNotPSD, "H has eigenvalue " + std::to_string(lmin));
  }
  return out;
}

/// What happened at one cut of the induction (cut k separates sites 0..k from k+1..).
struct CutMetadata {
  int cut = 0;
  bool folded = false;  // left blocks were dependent and collapsed to one term
  ConeKind kind = ConeKind::SingleRay;
  ConeTrace trace;
  std::vector<Ray> rays;
};

struct SepCertificate {
  MpdoCores decomposition;  // every core PSD
  double residual = 0.0;
  double min_factor_eig = 0.0;
  Tolerances tolerances;
  std::vector<CutMetadata> cone_metadata;

  /// Number of product terms, the product of the bond dimensions.
  int terms() const {
    int t = 1;
    for (int b : decomposition.bond_dims) t *= b;
    return t;
  }
};

struct VerifyReport {
  bool pass = false;
  double residual = 0.0;
  double min_factor_eig = 0.0;
  int factor = 0;                        // 1-based, in file order
  int site = -1, left = -1, right = -1;  // most negative factor
  std::string message;
};

inline std::string short_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Independent check: brute-force sum over every bond assignment and a fresh
/// eigen-decomposition of every factor.
inline VerifyReport verify_certificate(const SepCertificate& cert, const CMatrix& rho,
                                       std::optional<Tolerances> tol_override = std::nullopt) {
  const Tolerances tol = tol_override.value_or(cert.tolerances);
  const MpdoCores& m = cert.decomposition;
  m.validate();
  if (static_cast<std::size_t>(rho.rows()) != m.total_dim() || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "certificate dims do not match the operator");
  require_dense_limit(m.total_dim(), tol.dense_limit);

  VerifyReport rep;
  rep.min_factor_eig = std::numeric_limits<double>::infinity();
  int running = 0;
  for (int l = 0; l < m.sites(); ++l)
    for (int a = 0; a < m.left_bond(l); ++a)
      for (int b = 0; b < m.right_bond(l); ++b) {
        ++running;
        const CMatrix& f = m.core(l, a, b);
        const double herm_defect = (f - f.adjoint()).norm();
        Eigen::SelfAdjointEigenSolver<CMatrix> es((f + f.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
        double lmin = es.eigenvalues()(0);
        if (herm_defect > tol.cert * std::max(1.0, f.norm())) lmin = std::min(lmin, -herm_defect);
        if (lmin < rep.min_factor_eig) {
          rep.min_factor_eig = lmin;
          rep.factor = running;
          rep.site = l;
          rep.left = a;
          rep.right = b;
        }
      }

  const int n = m.sites();
  std::vector<int> bond(static_cast<std::size_t>(n + 1), 0);
  CMatrix sum = CMatrix::Zero(rho.rows(), rho.cols());
  while (true) {
    CMatrix term = m.core(0, 0, bond[1]);
    for (int l = 1; l < n; ++l) {
      const CMatrix& f = m.core(l, bond[l], l + 1 < n ? bond[l + 1] : 0);
      CMatrix next(term.rows() * f.rows(), term.cols() * f.cols());
      for (Index i = 0; i < term.rows(); ++i)
        for (Index j = 0; j < term.cols(); ++j) next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = term(i, j) * f;
      term = std::move(next);
    }
    sum += term;
    int k = n - 1;
    while (k >= 1 && ++bond[k] == m.bond_dims[k - 1]) bond[k--] = 0;
    if (k < 1) break;
  }
  rep.residual = (rho - sum).norm() / std::max(1.0, rho.norm());

  const bool residual_ok = rep.residual <= tol.cert;
  const bool psd_ok = rep.min_factor_eig >= -tol.cert;
  rep.pass = residual_ok && psd_ok;
  if (!psd_ok)
    rep.message = "factor " + std::to_string(rep.factor) + " min eigenvalue " + short_double(rep.min_factor_eig) +
                  " (site " + std::to_string(rep.site + 1) + ", bond " + std::to_string(rep.left) + "," +
                  std::to_string(rep.right) + ")";
  if (!residual_ok)
    rep.message += (rep.message.empty() ? "" : "; ") + std::string("residual ") + short_double(rep.residual) +
                   " exceeds " + short_double(tol.cert);
  if (rep.pass) rep.message = "ok";
  return rep;
}

namespace detail {

/// Splits a family rho_i = sum_a L_a (x) X[i][a] sharing the left blocks L_a
/// into rho_i = sum_j sigma_j (x) tau[i][j] with sigma_j = sum_a lambda[j][a] L_a
/// PSD of unit trace and tau PSD.
struct FamilySplit {
  std::vector<RVector> lambda;
  std::vector<std::vector<CMatrix>> tau;
  CutMetadata meta;
};

inline FamilySplit split_family(const std::vector<CMatrix>& left, const std::vector<std::vector<CMatrix>>& right,
                                const Tolerances& tol) {
  const int bond = static_cast<int>(left.size());
  if (bond > 2) fail(Errc::RankTooHigh, "bond dimension " + std::to_string(bond) + " exceeds 2");
  const RankCheck rank = lin_independent(left, tol.rank);
  FamilySplit out;

  if (rank.rank == 0) fail(Errc::DegenerateInput, "the operator is zero");
  if (rank.rank == 1) {
    out.meta.folded = true;
    out.meta.kind = ConeKind::SingleRay;
    std::size_t pivot = 0;
    for (std::size_t a = 1; a < left.size(); ++a)
      if (left[a].norm() > left[pivot].norm()) pivot = a;
    const std::vector<CMatrix> basis{left[pivot]};
    const double tr = left[pivot].trace().real();
    if (std::abs(tr) <= tol.pd * scale_of(left[pivot])) fail(Errc::NotPSDInput, "left factor has zero trace");
    const double mu = 1.0 / tr;  // sigma = mu * L_pivot, unit trace
    RVector lam = RVector::Zero(bond);
    lam(static_cast<Index>(pivot)) = mu;
    out.lambda.push_back(lam);
    out.meta.rays.push_back(lam.size() == 2 ? Ray(lam(0), lam(1)).normalized() : Ray(1.0, 0.0));
    std::vector<double> coeff(static_cast<std::size_t>(bond));
    for (int a = 0; a < bond; ++a) coeff[a] = real_least_squares(basis, left[a]).coefficients(0);
    for (const auto& member : right) {
      CMatrix t = CMatrix::Zero(member.front().rows(), member.front().cols());
      for (int a = 0; a < bond; ++a) t += coeff[a] * member[a];
      out.tau.push_back({hermitian_part(t) / mu});
    }
    return out;
  }

  const HermMatrix a = HermMatrix::hermitian_part_of(left[0]);
  const HermMatrix b = HermMatrix::hermitian_part_of(left[1]);
  std::vector<PencilPoint> points;
  for (const auto& member : right) {
    const auto pts = compression_points(a, b, HermMatrix::hermitian_part_of(member[0]),
                                        HermMatrix::hermitian_part_of(member[1]), tol);
    points.insert(points.end(), pts.begin(), pts.end());
  }
  const ConeResult cone = cone_from_points(a, b, points, tol);
  out.meta.kind = cone.cone.kind;
  out.meta.trace = cone.trace;
  out.meta.rays = cone.cone.rays;
  if (cone.cone.kind == ConeKind::Zero) fail(Errc::DegenerateInput, "spectrahedral cone is {0}");

  std::vector<double> traces;
  for (const Ray& r : cone.cone.rays) {
    const double t = r.x() * left[0].trace().real() + r.y() * left[1].trace().real();
    if (!(t > 0.0)) fail(Errc::NotPSDInput, "extreme ray gives a factor with nonpositive trace");
    traces.push_back(t);
    out.lambda.push_back(RVector(Eigen::Vector2d(r / t)));
  }

  for (const auto& member : right) {
    const HermMatrix c = HermMatrix::hermitian_part_of(member[0]);
    const HermMatrix d = HermMatrix::hermitian_part_of(member[1]);
    if (cone.cone.kind == ConeKind::Simplex) {
      const HPair h = solve_H(c, d, cone.cone.rays[0], cone.cone.rays[1], tol);
      out.tau.push_back({h.h1.mat() * traces[0], h.h2.mat() * traces[1]});
    } else {
      const Ray& w = cone.cone.rays[0];
      const CMatrix t = (w.x() * c.mat() + w.y() * d.mat()) / w.squaredNorm();
      out.tau.push_back({t * traces[0]});
    }
  }
  return out;
}

inline void fill_statistics(SepCertificate& cert, const CMatrix& rho) {
  const MpdoCores& m = cert.decomposition;
  cert.residual = (rho - dense_from_mpdo(m, cert.tolerances.dense_limit)).norm() / std::max(1.0, rho.norm());
  cert.min_factor_eig = std::numeric_limits<double>::infinity();
  for (const auto& site : m.cores)
    for (const auto& f : site)
      cert.min_factor_eig = std::min(cert.min_factor_eig, herm_eigenvalues(HermMatrix::hermitian_part_of(f))(0));
}

inline SepCertificate finalize(SepCertificate cert, const CMatrix& rho) {
  fill_statistics(cert, rho);
  const VerifyReport rep = verify_certificate(cert, rho);
  if (!rep.pass) fail(Errc::VerificationFailed, "constructed certificate fails verification: " + rep.message);
  return cert;
}

/// Induction from the right over a chain with Hermitian cores of bond <= 2.
/// Level m treats sites 0..m-1 as a family sharing the left blocks of
/// sites 0..m-2; each split leaves at most two members for the next level.
inline SepCertificate induct(const MpdoCores& m, const CMatrix& rho, const Tolerances& tol) {
  const int n = m.sites();
  std::vector<std::vector<std::vector<CMatrix>>> site_out(static_cast<std::size_t>(n));  // [site][left][right]
  std::vector<CutMetadata> meta;

  std::vector<std::vector<CMatrix>> family(1);
  for (int a = 0; a < m.left_bond(n - 1); ++a) family[0].push_back(hermitian_part(m.core(n - 1, a, 0)));

  for (int level = n; level >= 2; --level) {
    const int site = level - 1;
    const int cut = level - 2;
    std::vector<CMatrix> left = left_blocks(m, cut);
    for (auto& l : left) l = hermitian_part(l);
    FamilySplit split = split_family(left, family, tol);
    split.meta.cut = cut;
    meta.push_back(split.meta);

    const std::size_t members = family.size();
    const std::size_t terms = split.lambda.size();
    auto& out = site_out[static_cast<std::size_t>(site)];
    out.assign(terms, std::vector<CMatrix>(members));
    for (std::size_t i = 0; i < members; ++i)
      for (std::size_t j = 0; j < terms; ++j) out[j][i] = split.tau[i][j];

    std::vector<std::vector<CMatrix>> next(terms);
    for (std::size_t j = 0; j < terms; ++j)
      for (int ap = 0; ap < m.left_bond(cut); ++ap) {
        CMatrix acc = CMatrix::Zero(m.dims[cut], m.dims[cut]);
        for (int a = 0; a < m.right_bond(cut); ++a) acc += split.lambda[j](a) * m.core(cut, ap, a);
        next[j].push_back(hermitian_part(acc));
      }
    family = std::move(next);
  }
  auto& first = site_out[0];
  first.assign(1, std::vector<CMatrix>(family.size()));
  for (std::size_t j = 0; j < family.size(); ++j) first[0][j] = family[j][0];

  std::vector<int> bonds;
  for (int l = 0; l + 1 < n; ++l) bonds.push_back(static_cast<int>(site_out[l].front().size()));
  SepCertificate cert;
  cert.tolerances = tol;
  cert.decomposition = MpdoCores::zeros(m.dims, bonds);
  cert.decomposition.hermitian = true;
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < cert.decomposition.left_bond(l); ++a)
      for (int b = 0; b < cert.decomposition.right_bond(l); ++b) cert.decomposition.core(l, a, b) = site_out[l][a][b];
  std::reverse(meta.begin(), meta.end());
  cert.cone_metadata = std::move(meta);
  return finalize(std::move(cert), rho);
}

}  // namespace detail

inline SepCertificate separate_pencil(const HermitianPencil& pen, const Tolerances& tol = {}) {
  if (pen.a.dim() != pen.b.dim() || pen.c.dim() != pen.d.dim()) fail(Errc::DimensionMismatch, "pencil dimensions differ");
  const CMatrix rho = pen.contract();
  require_psd_state(rho, tol);
  MpdoCores m = MpdoCores::zeros({static_cast<int>(pen.a.dim()), static_cast<int>(pen.c.dim())}, {2});
  m.core(0, 0, 0) = pen.a.mat();
  m.core(0, 0, 1) = pen.b.mat();
  m.core(1, 0, 0) = pen.c.mat();
  m.core(1, 1, 0) = pen.d.mat();
  m.hermitian = true;
  return detail::induct(m, rho, tol);
}

/// Product certificate sigma (x) tau with unit-trace sigma.
inline SepCertificate product_certificate(const CMatrix& rho, int d1, int d2, const Tolerances& tol) {
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) fail(Errc::NotPSDInput, "state has nonpositive trace");
  SepCertificate cert;
  cert.tolerances = tol;
  cert.decomposition = MpdoCores::zeros({d1, d2}, {1});
  cert.decomposition.hermitian = true;
  cert.decomposition.core(0, 0, 0) = hermitian_part(partial_trace_second(rho, d1, d2)) / tr;
  cert.decomposition.core(1, 0, 0) = hermitian_part(partial_trace_first(rho, d1, d2));
  CutMetadata meta;
  meta.folded = true;
  meta.kind = ConeKind::SingleRay;
  cert.cone_metadata.push_back(meta);
  return detail::finalize(std::move(cert), rho);
}

inline SepCertificate separate_bipartite(const CMatrix& rho, int d1, int d2, const Tolerances& tol = {}) {
  require_bipartite_dims(rho, d1, d2);
  require_dense_limit(static_cast<std::size_t>(rho.rows()), tol.dense_limit);
  require_psd_state(rho, tol);
  const CMatrix h = hermitian_part(rho);
  const PairDecomposition dec = operator_schmidt(h, d1, d2, tol);
  switch (dec.size()) {
    case 0: fail(Errc::DegenerateInput, "the zero operator has no certificate");
    case 1: return product_certificate(h, d1, d2, tol);
    case 2: break;
    default:
      fail(Errc::RankTooHigh,
           "operator Schmidt rank " + std::to_string(dec.size()) + " is above 2; no certificate is attempted");
  }
  const HermitianPencil pen = step1_hermitian_pencil(dec, tol);
  SepCertificate cert = separate_pencil(pen, tol);
  return detail::finalize(std::move(cert), h);
}

/// Separates the contraction of Hermitian cores with bond dimensions at most 2.
inline SepCertificate separate_mpdo(const MpdoCores& cores, const Tolerances& tol = {}) {
  cores.validate();
  if (!cores.all_cores_hermitian(tol.herm)) fail(Errc::NotHermitianCores, "cores are not Hermitian");
  for (std::size_t k = 0; k < cores.bond_dims.size(); ++k)
    if (cores.bond_dims[k] > 2)
      fail(Errc::RankTooHigh, "bond " + std::to_string(k + 1) + " has dimension " + std::to_string(cores.bond_dims[k]));
  MpdoCores m = cores;
  for (auto& site : m.cores)
    for (auto& c : site) c = hermitian_part(c);
  m.hermitian = true;
  const CMatrix rho = dense_from_mpdo(m, tol.dense_limit);
  require_psd_state(rho, tol);
  if (rho.norm() == 0.0) fail(Errc::DegenerateInput, "the zero operator has no certificate");
  return detail::induct(m, rho, tol);
}

struct CminWitness {
  std::vector<Ray> vectors;
  std::vector<CMatrix> psd_matrices;
  CMatrix q1, q2;
};

/// Expresses each left factor of a bipartite certificate in the basis
/// (A, B); the coefficient vectors must lie in S(A, B).
inline CminWitness cmin_witness(const HermitianPencil& pen, const SepCertificate& cert, const Tolerances& tol = {}) {
  const MpdoCores& m = cert.decomposition;
  if (m.sites() != 2) fail(Errc::DimensionMismatch, "witness needs a bipartite certificate");
  if (m.dims[0] != pen.a.dim() || m.dims[1] != pen.c.dim()) fail(Errc::DimensionMismatch, "certificate and pencil dims differ");
  const std::vector<CMatrix> basis{pen.a.mat(), pen.b.mat()};
  CminWitness w;
  w.q1 = pen.c.mat();
  w.q2 = pen.d.mat();
  CMatrix r1 = CMatrix::Zero(w.q1.rows(), w.q1.cols());
  CMatrix r2 = r1;
  for (int j = 0; j < m.bond_dims[0]; ++j) {
    const CMatrix& sigma = m.core(0, 0, j);
    const RealFit fit = real_least_squares(basis, sigma);
    if (fit.residual > tol.recon * scale_of(sigma))
      fail(Errc::FactorsOutsideSpan, "factor " + std::to_string(j) + " is outside span{A, B} (residual " +
                                         std::to_string(fit.residual) + ")");
    const Ray v(fit.coefficients(0), fit.coefficients(1));
    if (!ray_in_cone(pen.a, pen.b, v, tol.cert))
      fail(Errc::VerificationFailed, "coefficient vector " + std::to_string(j) + " is outside the cone");
    w.vectors.push_back(v);
    w.psd_matrices.push_back(m.core(1, j, 0));
    r1 += v.x() * m.core(1, j, 0);
    r2 += v.y() * m.core(1, j, 0);
  }
  const double err = std::max((r1 - w.q1).norm(), (r2 - w.q2).norm());
  if (err > tol.cert * std::max(1.0, w.q1.norm() + w.q2.norm()))
    fail(Errc::VerificationFailed, "witness does not reproduce (C, D) (error " + std::to_string(err) + ")");
  return w;
}

}  // namespace sepcert
