#pragma once

// The planar spectrahedral cone S(A, B) = {(x, y) : xA + yB >= 0} and its
// extreme rays.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrix_kernel.hpp"

namespace sepcert {

using Ray = Eigen::Vector2d;

enum class ConeKind { Simplex, SingleRay, Zero };

inline std::string_view to_string(ConeKind k) {
  switch (k) {
    case ConeKind::Simplex: return "simplex";
    case ConeKind::SingleRay: return "single-ray";
    case ConeKind::Zero: return "zero";
  }
  return "unknown";
}

/// Which route produced the rays.
enum class ConeCase {
  Case1,       // a positive definite compression was available
  Case2Pairs,  // two independent singular compressions, no joint kernel
  Case2Split,  // joint kernel split off, then Case1 on the complement
};

inline std::string_view to_string(ConeCase c) {
  switch (c) {
    case ConeCase::Case1: return "case1";
    case ConeCase::Case2Pairs: return "case2-pairs";
    case ConeCase::Case2Split: return "case2-split";
  }
  return "unknown";
}

/// Rays have unit length, lie in the cone, and are sorted lexicographically.
struct Cone2 {
  ConeKind kind = ConeKind::Zero;
  std::vector<Ray> rays;
};

struct ConeTrace {
  int compression_index = -1;  // first PD compression, or the singular one used
  ConeCase path = ConeCase::Case1;
  double epsilon = 0.0;        // perturbation used on the parallel Case 2 route
  int kernel_dim = 0;          // dimension of the joint kernel that was split off
  bool refined = false;        // rays recomputed from the interior point u + v
};

struct ConeResult {
  Cone2 cone;
  ConeTrace trace;
};

struct PencilPoint {
  double c = 0.0;
  double d = 0.0;
};

inline ConeKind classify_cone(const Cone2& cone) {
  switch (cone.rays.size()) {
    case 0: return ConeKind::Zero;
    case 1: return ConeKind::SingleRay;
    default: return ConeKind::Simplex;
  }
}

inline HermMatrix pencil_at(const HermMatrix& a, const HermMatrix& b, double x, double y) {
  return real_combination(x, a, y, b);
}

inline double pencil_scale(const HermMatrix& a, const HermMatrix& b) {
  return std::max(1.0, a.norm() + b.norm());
}

/// lambda_min(xA + yB) >= -tol * max(1, ||A|| + ||B||) for a unit (x, y).
inline bool ray_in_cone(const HermMatrix& a, const HermMatrix& b, const Ray& r, double tol) {
  const Ray unit = r / r.norm();
  return herm_eigenvalues(pencil_at(a, b, unit.x(), unit.y()))(0) >= -tol * pencil_scale(a, b);
}

/// Diagonal pairs (C_ii, D_ii). Each compression C_ii A + D_ii B of a PSD
/// A (x) C + B (x) D is PSD; a failure means the operator was not PSD.
inline std::vector<PencilPoint> compression_points(const HermMatrix& a, const HermMatrix& b, const HermMatrix& c,
                                                   const HermMatrix& d, const Tolerances& tol = {}) {
  if (a.dim() != b.dim() || c.dim() != d.dim()) fail(Errc::DimensionMismatch, "pencil dimensions differ");
  std::vector<PencilPoint> pts;
  for (Index i = 0; i < c.dim(); ++i) {
    const PencilPoint p{c.mat()(i, i).real(), d.mat()(i, i).real()};
    const double lmin = herm_eigenvalues(pencil_at(a, b, p.c, p.d))(0);
    if (lmin < -tol.cert * std::max(1.0, std::hypot(p.c, p.d)) * pencil_scale(a, b))
      fail(Errc::CompressionNotPSD,
           "compression " + std::to_string(i) + " has eigenvalue " + std::to_string(lmin));
    pts.push_back(p);
  }
  return pts;
}

/// P with P^dagger (cA + dB) P = I and the transformed pencil.
struct PencilNormalization {
  CMatrix p;
  CMatrix a_tilde;
  CMatrix b_tilde;
};

inline PencilNormalization normalize_pencil(const HermMatrix& a, const HermMatrix& b, double c, double d,
                                            double pd_tol) {
  PencilNormalization n;
  n.p = congruence_normalizer(pencil_at(a, b, c, d), pd_tol);
  n.a_tilde = n.p.adjoint() * a.mat() * n.p;
  n.b_tilde = n.p.adjoint() * b.mat() * n.p;
  return n;
}

namespace detail {

inline void canonicalize(Cone2& cone) {
  for (auto& r : cone.rays) r /= r.norm();
  std::sort(cone.rays.begin(), cone.rays.end(),
            [](const Ray& x, const Ray& y) { return x.x() < y.x() || (x.x() == y.x() && x.y() < y.y()); });
  cone.kind = classify_cone(cone);
}

inline bool is_pd(const HermMatrix& h, double pd_tol) {
  return h.dim() > 0 && herm_eigenvalues(h)(0) > pd_tol * scale_of(h.mat());
}

/// Rays from a positive definite compression at (c, d). With
/// N = c B~ - d A~ the two boundary directions are where lambda_min(N) and
/// lambda_max(N) are attained.
inline Cone2 case1_once(const HermMatrix& a, const HermMatrix& b, double c, double d, const Tolerances& tol) {
  const PencilNormalization n = normalize_pencil(a, b, c, d, tol.pd);
  const RVector ev = herm_eigenvalues(HermMatrix::hermitian_part_of(c * n.b_tilde - d * n.a_tilde));
  const double lmin = ev(0);
  const double lmax = ev(ev.size() - 1);
  Cone2 cone;
  if (std::abs(lmax - lmin) <= 1e-9 * std::max(1.0, std::abs(lmax) + std::abs(lmin))) {
    cone.rays.push_back(Ray(c, d));
  } else {
    cone.rays.push_back(-Ray(lmin * c + d, lmin * d - c));
    cone.rays.push_back(Ray(lmax * c + d, lmax * d - c));
  }
  canonicalize(cone);
  return cone;
}

/// Case 1, recomputed once from the interior point u + v when the initial
/// compression sits close to the boundary.
inline Cone2 case1(const HermMatrix& a, const HermMatrix& b, double c, double d, const Tolerances& tol,
                   bool& refined) {
  Cone2 cone = case1_once(a, b, c, d, tol);
  refined = false;
  if (cone.kind != ConeKind::Simplex) return cone;
  const Ray mid = cone.rays[0] + cone.rays[1];
  if (mid.norm() > 1e-6 && is_pd(pencil_at(a, b, mid.x(), mid.y()), tol.pd)) {
    const Cone2 again = case1_once(a, b, mid.x(), mid.y(), tol);
    if (again.kind == ConeKind::Simplex) {
      refined = true;
      return again;
    }
  }
  return cone;
}

/// Orthonormal complement of the joint kernel of A and B, read off from a
/// PSD point w of the cone whose kernel is exactly the joint kernel.
inline std::optional<CMatrix> joint_kernel_complement(const HermMatrix& a, const HermMatrix& b, double x, double y,
                                                      const Tolerances& tol, int& kernel_dim) {
  const HermMatrix m = pencil_at(a, b, x, y);
  if (!is_psd(m, tol.pd).psd) return std::nullopt;
  const CMatrix k = kernel_basis(m, tol.rank);
  kernel_dim = static_cast<int>(k.cols());
  if (k.cols() == 0) return CMatrix();
  const double leak = std::max((a.mat() * k).norm(), (b.mat() * k).norm());
  if (leak > tol.cert * pencil_scale(a, b)) return std::nullopt;
  const CMatrix q = range_basis(m, tol.rank);
  if (q.cols() == 0) return std::nullopt;
  return q;
}

inline HermMatrix compress(const HermMatrix& h, const CMatrix& q) {
  return HermMatrix::hermitian_part_of(q.adjoint() * h.mat() * q);
}

}  // namespace detail

/// Extreme rays of S(A, B) given candidate interior points. The first point
/// with a positive definite compression drives Case 1; if none exists the
/// singular points are resolved by Case 2.
inline ConeResult cone_from_points(const HermMatrix& a, const HermMatrix& b, std::span<const PencilPoint> points,
                                   const Tolerances& tol = {}) {
  if (a.dim() != b.dim()) fail(Errc::DimensionMismatch, "pencil matrices differ in dimension");
  ConeResult res;
  if (a.norm() == 0.0 && b.norm() == 0.0) {
    res.cone.kind = ConeKind::Zero;
    return res;
  }
  const std::vector<CMatrix> ab{a.mat(), b.mat()};
  if (!lin_independent(ab, tol.rank).independent) fail(Errc::DependentPencil, "A and B are linearly dependent");

  auto finish = [&](ConeResult r) {
    for (const Ray& ray : r.cone.rays)
      if (!ray_in_cone(a, b, ray, tol.cert))
        fail(Errc::ConvergenceFailure, "computed ray (" + std::to_string(ray.x()) + ", " + std::to_string(ray.y()) +
                                           ") is outside the cone");
    return r;
  };

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (detail::is_pd(pencil_at(a, b, points[i].c, points[i].d), tol.pd)) {
      res.trace.compression_index = static_cast<int>(i);
      res.trace.path = ConeCase::Case1;
      res.cone = detail::case1(a, b, points[i].c, points[i].d, tol, res.trace.refined);
      return finish(res);
    }
  }

  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (std::hypot(points[i].c, points[i].d) > 0.0) nonzero.push_back(i);
  if (nonzero.empty()) {
    res.cone.kind = ConeKind::Zero;
    return res;
  }
  auto unit = [&](std::size_t i) { return Ray(points[i].c, points[i].d).normalized(); };

  // Reduces A, B to the complement of their joint kernel, then Case 1 from (x, y).
  auto split_and_solve = [&](double x, double y) -> std::optional<ConeResult> {
    int kdim = 0;
    const auto q = detail::joint_kernel_complement(a, b, x, y, tol, kdim);
    if (!q) return std::nullopt;
    ConeResult r = res;
    r.trace.kernel_dim = kdim;
    if (kdim == 0) return std::nullopt;
    const HermMatrix a2 = detail::compress(a, *q);
    const HermMatrix b2 = detail::compress(b, *q);
    if (!detail::is_pd(pencil_at(a2, b2, x, y), tol.pd)) return std::nullopt;
    r.trace.path = ConeCase::Case2Split;
    r.cone = detail::case1(a2, b2, x, y, tol, r.trace.refined);
    return r;
  };

  const std::size_t first = nonzero.front();
  std::optional<std::size_t> partner;
  for (std::size_t j : nonzero) {
    const Ray u = unit(first), v = unit(j);
    if (std::abs(u.x() * v.y() - u.y() * v.x()) > 1e-6) {
      partner = j;
      break;
    }
  }

  res.trace.compression_index = static_cast<int>(first);
  if (partner) {
    const Ray w = unit(first) + unit(*partner);
    if (detail::is_pd(pencil_at(a, b, w.x(), w.y()), tol.pd)) {
      res.trace.path = ConeCase::Case2Pairs;
      res.cone.rays = {unit(first), unit(*partner)};
      detail::canonicalize(res.cone);
      return finish(res);
    }
    if (auto r = split_and_solve(w.x(), w.y())) return finish(*r);
  }

  // All usable points parallel: step off the ray p sideways into the cone.
  const Ray p(points[first].c, points[first].d);
  const Ray side(-p.y(), p.x());
  for (double scale : {1e-6, 1e-8}) {
    const double eps = scale * p.norm();
    for (double sign : {1.0, -1.0}) {
      const Ray q = p + sign * scale * side;
      if (auto r = split_and_solve(q.x(), q.y())) {
        r->trace.epsilon = sign * eps;
        return finish(*r);
      }
    }
  }
  res.trace.path = ConeCase::Case2Split;
  res.cone.rays = {unit(first)};
  detail::canonicalize(res.cone);
  return finish(res);
}

inline ConeResult extreme_rays_traced(const HermMatrix& a, const HermMatrix& b, const HermMatrix& c,
                                      const HermMatrix& d, const Tolerances& tol = {}) {
  const std::vector<PencilPoint> pts = compression_points(a, b, c, d, tol);
  return cone_from_points(a, b, pts, tol);
}

inline Cone2 extreme_rays(const HermMatrix& a, const HermMatrix& b, const HermMatrix& c, const HermMatrix& d,
                          const Tolerances& tol = {}) {
  return extreme_rays_traced(a, b, c, d, tol).cone;
}

}  // namespace sepcert
