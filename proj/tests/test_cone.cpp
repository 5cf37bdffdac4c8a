#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace sepcert;
using namespace sepcert::testing;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::ParseError;
}

double lmin_at(const CMatrix& a, const CMatrix& b, const Ray& r) {
  return herm_eigenvalues(HermMatrix::hermitian_part_of(r.x() * a + r.y() * b))(0);
}

Ray rotate(const Ray& r, double angle) {
  return Ray(std::cos(angle) * r.x() - std::sin(angle) * r.y(), std::sin(angle) * r.x() + std::cos(angle) * r.y());
}

double cross(const Ray& u, const Ray& v) { return u.x() * v.y() - u.y() * v.x(); }

/// Rate at which lambda_min falls when the ray turns by a small angle in direction dir.
double boundary_slope(const CMatrix& a, const CMatrix& b, const Ray& r, double dir) {
  const EigSystem es = herm_eig(HermMatrix::hermitian_part_of(r.x() * a + r.y() * b));
  const CVector x = es.eigenvectors.col(0);
  const Ray t(-dir * r.y(), dir * r.x());
  return -(x.adjoint() * (t.x() * a + t.y() * b) * x)(0, 0).real();
}

/// Pencil with a positive definite A, so the cone has interior.
struct RandomPencil {
  HermMatrix a, b, c, d;
};

/// Pencil of a random two-term separable sum seen through a random real change of basis.
RandomPencil random_pd_pencil(Rng& rng, int d1, int d2) {
  const CMatrix s1 = random_psd(rng, d1, d1), s2 = random_psd(rng, d1, d1);
  const CMatrix t1 = random_psd(rng, d2, d2), t2 = random_psd(rng, d2, d2);
  std::normal_distribution<double> g;
  Eigen::Matrix2d m;
  do {
    m << g(rng), g(rng), g(rng), g(rng);
  } while (std::abs(m.determinant()) < 0.2);
  const Eigen::Matrix2d mi = m.inverse();
  // [A B] = [s1 s2] m and [C; D] = m^-1 [t1; t2]
  const CMatrix a = m(0, 0) * s1 + m(1, 0) * s2, b = m(0, 1) * s1 + m(1, 1) * s2;
  const CMatrix c = mi(0, 0) * t1 + mi(0, 1) * t2, d = mi(1, 0) * t1 + mi(1, 1) * t2;
  return {HermMatrix::hermitian_part_of(a), HermMatrix::hermitian_part_of(b), HermMatrix::hermitian_part_of(c),
          HermMatrix::hermitian_part_of(d)};
}

}  // namespace

TEST(CompressionPoints, ExamplePencil) {
  const HermMatrix i2(eye(2)), x(pauli_x());
  const auto pts = compression_points(i2, x, i2, x);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].c, 1.0);
  EXPECT_EQ(pts[0].d, 0.0);
}

TEST(CompressionPoints, IdentityRightFactors) {
  Rng rng(31);
  const HermMatrix a(random_psd(rng, 3)), b(random_psd(rng, 3));
  for (const auto& p : compression_points(a, b, HermMatrix(eye(3)), HermMatrix(eye(3)))) {
    EXPECT_EQ(p.c, 1.0);
    EXPECT_EQ(p.d, 1.0);
  }
}

TEST(CompressionPoints, RandomPsdInstancesArePsd) {
  Rng rng(32);
  for (int t = 0; t < 50; ++t) {
    const HermMatrix a(random_psd(rng, 3)), b(random_psd(rng, 3)), c(random_psd(rng, 4)), d(random_psd(rng, 4));
    for (const auto& p : compression_points(a, b, c, d))
      EXPECT_TRUE(is_psd(HermMatrix::hermitian_part_of(p.c * a.mat() + p.d * b.mat()), 1e-10).psd);
  }
}

TEST(CompressionPoints, NonPsdOperatorIsReported) {
  EXPECT_EQ(code_of([] {
              compression_points(HermMatrix(eye(2)), HermMatrix(pauli_z()), HermMatrix(eye(2)), HermMatrix(2.0 * eye(2)));
            }),
            Errc::CompressionNotPSD);
}

TEST(ExtremeRays, ExamplePencil) {
  const HermMatrix i2(eye(2)), x(pauli_x());
  const ConeResult r = extreme_rays_traced(i2, x, i2, x);
  ASSERT_EQ(r.cone.kind, ConeKind::Simplex);
  ASSERT_EQ(r.cone.rays.size(), 2u);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(r.cone.rays[0].x(), s, 1e-12);
  EXPECT_NEAR(r.cone.rays[0].y(), -s, 1e-12);
  EXPECT_NEAR(r.cone.rays[1].x(), s, 1e-12);
  EXPECT_NEAR(r.cone.rays[1].y(), s, 1e-12);
  EXPECT_EQ(r.trace.path, ConeCase::Case1);
  EXPECT_EQ(r.trace.compression_index, 0);
}

TEST(ExtremeRays, JointKernelSplit) {
  const HermMatrix a(diag({1, 0, 0})), b(diag({0, 1, 0})), c(eye(2)), d(eye(2));
  const ConeResult r = extreme_rays_traced(a, b, c, d);
  ASSERT_EQ(r.cone.kind, ConeKind::Simplex);
  EXPECT_EQ(r.trace.path, ConeCase::Case2Split);
  EXPECT_EQ(r.trace.kernel_dim, 1);
  EXPECT_NE(r.trace.epsilon, 0.0);
  EXPECT_NEAR(r.cone.rays[0].x(), 0.0, 1e-12);
  EXPECT_NEAR(r.cone.rays[0].y(), 1.0, 1e-12);
  EXPECT_NEAR(r.cone.rays[1].x(), 1.0, 1e-12);
  EXPECT_NEAR(r.cone.rays[1].y(), 0.0, 1e-12);
}

TEST(ExtremeRays, SingularCompressionsInsideTheCone) {
  // Both compressions are singular only through the joint kernel e3; they are
  // interior points of the quadrant, not extreme rays.
  CMatrix c(2, 2);
  c << 1, 1, 1, 2;
  const HermMatrix a(diag({1, 0, 0})), b(diag({0, 1, 0}));
  const ConeResult r = extreme_rays_traced(a, b, HermMatrix(c), HermMatrix(diag({2, 1})));
  ASSERT_EQ(r.cone.rays.size(), 2u);
  EXPECT_EQ(r.trace.path, ConeCase::Case2Split);
  EXPECT_NEAR(r.cone.rays[0].x(), 0.0, 1e-12);
  EXPECT_NEAR(r.cone.rays[1].y(), 0.0, 1e-12);
}

TEST(ExtremeRays, TwoIndependentBoundaryCompressions) {
  // A = diag(1, 0), B = diag(0, 1): C = diag(1, 0), D = diag(0, 1) gives
  // compressions (1, 0) and (0, 1), both singular, no joint kernel.
  const HermMatrix a(diag({1, 0})), b(diag({0, 1}));
  const ConeResult r = extreme_rays_traced(a, b, HermMatrix(diag({1, 0})), HermMatrix(diag({0, 1})));
  EXPECT_EQ(r.trace.path, ConeCase::Case2Pairs);
  ASSERT_EQ(r.cone.rays.size(), 2u);
  EXPECT_NEAR(r.cone.rays[0].y(), 1.0, 1e-15);
  EXPECT_NEAR(r.cone.rays[1].x(), 1.0, 1e-15);
}

TEST(ExtremeRays, DependentAndZeroPencils) {
  EXPECT_EQ(code_of([] {
              extreme_rays(HermMatrix(eye(2)), HermMatrix(2.0 * eye(2)), HermMatrix(eye(2)), HermMatrix(eye(2)));
            }),
            Errc::DependentPencil);
  const HermMatrix z(CMatrix::Zero(2, 2));
  EXPECT_EQ(extreme_rays(z, z, HermMatrix(eye(2)), HermMatrix(eye(2))).kind, ConeKind::Zero);
}

TEST(ClassifyCone, ThreePossibilities) {
  const HermMatrix i2(eye(2)), x(pauli_x());
  EXPECT_EQ(classify_cone(extreme_rays(i2, x, i2, x)), ConeKind::Simplex);
  EXPECT_EQ(classify_cone(Cone2{ConeKind::SingleRay, {Ray(1, 2).normalized()}}), ConeKind::SingleRay);
  EXPECT_EQ(classify_cone(Cone2{}), ConeKind::Zero);
}

TEST(ExtremeRays, NormalizationIdentityBeforeEigenvalues) {
  Rng rng(33);
  for (int t = 0; t < 50; ++t) {
    const RandomPencil p = random_pd_pencil(rng, 4, 3);
    const auto pts = compression_points(p.a, p.b, p.c, p.d);
    const PencilNormalization n = normalize_pencil(p.a, p.b, pts[0].c, pts[0].d, 1e-9);
    const CMatrix m = pts[0].c * n.a_tilde + pts[0].d * n.b_tilde;
    EXPECT_LT((m - eye(4)).norm(), 1e-10);
  }
}

TEST(ExtremeRays, RandomRaysValidAndSharp) {
  Rng rng(34);
  int literal_cases = 0, flat_cases = 0;
  for (int t = 0; t < 100; ++t) {
    const RandomPencil p = random_pd_pencil(rng, 2 + t % 4, 2 + t % 3);
    const Cone2 cone = extreme_rays(p.a, p.b, p.c, p.d);
    ASSERT_EQ(cone.kind, ConeKind::Simplex);
    const Ray u = cone.rays[0], v = cone.rays[1];
    const double scale = std::max(1.0, p.a.norm() + p.b.norm());
    EXPECT_NEAR(u.norm(), 1.0, 1e-14);
    EXPECT_GE(lmin_at(p.a.mat(), p.b.mat(), u), -1e-9 * scale);
    EXPECT_GE(lmin_at(p.a.mat(), p.b.mat(), v), -1e-9 * scale);
    for (double s : {0.25, 0.5, 0.75}) EXPECT_GE(lmin_at(p.a.mat(), p.b.mat(), s * u + (1 - s) * v), -1e-9 * scale);
    // rotating either ray away from the other by 10 * tol leaves the cone. That angle moves lambda_min by
    // only slope * 10 * tol, so on flat boundaries (slope below 0.2 * scale) it grows to keep a 2x margin
    // over tol and the check still pins the ray to the boundary at tol accuracy
    const double sign = cross(u, v) > 0 ? 1.0 : -1.0;
    const double tol = 1e-9;
    for (const auto& [ray, dir] : {std::pair{u, -sign}, std::pair{v, sign}}) {
      const double s = boundary_slope(p.a.mat(), p.b.mat(), ray, dir);
      const double h_scale = scale_of(ray.x() * p.a.mat() + ray.y() * p.b.mat());
      const bool literal = s >= 0.2 * h_scale;
      literal_cases += literal;
      const double angle = 10 * tol * (literal ? 1.0 : 0.2 * h_scale / s);
      const Ray out = rotate(ray, dir * angle);
      EXPECT_FALSE(is_psd(HermMatrix::hermitian_part_of(out.x() * p.a.mat() + out.y() * p.b.mat()), tol).psd)
          << "slope " << s << " scale " << h_scale;
      if (!literal) ++flat_cases;
    }
  }
  EXPECT_GE(literal_cases, 150) << flat_cases << " flat boundaries";
}

TEST(ExtremeRays, ScalingCovariance) {
  Rng rng(35);
  for (int t = 0; t < 20; ++t) {
    const RandomPencil p = random_pd_pencil(rng, 3, 3);
    const Cone2 ref = extreme_rays(p.a, p.b, p.c, p.d);
    for (double s : {1e-3, 7.0, 1e3}) {
      const Cone2 scaled = extreme_rays(HermMatrix(s * p.a.mat()), HermMatrix(s * p.b.mat()), p.c, p.d);
      ASSERT_EQ(scaled.rays.size(), ref.rays.size());
      for (std::size_t k = 0; k < ref.rays.size(); ++k) EXPECT_LT((scaled.rays[k] - ref.rays[k]).norm(), 1e-10);
    }
  }
}

TEST(ExtremeRays, PlantedJointKernelRaysValidForOriginalPencil) {
  Rng rng(36);
  for (int t = 0; t < 50; ++t) {
    const int d1 = 4 + t % 3;
    const int k = 1 + t % 2;
    // sigma_1, sigma_2 PSD sharing a k-dimensional kernel; tau PSD (scalars on odd t)
    const CMatrix u = random_unitary(rng, d1);
    CMatrix s1 = CMatrix::Zero(d1, d1), s2 = CMatrix::Zero(d1, d1);
    s1.topLeftCorner(d1 - k, d1 - k) = random_psd(rng, d1 - k, d1 - k);
    s2.topLeftCorner(d1 - k, d1 - k) = random_psd(rng, d1 - k, 1);
    s1 = u * s1 * u.adjoint();
    s2 = u * s2 * u.adjoint();
    const int d2 = t % 2 ? 1 : 3;
    const HermMatrix a = HermMatrix::hermitian_part_of(s1), b = HermMatrix::hermitian_part_of(s2);
    const HermMatrix c = HermMatrix::hermitian_part_of(random_psd(rng, d2));
    const HermMatrix d = HermMatrix::hermitian_part_of(random_psd(rng, d2));
    const ConeResult r = extreme_rays_traced(a, b, c, d);
    EXPECT_EQ(r.trace.path, ConeCase::Case2Split);
    EXPECT_EQ(r.trace.kernel_dim, k);
    ASSERT_EQ(r.cone.kind, ConeKind::Simplex);
    const double scale = std::max(1.0, a.norm() + b.norm());
    for (const Ray& ray : r.cone.rays) EXPECT_GE(lmin_at(a.mat(), b.mat(), ray), -1e-9 * scale);
    // (1, 0) and (0, 1) lie in the cone, so they must lie between the rays
    for (const Ray& inside : {Ray(1, 0), Ray(0, 1)}) {
      const double cu = cross(r.cone.rays[0], inside), cv = cross(inside, r.cone.rays[1]);
      EXPECT_GE(cu * cv, -1e-12);
    }
  }
}
