// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "test_support.hpp"

using namespace sepcert;
using namespace sepcert::testing;

namespace {

constexpr double kCertTol = 1e-8;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

Tolerances pinned() {
  Tolerances t;
  t.cert = kCertTol;
  return t;
}

bool valid(const SepCertificate& cert, const CMatrix& rho) {
  const VerifyReport r = verify_certificate(cert, rho, pinned());
  return r.pass && r.residual <= kCertTol && r.min_factor_eig >= -kCertTol;
}

CMatrix ket_proj(double a, double b) {
  CVector v(2);
  v << a, b;
  v.normalize();
  return v * v.adjoint();
}

bool positively_proportional(const CMatrix& x, const CMatrix& y, double tol) {
  const Complex c = (y.adjoint() * x).trace() / y.squaredNorm();
  return std::abs(c.imag()) < tol && c.real() > 0 && (x - c.real() * y).norm() < tol * std::max(1.0, x.norm());
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// A (x) C + B (x) D with random Hermitian factors, resampled until the sum is PSD with osr 2.
CMatrix rejection_sampled_pencil(Rng& rng, int d1, int d2) {
  while (true) {
    const CMatrix a = eye(d1) + uniform(rng, 0.0, 0.5) * random_hermitian(rng, d1);
    const CMatrix c = eye(d2) + uniform(rng, 0.0, 0.5) * random_hermitian(rng, d2);
    const double s = uniform(rng, 0.05, 1.0);
    const CMatrix rho = kron(a, c) + s * kron(random_hermitian(rng, d1), random_hermitian(rng, d2));
    if (is_psd(HermMatrix::hermitian_part_of(rho), 0.0).psd && operator_schmidt_rank(rho, d1, d2) == 2) return rho;
  }
}

/// Real invertible change of basis on every bond; keeps cores Hermitian but not PSD.
MpdoCores real_gauge(Rng& rng, MpdoCores m) {
  std::normal_distribution<double> g;
  for (int k = 0; k + 1 < m.sites(); ++k) {
    const int b = m.bond_dims[k];
    RMatrix x(b, b);
    do {
      for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    } while (std::abs(x.determinant()) < 0.3);
    const RMatrix xi = x.inverse();
    MpdoCores next = m;
    for (int l = 0; l < m.left_bond(k); ++l)
      for (int r = 0; r < b; ++r) {
        CMatrix s = CMatrix::Zero(m.dims[k], m.dims[k]);
        for (int q = 0; q < b; ++q) s += x(q, r) * m.core(k, l, q);
        next.core(k, l, r) = s;
      }
    for (int l = 0; l < b; ++l)
      for (int r = 0; r < m.right_bond(k + 1); ++r) {
        CMatrix s = CMatrix::Zero(m.dims[k + 1], m.dims[k + 1]);
        for (int q = 0; q < b; ++q) s += xi(l, q) * m.core(k + 1, q, r);
        next.core(k + 1, l, r) = s;
      }
    m = std::move(next);
  }
  return m;
}

/// Local dims in {2, 3} with total dimension inside the dense limit.
std::vector<int> random_dims(Rng& rng, int n, std::size_t limit) {
  while (true) {
    std::vector<int> dims(n);
    std::size_t total = 1;
    for (int& d : dims) total *= (d = uniform_int(rng, 2, 3));
    if (total <= limit) return dims;
  }
}

int matrix_rank(const RMatrix& m) {
  const Eigen::JacobiSVD<RMatrix> s(m);
  int r = 0;
  for (Index i = 0; i < s.singularValues().size(); ++i) r += s.singularValues()(i) > 1e-9 * s.singularValues()(0);
  return r;
}

RMatrix random_nonneg(Rng& rng, int rows, int cols, int r) {
  RMatrix w(rows, r), h(r, cols);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, 0.0, 1.0);
  for (Index i = 0; i < h.size(); ++i) h.data()[i] = uniform(rng, 0.0, 1.0);
  return w * h;
}

// ---- criteria ----

Outcome golden_example() {
  Outcome o;
  const double s = 1 / std::sqrt(2.0);
  const Cone2 cone = extreme_rays(HermMatrix(eye(2)), HermMatrix(pauli_x()), HermMatrix(eye(2)), HermMatrix(pauli_x()));
  o.require(cone.kind == ConeKind::Simplex && cone.rays.size() == 2, "cone is not a two-ray simplex");
  if (!o.pass) return o;
  o.require((cone.rays[0] - Ray(s, -s)).norm() <= 1e-12 && (cone.rays[1] - Ray(s, s)).norm() <= 1e-12,
            "rays differ from (1,-1)/sqrt2, (1,1)/sqrt2");
  const CMatrix rho = example_pair_state();
  const SepCertificate cert = separate_bipartite(rho, 2, 2, pinned());
  const VerifyReport rep = verify_certificate(cert, rho, pinned());
  o.require(rep.residual <= 1e-10, "residual " + std::to_string(rep.residual));
  o.require(cert.terms() == 2, "certificate does not have two terms");
  if (!o.pass) return o;
  const CMatrix minus = ket_proj(1, -1), plus = ket_proj(1, 1);
  int matched = 0;
  for (int j = 0; j < 2; ++j) {
    const CMatrix& sj = cert.decomposition.core(0, 0, j);
    const CMatrix& tj = cert.decomposition.core(1, j, 0);
    if (positively_proportional(sj, minus, 1e-10) && positively_proportional(tj, eye(2) - pauli_x(), 1e-10)) ++matched;
    if (positively_proportional(sj, plus, 1e-10) && positively_proportional(tj, eye(2) + pauli_x(), 1e-10)) ++matched;
  }
  o.require(matched == 2, "factors are not |-><-| (x) (I - X) and |+><+| (x) (I + X)");
  o.detail = "rays exact to 1e-12, residual " + short_double(rep.residual);
  return o;
}

struct Instance {
  CMatrix rho;
  int d1, d2;
};

std::vector<Instance> completeness_instances() {
  Rng rng(1001);
  std::vector<Instance> out;
  for (int t = 0; t < 500; ++t) {
    const int d1 = uniform_int(rng, 2, 6), d2 = uniform_int(rng, 2, 7);
    if (t % 2 == 0) {
      const CMatrix rho = kron(random_psd(rng, d1), random_psd(rng, d2)) + kron(random_psd(rng, d1), random_psd(rng, d2));
      out.push_back({rho, d1, d2});
    } else {
      out.push_back({rejection_sampled_pencil(rng, d1, d2), d1, d2});
    }
  }
  // small shapes for the PPT oracle
  for (int t = 0; t < 100; ++t) {
    const int d1 = t % 2 ? 3 : 2;
    if (t % 4 < 2)
      out.push_back({kron(random_psd(rng, d1), random_psd(rng, 2)) + kron(random_psd(rng, d1), random_psd(rng, 2)), d1, 2});
    else
      out.push_back({rejection_sampled_pencil(rng, d1, 2), d1, 2});
  }
  return out;
}

Outcome completeness(const std::vector<Instance>& inst) {
  Outcome o;
  int ok = 0;
  for (std::size_t k = 0; k < 500; ++k) {
    try {
      if (valid(separate_bipartite(inst[k].rho, inst[k].d1, inst[k].d2, pinned()), inst[k].rho)) ++ok;
      else o.require(false, "instance " + std::to_string(k) + " failed verification");
    } catch (const Error& e) {
      o.require(false, "instance " + std::to_string(k) + ": " + e.what());
    }
  }
  o.detail = std::to_string(ok) + "/500 certified" + (o.pass ? "" : "; first failure: " + o.detail);
  return o;
}

Outcome ppt_agreement(const std::vector<Instance>& inst) {
  Outcome o;
  int small = 0;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    const auto& x = inst[k];
    if (!((x.d1 == 2 && x.d2 == 2) || (x.d1 == 3 && x.d2 == 2))) continue;
    ++small;
    bool certified = false;
    try {
      certified = valid(separate_bipartite(x.rho, x.d1, x.d2, pinned()), x.rho);
    } catch (const Error&) {
    }
    o.require(certified, "small instance " + std::to_string(k) + " has no certificate");
    o.require(ppt_check(x.rho, x.d1, x.d2).ppt, "certified instance " + std::to_string(k) + " fails PPT");
  }
  Rng rng(1003);
  int entangled = 0, min_osr = 100;
  while (entangled < 200) {
    const CMatrix rho = random_psd(rng, 4, uniform_int(rng, 1, 4));
    if (ppt_check(rho, 2, 2).ppt) continue;
    ++entangled;
    const int osr = operator_schmidt_rank(rho, 2, 2);
    min_osr = std::min(min_osr, osr);
    o.require(osr >= 3, "entangled state with osr " + std::to_string(osr));
  }
  const std::string summary = std::to_string(small) + " small certified states PPT; 200 entangled states, min osr " +
                              std::to_string(min_osr);
  o.detail = o.pass ? summary : summary + "; " + o.detail;
  return o;
}

Outcome chains() {
  Outcome o;
  Rng rng(1004);
  const Tolerances tol = pinned();
  int ok = 0, total = 0;
  auto check = [&](const MpdoCores& m, const std::string& label) {
    ++total;
    try {
      const CMatrix rho = dense_from_mpdo(m, tol.dense_limit);
      const SepCertificate cert = separate_mpdo(m, tol);
      bool good = valid(cert, rho);
      for (int b : cert.decomposition.bond_dims) good = good && b <= 2;
      for (int l = 1; l + 1 < cert.decomposition.sites(); ++l) good = good && cert.decomposition.cores[l].size() <= 4;
      if (good) ++ok;
      else o.require(false, label + " gave an invalid certificate");
    } catch (const Error& e) {
      o.require(false, label + ": " + e.what());
    }
  };
  for (int n = 3; n <= 6; ++n)
    for (int t = 0; t < 50; ++t) {
      const MpdoCores m = real_gauge(rng, random_psd_chain(rng, random_dims(rng, n, tol.dense_limit)));
      check(m, "n=" + std::to_string(n) + " #" + std::to_string(t));
    }
  MpdoCores ghz = MpdoCores::zeros({2, 2, 2}, {2, 2});
  ghz.core(0, 0, 0) = 0.5 * eye(2);
  ghz.core(0, 0, 1) = 0.5 * pauli_x();
  ghz.core(1, 0, 0) = eye(2);
  ghz.core(1, 1, 1) = pauli_x();
  ghz.core(2, 0, 0) = eye(2);
  ghz.core(2, 1, 0) = pauli_x();
  ghz.hermitian = true;
  check(ghz, "GHZ-X");
  o.require(o.pass && (dense_from_mpdo(ghz) - ghz_x_state()).norm() < 1e-15, "GHZ-X cores do not match the state");
  const std::string summary = std::to_string(ok) + "/" + std::to_string(total) + " chains certified (n = 3..6 and GHZ-X)";
  o.detail = o.pass ? summary : summary + "; " + o.detail;
  return o;
}

Outcome hermitization_counts() {
  Outcome o;
  Rng rng(1005);
  for (int t = 0; t < 200; ++t) {
    const int d1 = 2 + t % 3, d2 = 2 + (t / 3) % 3;
    const int r = 1 + t % std::min(4, std::min(d1 * d1, d2 * d2));
    std::vector<CMatrix> h, k;
    for (int a = 0; a < r; ++a) {
      h.push_back(random_hermitian(rng, d1));
      k.push_back(random_hermitian(rng, d2));
    }
    const CMatrix g = random_invertible(rng, r), gi = g.inverse();
    PairDecomposition dec{d1, d2, {}, true};
    for (int b = 0; b < r; ++b) {
      CMatrix p = CMatrix::Zero(d1, d1), q = CMatrix::Zero(d2, d2);
      for (int a = 0; a < r; ++a) {
        p += g(a, b) * h[a];
        q += gi(b, a) * k[a];
      }
      dec.pairs.push_back({p, q});
    }
    const PairDecomposition out = hermitize_bipartite(dec);
    o.require(out.size() == dec.size(), "bipartite instance " + std::to_string(t) + " changed the term count");
    o.require((out.contract() - dec.contract()).norm() <= 1e-9 * scale_of(dec.contract()),
              "bipartite instance " + std::to_string(t) + " changed the operator");
  }
  int adversarial = 0, independent = 0;
  for (int t = 0; t < 60; ++t) {
    const int n = 3 + t % 3;
    std::vector<int> dims(n, 2);
    const int d = 1 + t % 2;
    const MpdoCores m = random_gauge(rng, inflate_bond(random_hermitian_chain(rng, dims, d), t % (n - 1)));
    const HermitizeResult r = hermitize_mpdo(m);
    const CMatrix rho = dense_from_mpdo(m);
    for (std::size_t k = 0; k < m.bond_dims.size(); ++k)
      o.require(r.cores.bond_dims[k] <= (1 << (n - 1)) * m.bond_dims[k], "adversarial bond above 2^(n-1) D");
    o.require(r.cores.all_cores_hermitian(1e-12), "adversarial cores not Hermitian");
    o.require((dense_from_mpdo(r.cores) - rho).norm() <= 1e-9 * scale_of(rho), "adversarial contraction changed");
    ++adversarial;

    const MpdoCores g = random_gauge(rng, random_hermitian_chain(rng, dims, 2));
    const HermitizeResult rg = hermitize_mpdo(g);
    o.require(rg.cores.bond_dims == g.bond_dims, "independent chain changed bond dims");
    o.require(rg.cores.all_cores_hermitian(1e-12), "independent cores not Hermitian");
    o.require((dense_from_mpdo(rg.cores) - dense_from_mpdo(g)).norm() <= 1e-9 * scale_of(dense_from_mpdo(g)),
              "independent contraction changed");
    ++independent;
  }
  const std::string summary = "200 bipartite kept count; " + std::to_string(adversarial) + " adversarial within 2^(n-1) D; " +
                              std::to_string(independent) + " independent kept D";
  o.detail = o.pass ? summary : summary + "; " + o.detail;
  return o;
}

Outcome channel() {
  Outcome o;
  const ChannelRep ch{2, 2, {{0.5 * eye(2), eye(2)}, {0.5 * pauli_x(), pauli_x()}}};
  const EbResult r = eb_check_rank2(ch, pinned());
  o.require(r.verdict == EbVerdict::EB && r.cert.has_value(), "channel not certified EB");
  if (!o.pass) return o;
  const CMatrix choi = choi_from_channel(ch);
  o.require(valid(*r.cert, choi), "certificate fails on the recomputed Choi matrix");
  const CMatrix ex = example_pair_state();
  const double norm = ex.trace().real() / choi.trace().real();
  const double entry = (norm * choi - ex).cwiseAbs().maxCoeff();
  o.require(entry <= 1e-12, "Choi differs from the example state by " + short_double(entry));
  const CMatrix reduced = partial_trace_first(choi, 2, 2);
  const double tp = (reduced - reduced.trace() / 2.0 * eye(2)).norm();
  o.require(tp <= 1e-10, "tr_1 of the Choi matrix is not proportional to I");
  if (o.pass) o.detail = "EB with 2 terms, Choi match " + short_double(entry) + ", tr_1 defect " + short_double(tp);
  return o;
}

Outcome nonneg_bridge() {
  Outcome o;
  Rng rng(1007);
  for (int t = 0; t < 50; ++t) {
    const int rows = uniform_int(rng, 2, 8), cols = uniform_int(rng, 2, 8);
    const RMatrix m = random_nonneg(rng, rows, cols, 2);
    try {
      const NonnegFactorization f = nonneg_factorization_rank2(m, pinned());
      const double err = (f.w * f.h - m).norm() / std::max(1.0, m.norm());
      o.require(err <= 1e-8, "factorization error " + short_double(err));
      o.require(f.w.minCoeff() >= 0.0 && f.h.minCoeff() >= 0.0, "negative factor entry");
    } catch (const Error& e) {
      o.require(false, std::string("rank-2 matrix: ") + e.what());
    }
  }
  for (int t = 0; t < 100; ++t) {
    const int rows = uniform_int(rng, 1, 8), cols = uniform_int(rng, 1, 8);
    const RMatrix m = random_nonneg(rng, rows, cols, uniform_int(rng, 1, std::min(rows, cols)));
    const int osr = operator_schmidt_rank(diag_state_from_nonneg(m), rows, cols);
    o.require(osr == matrix_rank(m), "osr " + std::to_string(osr) + " != rank " + std::to_string(matrix_rank(m)));
  }
  if (o.pass) o.detail = "50/50 factorizations within 1e-8; osr = rank(M) on 100/100";
  return o;
}

Outcome negative_fixtures() {
  Outcome o;
  const CMatrix rho = rank3_separable_fixture();
  o.require(ppt_check(rho, 3, 2).ppt, "rank-3 fixture fails PPT");
  try {
    separate_bipartite(rho, 3, 2, pinned());
    o.require(false, "rank-3 fixture produced a certificate");
  } catch (const Error& e) {
    o.require(e.code() == Errc::RankTooHigh, std::string("unexpected error ") + e.what());
  }
  const HermMatrix a(diag({1, 0, 0})), b(diag({0, 1, 0})), c(eye(2)), d(eye(2));
  const ConeResult cr = extreme_rays_traced(a, b, c, d, pinned());
  o.require(cr.cone.kind == ConeKind::Simplex && cr.cone.rays.size() == 2, "joint-kernel cone is not a simplex");
  if (!o.pass) return o;
  o.require((cr.cone.rays[0] - Ray(0, 1)).norm() <= 1e-12 && (cr.cone.rays[1] - Ray(1, 0)).norm() <= 1e-12,
            "joint-kernel rays are not (1,0), (0,1)");
  o.require(cr.trace.path == ConeCase::Case2Split && cr.trace.kernel_dim == 1, "joint kernel was not split off");
  const HermitianPencil pen{a, b, c, d};
  const SepCertificate cert = separate_pencil(pen, pinned());
  o.require(valid(cert, pen.contract()), "joint-kernel certificate fails verification");
  if (o.pass) o.detail = "rank-3 fixture PPT and rejected; joint-kernel fixture split (kernel dim 1) and certified";
  return o;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Instance> inst = completeness_instances();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"golden example: rays, residual, factors", golden_example},
      {"completeness on 500 random rank-2 instances", [&] { return completeness(inst); }},
      {"PPT oracle agreement", [&] { return ppt_agreement(inst); }},
      {"chains n = 3..6 and GHZ-X", chains},
      {"hermitization term and bond counts", hermitization_counts},
      {"rank-2 channel is entanglement breaking", channel},
      {"nonnegative matrix bridge", nonneg_bridge},
      {"negative and joint-kernel fixtures", negative_fixtures},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("[%s] criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu/%zu criteria passed in %.1f s\n", criteria.size() - failed, criteria.size(), secs);
  return failed == 0 ? 0 : 1;
}
