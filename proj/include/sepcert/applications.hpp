#pragma once

// Channels, nonnegative matrices and rank bookkeeping built on the separator.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "matrix_kernel.hpp"
#include "mpdo.hpp"
#include "schmidt.hpp"
#include "separator.hpp"

namespace sepcert {

/// E(X) = sum_alpha P_alpha tr(Q_alpha^T X); P is d_out x d_out, Q is d_in x d_in.
struct ChannelRep {
  int d_in = 0;
  int d_out = 0;
  std::vector<FactorPair> terms;  // a = P, b = Q

  void validate() const {
    if (d_in <= 0 || d_out <= 0) fail(Errc::DimensionMismatch, "channel dims must be positive");
    if (terms.empty()) fail(Errc::EmptyList, "channel has no terms");
    for (const auto& t : terms)
      if (t.a.rows() != d_out || t.a.cols() != d_out || t.b.rows() != d_in || t.b.cols() != d_in)
        fail(Errc::DimensionMismatch, "channel term has the wrong shape");
  }

  CMatrix apply(const CMatrix& x) const {
    CMatrix out = CMatrix::Zero(d_out, d_out);
    for (const auto& t : terms) out += t.a * (t.b.transpose() * x).trace();
    return out;
  }
};

/// (1 / sqrt(d_out d_in)) sum_alpha P_alpha (x) Q_alpha, an operator on C^{d_out} (x) C^{d_in}.
inline CMatrix choi_from_channel(const ChannelRep& ch) {
  ch.validate();
  CMatrix out = CMatrix::Zero(static_cast<Index>(ch.d_out) * ch.d_in, static_cast<Index>(ch.d_out) * ch.d_in);
  for (const auto& t : ch.terms) out += kron(t.a, t.b);
  return out / std::sqrt(static_cast<double>(ch.d_out) * ch.d_in);
}

enum class EbVerdict { EB, Unknown };

struct EbResult {
  EbVerdict verdict = EbVerdict::Unknown;
  int term_rank = 0;
  CMatrix choi;
  std::optional<SepCertificate> cert;
};

/// Entanglement breaking when the minimal number of terms is at most 2.
/// More terms give Unknown, never a negative verdict.
inline EbResult eb_check_rank2(const ChannelRep& ch, const Tolerances& tol = {}) {
  EbResult res;
  res.choi = choi_from_channel(ch);
  require_dense_limit(static_cast<std::size_t>(res.choi.rows()), tol.dense_limit);
  if (!is_hermitian(res.choi, tol.herm))
    fail(Errc::ChoiNotPSD, "Choi matrix is not Hermitian; the map is not completely positive");
  const PsdCheck chk = is_psd(HermMatrix::hermitian_part_of(res.choi), tol.cert);
  if (!chk.psd) fail(Errc::ChoiNotPSD, "Choi matrix has eigenvalue " + std::to_string(chk.min_eigenvalue));

  // Rank of sum_alpha vec(P_alpha) vec(Q_alpha)^T, the realigned Choi matrix.
  CMatrix term_matrix = CMatrix::Zero(static_cast<Index>(ch.d_out) * ch.d_out, static_cast<Index>(ch.d_in) * ch.d_in);
  for (const auto& t : ch.terms) term_matrix += vec(t.a) * vec(t.b).transpose();
  res.term_rank = numerical_rank(svd(term_matrix).s, tol.rank);
  if (res.term_rank > 2 || res.term_rank == 0) return res;
  res.cert = separate_bipartite(res.choi, ch.d_out, ch.d_in, tol);
  res.verdict = EbVerdict::EB;
  return res;
}

/// Upper bound log_{d1} (number of terms) on the entanglement of purification.
inline double ep_bound(const SepCertificate& cert) {
  const MpdoCores& m = cert.decomposition;
  if (m.sites() != 2) fail(Errc::DimensionMismatch, "ep_bound needs a bipartite certificate");
  if (m.dims[0] < 2) return 0.0;
  return std::log(static_cast<double>(cert.terms())) / std::log(static_cast<double>(m.dims[0]));
}

inline void require_nonneg(const RMatrix& m) {
  if (m.size() == 0) fail(Errc::DimensionMismatch, "empty matrix");
  if (!m.allFinite()) fail(Errc::NonFinite, "matrix has NaN/Inf entries");
  if ((m.array() < 0.0).any()) fail(Errc::NotPSDInput, "matrix has negative entries");
}

/// sum_{i,j} M_ij |i,j><i,j| on C^rows (x) C^cols.
inline CMatrix diag_state_from_nonneg(const RMatrix& m) {
  require_nonneg(m);
  const Index n = m.rows() * m.cols();
  CMatrix rho = CMatrix::Zero(n, n);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) rho(i * m.cols() + j, i * m.cols() + j) = m(i, j);
  return rho;
}

struct NonnegFactorization {
  RMatrix w;  // rows x 2, columns a_alpha
  RMatrix h;  // 2 x cols, rows b_alpha
};

/// M = sum_{alpha=1,2} a_alpha b_alpha^T with nonnegative vectors, read off
/// the diagonals of a separability certificate for the diagonal state.
inline NonnegFactorization nonneg_factorization_rank2(const RMatrix& m, const Tolerances& tol = {}) {
  require_nonneg(m);
  const Eigen::JacobiSVD<RMatrix> s(m);
  int rank = 0;
  for (Index i = 0; i < s.singularValues().size(); ++i)
    if (s.singularValues()(i) > tol.rank * s.singularValues()(0)) ++rank;
  if (rank != 2) fail(Errc::RankNotTwo, "matrix has rank " + std::to_string(rank) + ", expected 2");

  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  const CMatrix rho = diag_state_from_nonneg(m);
  SepCertificate cert = separate_bipartite(rho, rows, cols, tol);

  double leak = 0.0;
  for (auto& site : cert.decomposition.cores)
    for (auto& f : site) {
      const CMatrix diag = f.diagonal().real().cast<Complex>().asDiagonal();
      leak = std::max(leak, (f - diag).norm());
      f = diag;
    }
  detail::fill_statistics(cert, rho);
  const VerifyReport rep = verify_certificate(cert, rho);
  if (!rep.pass)
    fail(Errc::OffDiagonalLeak, "diagonal projection fails verification (off-diagonal mass " + std::to_string(leak) +
                                    "): " + rep.message);

  const int terms = cert.decomposition.bond_dims[0];
  NonnegFactorization out{RMatrix::Zero(rows, 2), RMatrix::Zero(2, cols)};
  for (int t = 0; t < terms; ++t) {
    // + 0.0 turns -0.0 into 0.0
    out.w.col(t) = cert.decomposition.core(0, 0, t).diagonal().real().cwiseMax(0.0).array() + 0.0;
    out.h.row(t) = (cert.decomposition.core(1, t, 0).diagonal().real().cwiseMax(0.0).array() + 0.0).transpose();
  }
  const double err = (out.w * out.h - m).norm() / std::max(1.0, m.norm());
  if (err > tol.cert) fail(Errc::VerificationFailed, "factorization residual " + std::to_string(err));
  return out;
}

struct PptResult {
  bool ppt = false;
  double min_eigenvalue = 0.0;
};

/// rho^{T_2}: transpose on the second factor.
inline CMatrix partial_transpose_second(const CMatrix& rho, int d1, int d2) {
  require_bipartite_dims(rho, d1, d2);
  CMatrix out(rho.rows(), rho.cols());
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k)
        for (int l = 0; l < d2; ++l) out(i * d2 + k, j * d2 + l) = rho(i * d2 + l, j * d2 + k);
  return out;
}

/// Necessary for separability; also sufficient for 2x2, 2x3 and 3x2.
inline PptResult ppt_check(const CMatrix& rho, int d1, int d2, const Tolerances& tol = {}) {
  const PsdCheck chk = is_psd(HermMatrix::hermitian_part_of(partial_transpose_second(rho, d1, d2)), tol.cert);
  return {chk.psd, chk.min_eigenvalue};
}

struct RankCheckItem {
  std::string name;
  bool pass = false;
};

struct RankReport {
  std::vector<int> osr;       // per cut
  std::vector<int> hosr_upper;  // per cut, bond dims of a Hermitian MPDO
  std::optional<int> sep_rank;  // max bond of a certificate, when one was found
  std::vector<int> sep_bonds;   // per cut bond dims of that certificate
  std::string sep_failure;      // reason when no certificate was found
  std::vector<RankCheckItem> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline RankReport rank_relations_report(const CMatrix& rho, const std::vector<int>& dims, const Tolerances& tol = {}) {
  RankReport rep;
  if (dims.size() < 2) fail(Errc::DimensionMismatch, "need at least two sites");
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  if (static_cast<std::size_t>(rho.rows()) != total || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "operator size does not match dims");
  require_dense_limit(total, tol.dense_limit);

  std::size_t left = 1;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    left *= static_cast<std::size_t>(dims[k]);
    rep.osr.push_back(operator_schmidt_rank(rho, static_cast<int>(left), static_cast<int>(total / left), tol));
  }

  if (rho.norm() == 0.0) {
    rep.sep_failure = "zero operator";
    return rep;
  }
  const MpdoCores minimal = mpdo_from_dense(rho, dims, tol);
  const HermitizeResult herm = hermitize_mpdo(minimal, tol);
  rep.hosr_upper = herm.cores.bond_dims;

  try {
    const SepCertificate cert = dims.size() == 2 ? separate_bipartite(rho, dims[0], dims[1], tol)
                                                 : separate_mpdo(herm.cores, tol);
    rep.sep_rank = cert.decomposition.max_bond();
    rep.sep_bonds = cert.decomposition.bond_dims;
  } catch (const Error& e) {
    rep.sep_failure = e.what();
  }

  for (std::size_t k = 0; k < rep.osr.size(); ++k) {
    const std::string cut = "cut " + std::to_string(k + 1);
    rep.checks.push_back({cut + ": osr <= hosr", rep.osr[k] <= rep.hosr_upper[k]});
    if (rep.sep_rank) {
      rep.checks.push_back({cut + ": osr <= sep-rank", rep.osr[k] <= rep.sep_bonds[k]});
      rep.checks.push_back({cut + ": osr = 1 iff sep-rank = 1", (rep.osr[k] == 1) == (rep.sep_bonds[k] == 1)});
    }
  }
  return rep;
}

}  // namespace sepcert
