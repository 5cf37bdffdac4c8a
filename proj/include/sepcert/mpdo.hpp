#pragma once

// Matrix product (density) operators on open chains: contraction, minimal
// decomposition by sequential operator Schmidt splits, and Hermitization.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "matrix_kernel.hpp"
#include "schmidt.hpp"

namespace sepcert {

/// rho = sum_{a_1..a_{n-1}} A[1]_{a_1} (x) A[2]_{a_1,a_2} (x) ... (x) A[n]_{a_{n-1}}.
///
/// Every site stores a (left bond) x (right bond) array of local matrices;
/// the first site has left bond 1 and the last site right bond 1.
struct MpdoCores {
  std::vector<int> dims;       // d_1 .. d_n
  std::vector<int> bond_dims;  // D_1 .. D_{n-1}
  std::vector<std::vector<CMatrix>> cores;
  bool hermitian = false;

  int sites() const { return static_cast<int>(dims.size()); }
  int left_bond(int site) const { return site == 0 ? 1 : bond_dims[site - 1]; }
  int right_bond(int site) const { return site + 1 == sites() ? 1 : bond_dims[site]; }

  const CMatrix& core(int site, int left, int right) const {
    return cores[site][static_cast<std::size_t>(left * right_bond(site) + right)];
  }
  CMatrix& core(int site, int left, int right) {
    return cores[site][static_cast<std::size_t>(left * right_bond(site) + right)];
  }

  std::size_t total_dim() const {
    std::size_t t = 1;
    for (int d : dims) t *= static_cast<std::size_t>(d);
    return t;
  }

  int max_bond() const {
    return bond_dims.empty() ? 1 : *std::max_element(bond_dims.begin(), bond_dims.end());
  }

  /// Allocates zero cores for the given shape.
  static MpdoCores zeros(std::vector<int> dims, std::vector<int> bonds) {
    MpdoCores m;
    m.dims = std::move(dims);
    m.bond_dims = std::move(bonds);
    m.validate_shape();
    m.cores.resize(m.dims.size());
    for (int l = 0; l < m.sites(); ++l)
      m.cores[l].assign(static_cast<std::size_t>(m.left_bond(l) * m.right_bond(l)),
                        CMatrix::Zero(m.dims[l], m.dims[l]));
    return m;
  }

  static MpdoCores from_pairs(const PairDecomposition& dec) {
    dec.validate();
    MpdoCores m = zeros({dec.d1, dec.d2}, {static_cast<int>(dec.size())});
    for (std::size_t a = 0; a < dec.size(); ++a) {
      m.core(0, 0, static_cast<int>(a)) = dec.pairs[a].a;
      m.core(1, static_cast<int>(a), 0) = dec.pairs[a].b;
    }
    return m;
  }

  void validate_shape() const {
    if (dims.size() < 2) fail(Errc::DimensionMismatch, "an MPDO needs at least two sites");
    if (bond_dims.size() + 1 != dims.size())
      fail(Errc::DimensionMismatch, "bond_dims must have one entry fewer than dims");
    for (int d : dims)
      if (d <= 0) fail(Errc::DimensionMismatch, "local dimensions must be positive");
    for (int b : bond_dims)
      if (b <= 0) fail(Errc::DimensionMismatch, "bond dimensions must be positive");
  }

  void validate() const {
    validate_shape();
    if (cores.size() != dims.size()) fail(Errc::DimensionMismatch, "one core array per site required");
    for (int l = 0; l < sites(); ++l) {
      if (cores[l].size() != static_cast<std::size_t>(left_bond(l) * right_bond(l)))
        fail(Errc::DimensionMismatch, "site " + std::to_string(l + 1) + " core count does not match bonds");
      for (const auto& c : cores[l]) {
        if (c.rows() != dims[l] || c.cols() != dims[l])
          fail(Errc::DimensionMismatch, "site " + std::to_string(l + 1) + " core has the wrong size");
        require_finite(c, "core");
      }
    }
  }

  bool all_cores_hermitian(double herm_tol) const {
    for (const auto& site : cores)
      for (const auto& c : site)
        if (!is_hermitian(c, herm_tol)) return false;
    return true;
  }
};

inline void require_dense_limit(std::size_t total, std::size_t limit) {
  if (total > limit)
    fail(Errc::DimensionLimit,
         "total dimension " + std::to_string(total) + " exceeds the dense limit " + std::to_string(limit));
}

/// Contractions of sites 0..site, one per value of the open right bond.
inline std::vector<CMatrix> left_blocks(const MpdoCores& m, int site) {
  std::vector<CMatrix> blocks;
  for (int b = 0; b < m.right_bond(0); ++b) blocks.push_back(m.core(0, 0, b));
  for (int l = 1; l <= site; ++l) {
    std::vector<CMatrix> next;
    for (int c = 0; c < m.right_bond(l); ++c) {
      CMatrix acc = CMatrix::Zero(blocks.front().rows() * m.dims[l], blocks.front().cols() * m.dims[l]);
      for (int b = 0; b < m.left_bond(l); ++b) acc += kron(blocks[b], m.core(l, b, c));
      next.push_back(std::move(acc));
    }
    blocks = std::move(next);
  }
  return blocks;
}

/// Contractions of sites site..n-1, one per value of the open left bond.
inline std::vector<CMatrix> right_blocks(const MpdoCores& m, int site) {
  const int last = m.sites() - 1;
  std::vector<CMatrix> blocks;
  for (int a = 0; a < m.left_bond(last); ++a) blocks.push_back(m.core(last, a, 0));
  for (int l = last - 1; l >= site; --l) {
    std::vector<CMatrix> next;
    for (int a = 0; a < m.left_bond(l); ++a) {
      CMatrix acc = CMatrix::Zero(m.dims[l] * blocks.front().rows(), m.dims[l] * blocks.front().cols());
      for (int b = 0; b < m.right_bond(l); ++b) acc += kron(m.core(l, a, b), blocks[b]);
      next.push_back(std::move(acc));
    }
    blocks = std::move(next);
  }
  return blocks;
}

inline CMatrix dense_from_mpdo(const MpdoCores& m, std::size_t dense_limit = Tolerances{}.dense_limit) {
  m.validate();
  require_dense_limit(m.total_dim(), dense_limit);
  return left_blocks(m, m.sites() - 1).front();
}

/// Minimal MPDO by left-to-right sequential SVD splits; each bond equals the
/// operator Schmidt rank across that cut.
inline MpdoCores mpdo_from_dense(const CMatrix& rho, const std::vector<int>& dims, const Tolerances& tol = {}) {
  require_finite(rho, "state");
  if (dims.size() < 2) fail(Errc::DimensionMismatch, "an MPDO needs at least two sites");
  std::size_t total = 1;
  for (int d : dims) {
    if (d <= 0) fail(Errc::DimensionMismatch, "local dimensions must be positive");
    total *= static_cast<std::size_t>(d);
  }
  if (rho.rows() != static_cast<Index>(total) || rho.cols() != rho.rows())
    fail(Errc::DimensionMismatch, "operator size does not match the product of local dims");
  require_dense_limit(total, tol.dense_limit);

  const int n = static_cast<int>(dims.size());
  // Tensor with one index p_l = i_l * d_l + j_l per site, row-major over sites.
  std::size_t tensor_size = 1;
  for (int d : dims) tensor_size *= static_cast<std::size_t>(d) * d;
  CMatrix remainder(1, static_cast<Index>(tensor_size));
  std::vector<int> row_digits(n), col_digits(n);
  for (Index r = 0; r < rho.rows(); ++r) {
    Index rr = r;
    for (int l = n - 1; l >= 0; --l) {
      row_digits[l] = static_cast<int>(rr % dims[l]);
      rr /= dims[l];
    }
    for (Index c = 0; c < rho.cols(); ++c) {
      Index cc = c;
      for (int l = n - 1; l >= 0; --l) {
        col_digits[l] = static_cast<int>(cc % dims[l]);
        cc /= dims[l];
      }
      Index flat = 0;
      for (int l = 0; l < n; ++l) flat = flat * dims[l] * dims[l] + row_digits[l] * dims[l] + col_digits[l];
      remainder(0, flat) = rho(r, c);
    }
  }

  std::vector<int> bonds;
  std::vector<CMatrix> site_factors;  // U blocks, shape (r_prev * d^2) x r
  int r_prev = 1;
  for (int l = 0; l + 1 < n; ++l) {
    const Index q = static_cast<Index>(dims[l]) * dims[l];
    const Index rest = remainder.cols() / q;
    CMatrix unfolded(r_prev * q, rest);
    for (int a = 0; a < r_prev; ++a)
      for (Index p = 0; p < q; ++p) unfolded.row(a * q + p) = remainder.row(a).segment(p * rest, rest);
    const SvdResult f = svd(unfolded);
    const int r = numerical_rank(f.s, tol.rank);
    if (r == 0) fail(Errc::DegenerateInput, "the zero operator has no MPDO form");
    site_factors.push_back(f.u.leftCols(r));
    remainder = f.s.head(r).asDiagonal() * f.v.leftCols(r).adjoint();
    bonds.push_back(r);
    r_prev = r;
  }

  MpdoCores m = MpdoCores::zeros(dims, bonds);
  for (int l = 0; l + 1 < n; ++l) {
    const int d = dims[l];
    for (int a = 0; a < m.left_bond(l); ++a)
      for (int b = 0; b < m.right_bond(l); ++b)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) m.core(l, a, b)(i, j) = site_factors[l]((a * d + i) * d + j, b);
  }
  const int d = dims[n - 1];
  for (int a = 0; a < m.left_bond(n - 1); ++a)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m.core(n - 1, a, 0)(i, j) = remainder(a, i * d + j);
  return m;
}

enum class HermitizationPath {
  AlreadyHermitian,  // cores were Hermitian on input
  Bipartite,         // two sites, Hermitian basis of the left span
  Gauge,             // Hermitian gauge on every bond, bond dims preserved
  ParitySplit,       // Hermitian/anti-Hermitian split, bond dims doubled
};

inline std::string_view to_string(HermitizationPath p) {
  switch (p) {
    case HermitizationPath::AlreadyHermitian: return "already-hermitian";
    case HermitizationPath::Bipartite: return "bipartite";
    case HermitizationPath::Gauge: return "gauge";
    case HermitizationPath::ParitySplit: return "parity-split";
  }
  return "unknown";
}

struct HermitizeResult {
  MpdoCores cores;
  HermitizationPath path = HermitizationPath::AlreadyHermitian;
};

namespace detail {

inline bool blocks_independent_at_every_cut(const MpdoCores& m, double rank_tol) {
  for (int l = 0; l + 1 < m.sites(); ++l) {
    if (!lin_independent(left_blocks(m, l), rank_tol).independent) return false;
    if (!lin_independent(right_blocks(m, l + 1), rank_tol).independent) return false;
  }
  return true;
}

/// Inserts E F = I on every bond so that each right block becomes a member
/// of a Hermitian basis. Requires independent blocks on both sides of every
/// cut, which makes each right-block span adjoint-closed.
inline MpdoCores hermitian_gauge(const MpdoCores& m, const Tolerances& tol) {
  MpdoCores out = m;
  for (int cut = 0; cut + 1 < m.sites(); ++cut) {
    const std::vector<CMatrix> rights = right_blocks(m, cut + 1);
    const int bond = m.bond_dims[cut];
    const std::vector<CMatrix> herm = hermitian_basis(rights, bond, tol.rank);
    CMatrix e(bond, bond);
    for (int beta = 0; beta < bond; ++beta)
      for (int gamma = 0; gamma < bond; ++gamma) e(beta, gamma) = (herm[gamma] * rights[beta]).trace();
    Eigen::FullPivLU<CMatrix> lu(e);
    if (!lu.isInvertible()) fail(Errc::NotHermitianSum, "bond change of basis is singular");
    const CMatrix f = lu.inverse();

    const int site = cut;
    std::vector<CMatrix> left_new(out.cores[site].size());
    for (int a = 0; a < out.left_bond(site); ++a)
      for (int gamma = 0; gamma < bond; ++gamma) {
        CMatrix acc = CMatrix::Zero(m.dims[site], m.dims[site]);
        for (int beta = 0; beta < bond; ++beta) acc += e(beta, gamma) * out.core(site, a, beta);
        left_new[static_cast<std::size_t>(a * bond + gamma)] = std::move(acc);
      }
    out.cores[site] = std::move(left_new);

    const int next = cut + 1;
    const int rb = out.right_bond(next);
    std::vector<CMatrix> right_new(out.cores[next].size());
    for (int gamma = 0; gamma < bond; ++gamma)
      for (int c = 0; c < rb; ++c) {
        CMatrix acc = CMatrix::Zero(m.dims[next], m.dims[next]);
        for (int beta = 0; beta < bond; ++beta) acc += f(gamma, beta) * out.core(next, beta, c);
        right_new[static_cast<std::size_t>(gamma * rb + c)] = std::move(acc);
      }
    out.cores[next] = std::move(right_new);
  }
  for (auto& site : out.cores)
    for (auto& c : site) c = hermitian_part(c);
  out.hermitian = true;
  return out;
}

/// Bond state (a, parity of anti-Hermitian factors so far). Transition
/// weights +1, +1, +1, -1 for parity 0->0, 0->1, 1->1, 1->0 reproduce the
/// phase i^k of each even-parity term. `final_parity` = 1 contracts the odd
/// terms instead (up to a global factor i).
inline MpdoCores parity_split(const MpdoCores& m, int final_parity) {
  std::vector<int> bonds;
  for (int b : m.bond_dims) bonds.push_back(2 * b);
  MpdoCores out = MpdoCores::zeros(m.dims, bonds);
  const int n = m.sites();
  for (int l = 0; l < n; ++l) {
    const bool first = l == 0;
    const bool last = l + 1 == n;
    for (int a = 0; a < m.left_bond(l); ++a)
      for (int b = 0; b < m.right_bond(l); ++b) {
        const CMatrix& core = m.core(l, a, b);
        const CMatrix parts[2] = {hermitian_part(core), antihermitian_coefficient(core)};
        for (int p = 0; p < 2; ++p) {
          if (first && p != 0) continue;
          for (int q = 0; q < 2; ++q) {
            if (last && q != final_parity) continue;
            const double sign = (p == 1 && q == 0) ? -1.0 : 1.0;
            const int left = first ? 0 : 2 * a + p;
            const int right = last ? 0 : 2 * b + q;
            out.core(l, left, right) = sign * parts[p ^ q];
          }
        }
      }
  }
  out.hermitian = true;
  return out;
}

}  // namespace detail

/// Rewrites an MPDO whose contraction is Hermitian with Hermitian cores.
/// When the blocks on both sides of every cut are linearly independent
/// (implied by sitewise independence) the bond dimensions are preserved;
/// otherwise each bond doubles, which stays within the 2^{n-1} D bound.
inline HermitizeResult hermitize_mpdo(const MpdoCores& m, const Tolerances& tol = {}) {
  m.validate();
  const CMatrix rho = dense_from_mpdo(m, tol.dense_limit);
  if (!is_hermitian(rho, tol.herm))
    fail(Errc::NotHermitianSum,
         "contracted operator is not Hermitian (defect " + std::to_string(hermiticity_defect(rho)) + ")");
  const double scale = scale_of(rho);
  auto reproduces = [&](const MpdoCores& c) { return (dense_from_mpdo(c, tol.dense_limit) - rho).norm() <= tol.recon * scale; };

  if (m.all_cores_hermitian(tol.herm)) {
    HermitizeResult r{m, HermitizationPath::AlreadyHermitian};
    for (auto& site : r.cores.cores)
      for (auto& c : site) c = hermitian_part(c);
    r.cores.hermitian = true;
    return r;
  }

  if (m.sites() == 2) {
    PairDecomposition dec;
    dec.d1 = m.dims[0];
    dec.d2 = m.dims[1];
    for (int a = 0; a < m.bond_dims[0]; ++a) dec.pairs.push_back({m.core(0, 0, a), m.core(1, a, 0)});
    if (lin_independent(dec.left_factors(), tol.rank).independent &&
        lin_independent(dec.right_factors(), tol.rank).independent) {
      MpdoCores out = MpdoCores::from_pairs(hermitize_bipartite(dec, tol));
      out.hermitian = true;
      return {std::move(out), HermitizationPath::Bipartite};
    }
  } else if (detail::blocks_independent_at_every_cut(m, tol.rank)) {
    MpdoCores out = detail::hermitian_gauge(m, tol);
    if (reproduces(out)) return {std::move(out), HermitizationPath::Gauge};
  }

  const CMatrix odd = dense_from_mpdo(detail::parity_split(m, 1), tol.dense_limit);
  if (odd.norm() > tol.recon * scale)
    fail(Errc::NotHermitianSum, "odd-parity terms do not cancel (norm " + std::to_string(odd.norm()) + ")");
  MpdoCores even = detail::parity_split(m, 0);
  if (!reproduces(even)) fail(Errc::NotHermitianSum, "even-parity terms do not reproduce the operator");
  return {std::move(even), HermitizationPath::ParitySplit};
}

}  // namespace sepcert
