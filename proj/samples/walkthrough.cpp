// Library tour: a two-qubit state of operator Schmidt rank 2 from decomposition to verified
// certificate, then a three-site chain and a channel.

#include <cstdio>
#include <iostream>

#include <sepcert/sepcert.hpp>

using namespace sepcert;

namespace {

CMatrix pauli_x() {
  CMatrix x = CMatrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1;
  return x;
}

void show(const char* label, const CMatrix& m) {
  Eigen::IOFormat f(4, 0, ", ", "\n", "    [", "]");
  std::cout << label << "\n" << m.real().format(f) << "\n";
}

}  // namespace

int main() {
  const CMatrix i2 = CMatrix::Identity(2, 2), x = pauli_x();
  const CMatrix rho = 0.5 * (kron(i2, i2) + kron(x, x));

  // 1. operator Schmidt decomposition
  const PairDecomposition dec = operator_schmidt(rho, 2, 2);
  std::cout << "osr = " << dec.size() << "\n";

  // 2. Hermitian pencil A (x) C + B (x) D and its cone
  const HermitianPencil pen = step1_hermitian_pencil(dec);
  const ConeResult cone = extreme_rays_traced(pen.a, pen.b, pen.c, pen.d);
  std::cout << "cone " << to_string(cone.cone.kind) << " via " << to_string(cone.trace.path) << ", rays:";
  for (const Ray& r : cone.cone.rays) std::printf(" (%.4f, %.4f)", r.x(), r.y());
  std::cout << "\n";

  // 3. certificate and independent verification
  const SepCertificate cert = separate_bipartite(rho, 2, 2);
  for (int j = 0; j < cert.terms(); ++j) {
    show(("sigma_" + std::to_string(j + 1)).c_str(), cert.decomposition.core(0, 0, j));
    show(("tau_" + std::to_string(j + 1)).c_str(), cert.decomposition.core(1, j, 0));
  }
  const VerifyReport rep = verify_certificate(cert, rho);
  std::printf("verify: %s, residual %.2e, min factor eigenvalue %.2e\n", rep.pass ? "PASS" : "FAIL", rep.residual,
              rep.min_factor_eig);

  // 4. a rank-3 state is refused rather than guessed at
  try {
    CMatrix p2 = CMatrix::Zero(3, 3), p3 = CMatrix::Zero(3, 3), q2 = CMatrix::Zero(2, 2), q3 = CMatrix::Zero(2, 2);
    p2(0, 1) = p2(1, 0) = 1;
    p3(0, 2) = p3(2, 0) = 1;
    q2(0, 0) = 0.5;
    q3(0, 1) = q3(1, 0) = 0.75;
    separate_bipartite(kron(CMatrix::Identity(3, 3), i2) + kron(p2, q2) + kron(p3, q3), 3, 2);
  } catch (const Error& e) {
    std::cout << "rank-3 state: " << e.what() << "\n";
  }

  // 5. a three-site chain: (I I I + X X X) / 2 from its dense matrix
  const CMatrix ghz = 0.5 * (kron(kron(i2, i2), i2) + kron(kron(x, x), x));
  const MpdoCores chain = hermitize_mpdo(mpdo_from_dense(ghz, {2, 2, 2})).cores;
  const SepCertificate chain_cert = separate_mpdo(chain);
  std::cout << "chain bonds " << join_ints(chain_cert.decomposition.bond_dims) << ", verify "
            << (verify_certificate(chain_cert, ghz).pass ? "PASS" : "FAIL") << "\n";

  // 6. E(X) = (tr(X) I + tr(X X) X) / 2 is entanglement breaking
  const ChannelRep ch{2, 2, {{0.5 * i2, i2}, {0.5 * x, x}}};
  const EbResult eb = eb_check_rank2(ch);
  std::cout << "channel: " << (eb.verdict == EbVerdict::EB ? "EB" : "Unknown") << "\n";
  return rep.pass ? 0 : 1;
}
