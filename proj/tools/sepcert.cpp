// Command-line front end: schmidt, separate, certify, channel-eb, from-nonneg, ranks.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <sepcert/sepcert.hpp>

using namespace sepcert;

namespace {

enum Exit { kOk = 0, kVerifyFail = 1, kParse = 2, kDims = 3, kRank = 4, kNotPsd = 5, kOther = 6 };

int exit_code(Errc c) {
  switch (c) {
    case Errc::ParseError:
    case Errc::NonFinite: return kParse;
    case Errc::DimensionMismatch:
    case Errc::DimensionLimit: return kDims;
    case Errc::RankTooHigh:
    case Errc::NotHermitianCores:
    case Errc::RankNotTwo: return kRank;
    case Errc::NotPSDInput:
    case Errc::NonHermitianInput:
    case Errc::ChoiNotPSD: return kNotPsd;
    default: return kOther;
  }
}

/// Raised inside a command to leave with a specific code after printing a message.
struct CliExit {
  int code;
};

struct Settings {
  std::optional<double> tol_cert;
  std::optional<double> tol_rank;

  Tolerances tolerances() const {
    const char* env = std::getenv("SEPCERT_TOLERANCE_PROFILE");
    Tolerances t = Tolerances::profile(env ? env : "");
    if (tol_cert) t.cert = *tol_cert;
    if (tol_rank) t.rank = *tol_rank;
    return t;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

/// input.json -> input<suffix>
std::string derived_path(const std::string& input, const std::string& suffix) {
  const std::string ext = ".json";
  std::string stem = input;
  if (stem.size() > ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0)
    stem.resize(stem.size() - ext.size());
  return stem + suffix;
}

void write(const std::string& path, StateFile f, const Tolerances& tol) {
  record_tolerances(f, tol);
  write_state_file(path, f);
  std::cout << "wrote " << path << "\n";
}

CMatrix load_operator(const StateFile& f, const Tolerances& tol) {
  if (f.kind == "dense_state") return dense_from_file(f);
  if (f.kind == "mpdo") return dense_from_mpdo(mpdo_from_file(f), tol.dense_limit);
  fail(Errc::ParseError, "expected a dense_state or mpdo file, got '" + f.kind + "'");
}

/// Two-way split of the file dims, or the explicit --dims override.
std::pair<int, int> bipartition(const StateFile& f, const std::vector<int>& dims_flag) {
  const std::vector<int>& dims = dims_flag.empty() ? f.dims : dims_flag;
  if (dims.size() != 2)
    fail(Errc::DimensionMismatch, "need two dims d1,d2 for a bipartite command, got " + join_ints(dims));
  return {dims[0], dims[1]};
}

void print_certificate(const SepCertificate& cert) {
  std::cout << "bond dims = " << join_ints(cert.decomposition.bond_dims) << "\n";
  std::cout << "terms = " << cert.terms() << "\n";
  std::cout << "residual = " << fmt(cert.residual) << "\n";
  std::cout << "min factor eigenvalue = " << fmt(cert.min_factor_eig) << "\n";
  for (const CutMetadata& c : cert.cone_metadata) {
    std::cout << "cut " << c.cut + 1 << ": ";
    if (c.folded) {
      std::cout << "folded (one term)\n";
      continue;
    }
    std::cout << to_string(c.kind) << ", " << to_string(c.trace.path) << ", compression " << c.trace.compression_index;
    if (c.trace.kernel_dim > 0) std::cout << ", kernel dim " << c.trace.kernel_dim;
    std::cout << "\n";
  }
}

// ---- commands ----

int cmd_schmidt(const std::string& input, const std::vector<int>& dims, std::string out, const Settings& s) {
  const Tolerances tol = s.tolerances();
  const StateFile f = read_state_file(input);
  if (f.kind != "dense_state") fail(Errc::ParseError, "schmidt expects a dense_state file");
  const auto [d1, d2] = bipartition(f, dims);
  const PairDecomposition dec = operator_schmidt(dense_from_file(f), d1, d2, tol);
  std::cout << "osr = " << dec.size() << "\n";
  if (dec.size() == 0) return kOk;
  if (out.empty()) out = derived_path(input, ".schmidt.json");
  write(out, mpdo_file(MpdoCores::from_pairs(dec)), tol);
  return kOk;
}

int cmd_separate(const std::string& input, const std::vector<int>& dims, bool multipartite, std::string out,
                 const Settings& s) {
  const Tolerances tol = s.tolerances();
  const StateFile f = read_state_file(input);
  SepCertificate cert;
  const std::size_t sites = dims.empty() ? f.dims.size() : dims.size();
  if (f.kind == "dense_state" && !multipartite && sites == 2) {
    const auto [d1, d2] = bipartition(f, dims);
    const CMatrix rho = dense_from_file(f);
    try {
      cert = separate_bipartite(rho, d1, d2, tol);
    } catch (const Error& e) {
      if (e.code() != Errc::RankTooHigh) throw;
      std::cerr << "error: operator Schmidt rank " << operator_schmidt_rank(rho, d1, d2, tol) << " unsupported\n";
      throw CliExit{kRank};
    }
    std::cout << "path = bipartite\n";
  } else {
    MpdoCores m;
    if (f.kind == "dense_state") {
      m = mpdo_from_dense(dense_from_file(f), dims.empty() ? f.dims : dims, tol);
    } else if (f.kind == "mpdo") {
      m = mpdo_from_file(f);
    } else {
      fail(Errc::ParseError, "separate expects a dense_state or mpdo file, got '" + f.kind + "'");
    }
    const HermitizeResult h = hermitize_mpdo(m, tol);
    std::cout << "hermitization = " << to_string(h.path) << "\n";
    cert = separate_mpdo(h.cores, tol);
    std::cout << "path = chain\n";
  }
  print_certificate(cert);
  if (out.empty()) out = derived_path(input, ".cert.json");
  write(out, certificate_file(cert), tol);
  return kOk;
}

int cmd_certify(const std::string& state_path, const std::string& cert_path, const Settings& s) {
  const StateFile state = read_state_file(state_path);
  const SepCertificate cert = certificate_from_file(read_state_file(cert_path));
  // flags override the tolerances recorded in the certificate
  Tolerances tol = cert.tolerances;
  if (s.tol_cert) tol.cert = *s.tol_cert;
  if (s.tol_rank) tol.rank = *s.tol_rank;
  const CMatrix rho = load_operator(state, tol);
  const VerifyReport rep = verify_certificate(cert, rho, tol);
  std::cout << "residual = " << fmt(rep.residual) << "\n";
  std::cout << "min factor eigenvalue = " << fmt(rep.min_factor_eig) << "\n";
  if (rep.pass) {
    std::cout << "PASS\n";
    return kOk;
  }
  std::cout << "FAIL: " << rep.message << "\n";
  return kVerifyFail;
}

int cmd_channel_eb(const std::string& input, std::string prefix, const Settings& s) {
  const Tolerances tol = s.tolerances();
  const ChannelRep ch = channel_from_file(read_state_file(input));
  EbResult r;
  try {
    r = eb_check_rank2(ch, tol);
  } catch (const Error& e) {
    if (e.code() != Errc::ChoiNotPSD) throw;
    std::cout << "NotCP (" << e.what() << ")\n";
    return kNotPsd;
  }
  std::cout << "term rank = " << r.term_rank << "\n";
  if (r.verdict == EbVerdict::Unknown) {
    std::cout << "Unknown (term rank above 2)\n";
    return kOk;
  }
  std::cout << "EB\n";
  print_certificate(*r.cert);
  if (prefix.empty()) prefix = derived_path(input, "");
  write(prefix + ".choi.json", dense_state_file(r.choi, {ch.d_out, ch.d_in}), tol);
  write(prefix + ".cert.json", certificate_file(*r.cert), tol);
  return kOk;
}

std::string vector_text(const RVector& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v(i));
  return s + "]";
}

int cmd_from_nonneg(const std::string& input, std::string prefix, const Settings& s) {
  const Tolerances tol = s.tolerances();
  const RMatrix m = nonneg_from_file(read_state_file(input));
  const CMatrix rho = diag_state_from_nonneg(m);
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  if (prefix.empty()) prefix = derived_path(input, "");
  write(prefix + ".state.json", dense_state_file(rho, {rows, cols}), tol);

  const int rank = rho.norm() == 0.0 ? 0 : operator_schmidt_rank(rho, rows, cols, tol);
  std::cout << "rank = " << rank << "\n";
  NonnegFactorization nf;
  if (rank == 1) {
    // M = column j * row i / M_ij at its largest entry
    Index i = 0, j = 0;
    const double top = m.maxCoeff(&i, &j);
    nf.w = m.col(j);
    nf.h = m.row(i) / top;
  } else if (rank == 2) {
    nf = nonneg_factorization_rank2(m, tol);
  } else {
    std::cerr << "error: rank " << rank << " is outside the supported range; factorization skipped\n";
    return kRank;
  }
  std::cout << "rank₊ = " << rank << "\n";
  SepCertificate cert;
  cert.decomposition = MpdoCores::zeros({rows, cols}, {rank});
  cert.decomposition.hermitian = true;
  cert.tolerances = tol;
  for (int t = 0; t < rank; ++t) {
    std::cout << "a" << t + 1 << " = " << vector_text(nf.w.col(t)) << "\n";
    std::cout << "b" << t + 1 << " = " << vector_text(nf.h.row(t).transpose()) << "\n";
    cert.decomposition.core(0, 0, t) = nf.w.col(t).cast<Complex>().asDiagonal();
    cert.decomposition.core(1, t, 0) = nf.h.row(t).transpose().cast<Complex>().asDiagonal();
  }
  const VerifyReport rep = verify_certificate(cert, rho, tol);
  cert.residual = rep.residual;
  cert.min_factor_eig = rep.min_factor_eig;
  std::cout << "residual = " << fmt(rep.residual) << "\n";
  if (!rep.pass) {
    std::cout << "FAIL: " << rep.message << "\n";
    return kVerifyFail;
  }
  write(prefix + ".cert.json", certificate_file(cert), tol);
  return kOk;
}

int cmd_ranks(const std::string& input, const std::vector<int>& dims, const Settings& s) {
  const Tolerances tol = s.tolerances();
  const StateFile f = read_state_file(input);
  const CMatrix rho = load_operator(f, tol);
  const RankReport r = rank_relations_report(rho, dims.empty() ? f.dims : dims, tol);
  std::cout << "osr = " << join_ints(r.osr) << "\n";
  std::cout << "hosr <= " << (r.hosr_upper.empty() ? "n/a" : join_ints(r.hosr_upper)) << "\n";
  if (r.sep_rank)
    std::cout << "sep-rank = " << *r.sep_rank << " (bonds " << join_ints(r.sep_bonds) << ")\n";
  else
    std::cout << "sep-rank = unknown (" << r.sep_failure << ")\n";
  for (const RankCheckItem& c : r.checks) std::cout << (c.pass ? "[ok]   " : "[FAIL] ") << c.name << "\n";
  return r.all_pass() ? kOk : kVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separability certificates for states of operator Schmidt rank two"};
  app.require_subcommand(1);
  Settings settings;
  app.add_option("--tol-cert", settings.tol_cert, "certificate residual and factor eigenvalue tolerance");
  app.add_option("--tol-rank", settings.tol_rank, "numerical rank tolerance");

  std::string input, second, output;
  std::vector<int> dims;
  bool multipartite = false;
  std::function<int()> run;

  auto* schmidt = app.add_subcommand("schmidt", "operator Schmidt decomposition of a dense state");
  schmidt->add_option("input", input, "dense_state file")->required();
  schmidt->add_option("--dims", dims, "local dimensions d1,d2")->delimiter(',');
  schmidt->add_option("-o,--output", output, "decomposition file");
  schmidt->callback([&] { run = [&] { return cmd_schmidt(input, dims, output, settings); }; });

  auto* separate = app.add_subcommand("separate", "separability certificate for a dense state or chain");
  separate->add_option("input", input, "dense_state or mpdo file")->required();
  separate->add_option("--dims", dims, "local dimensions")->delimiter(',');
  separate->add_flag("--multipartite", multipartite, "treat every dim as a site of a chain");
  separate->add_option("-o,--output", output, "certificate file");
  separate->callback([&] { run = [&] { return cmd_separate(input, dims, multipartite, output, settings); }; });

  auto* certify = app.add_subcommand("certify", "check a certificate against a state");
  certify->add_option("state", input, "dense_state or mpdo file")->required();
  certify->add_option("certificate", second, "certificate file")->required();
  certify->callback([&] { run = [&] { return cmd_certify(input, second, settings); }; });

  auto* channel = app.add_subcommand("channel-eb", "entanglement-breaking test for a channel with two terms");
  channel->add_option("input", input, "channel file")->required();
  channel->add_option("-o,--output", output, "prefix for the Choi and certificate files");
  channel->callback([&] { run = [&] { return cmd_channel_eb(input, output, settings); }; });

  auto* nonneg = app.add_subcommand("from-nonneg", "diagonal state and nonnegative factorization");
  nonneg->add_option("input", input, "nonneg_matrix file")->required();
  nonneg->add_option("-o,--output", output, "prefix for the state and certificate files");
  nonneg->callback([&] { run = [&] { return cmd_from_nonneg(input, output, settings); }; });

  auto* ranks = app.add_subcommand("ranks", "rank relations report");
  ranks->add_option("input", input, "dense_state or mpdo file")->required();
  ranks->add_option("--dims", dims, "local dimensions")->delimiter(',');
  ranks->callback([&] { run = [&] { return cmd_ranks(input, dims, settings); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    return run();
  } catch (const CliExit& e) {
    return e.code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
