#pragma once

// JSON file format shared by every CLI subcommand.
//
//   {"schema_version": "sepcert/1", "kind": ..., "dims": [...],
//    "payload": [[re, im], ...], "metadata": {"key": "value", ...}}

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "applications.hpp"
#include "matrix_kernel.hpp"
#include "mpdo.hpp"
#include "separator.hpp"

namespace sepcert {

inline constexpr const char* kSchemaVersion = "sepcert/1";

struct StateFile {
  std::string schema_version = kSchemaVersion;
  std::string kind;
  std::vector<int> dims;
  std::vector<Complex> payload;
  std::map<std::string, std::string> metadata;

  const std::string& meta(const std::string& key) const {
    auto it = metadata.find(key);
    if (it == metadata.end()) fail(Errc::ParseError, kind + " file lacks metadata '" + key + "'");
    return it->second;
  }
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::ParseError, "cannot parse " + what + " from '" + s + "'");
  }
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(Errc::ParseError, "cannot parse " + what + " from '" + s + "'");
    }
  }
  if (out.empty()) fail(Errc::ParseError, "empty " + what);
  return out;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

namespace detail {

inline std::size_t product(const std::vector<int>& dims) {
  std::size_t t = 1;
  for (int d : dims) t *= static_cast<std::size_t>(d);
  return t;
}

inline std::size_t chain_payload_length(const std::vector<int>& dims, const std::vector<int>& bonds) {
  if (bonds.size() + 1 != dims.size()) fail(Errc::ParseError, "bond_dims must have one entry fewer than dims");
  std::size_t n = 0;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const std::size_t left = l == 0 ? 1 : static_cast<std::size_t>(bonds[l - 1]);
    const std::size_t right = l + 1 == dims.size() ? 1 : static_cast<std::size_t>(bonds[l]);
    n += left * right * static_cast<std::size_t>(dims[l]) * dims[l];
  }
  return n;
}

inline std::size_t expected_payload(const StateFile& f) {
  if (f.dims.empty()) fail(Errc::ParseError, "dims must be nonempty");
  for (int d : f.dims)
    if (d <= 0) fail(Errc::ParseError, "dims must be positive");
  if (f.kind == "dense_state") return product(f.dims) * product(f.dims);
  if (f.kind == "mpdo" || f.kind == "certificate")
    return chain_payload_length(f.dims, parse_int_list(f.meta("bond_dims"), "bond_dims"));
  if (f.kind == "channel") {
    if (f.dims.size() != 2) fail(Errc::ParseError, "channel dims are [d_out, d_in]");
    const std::size_t terms = static_cast<std::size_t>(parse_int_list(f.meta("terms"), "terms").front());
    return terms * (static_cast<std::size_t>(f.dims[0]) * f.dims[0] + static_cast<std::size_t>(f.dims[1]) * f.dims[1]);
  }
  if (f.kind == "nonneg_matrix") {
    if (f.dims.size() != 2) fail(Errc::ParseError, "nonneg_matrix dims are [rows, cols]");
    return product(f.dims);
  }
  fail(Errc::ParseError, "unknown kind '" + f.kind + "'");
}

}  // namespace detail

inline StateFile parse_state_file(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("invalid JSON: ") + e.what());
  }
  StateFile f;
  try {
    f.schema_version = j.at("schema_version").get<std::string>();
    f.kind = j.at("kind").get<std::string>();
    f.dims = j.at("dims").get<std::vector<int>>();
    for (const auto& entry : j.at("payload")) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
        fail(Errc::ParseError, "payload entries must be [re, im] number pairs");
      f.payload.emplace_back(entry[0].get<double>(), entry[1].get<double>());
    }
    if (j.contains("metadata")) f.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("malformed state file: ") + e.what());
  }
  if (f.schema_version != kSchemaVersion)
    fail(Errc::ParseError, "unsupported schema_version '" + f.schema_version + "'");
  const std::size_t want = detail::expected_payload(f);
  if (f.payload.size() != want)
    fail(Errc::ParseError, "payload has " + std::to_string(f.payload.size()) + " entries, expected " + std::to_string(want));
  return f;
}

inline std::string dump_state_file(const StateFile& f) {
  nlohmann::json j;
  j["schema_version"] = f.schema_version;
  j["kind"] = f.kind;
  j["dims"] = f.dims;
  nlohmann::json payload = nlohmann::json::array();
  for (const Complex& z : f.payload) payload.push_back({z.real(), z.imag()});
  j["payload"] = std::move(payload);
  j["metadata"] = f.metadata;
  return j.dump(1) + "\n";
}

inline StateFile read_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ParseError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_state_file(ss.str());
}

inline void write_state_file(const std::string& path, const StateFile& f) {
  std::ofstream out(path);
  if (!out) fail(Errc::ParseError, "cannot write '" + path + "'");
  out << dump_state_file(f);
}

inline void append_matrix(std::vector<Complex>& payload, const CMatrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k) payload.push_back(m(i, k));
}

inline CMatrix take_matrix(const std::vector<Complex>& payload, std::size_t& pos, Index rows, Index cols) {
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = payload.at(pos++);
  return m;
}

inline void record_tolerances(StateFile& f, const Tolerances& tol) {
  f.metadata["tol.herm"] = format_double(tol.herm);
  f.metadata["tol.pd"] = format_double(tol.pd);
  f.metadata["tol.rank"] = format_double(tol.rank);
  f.metadata["tol.recon"] = format_double(tol.recon);
  f.metadata["tol.cert"] = format_double(tol.cert);
  f.metadata["tol.dense_limit"] = std::to_string(tol.dense_limit);
}

inline Tolerances read_tolerances(const StateFile& f) {
  Tolerances tol;
  auto get = [&](const char* key, double& slot) {
    if (auto it = f.metadata.find(key); it != f.metadata.end()) slot = parse_double(it->second, key);
  };
  get("tol.herm", tol.herm);
  get("tol.pd", tol.pd);
  get("tol.rank", tol.rank);
  get("tol.recon", tol.recon);
  get("tol.cert", tol.cert);
  if (auto it = f.metadata.find("tol.dense_limit"); it != f.metadata.end())
    tol.dense_limit = static_cast<std::size_t>(parse_int_list(it->second, "tol.dense_limit").front());
  return tol;
}

// ---- dense states ----

inline StateFile dense_state_file(const CMatrix& rho, const std::vector<int>& dims) {
  StateFile f;
  f.kind = "dense_state";
  f.dims = dims;
  if (detail::product(dims) != static_cast<std::size_t>(rho.rows()) || rho.rows() != rho.cols())
    fail(Errc::DimensionMismatch, "state size does not match dims");
  append_matrix(f.payload, rho);
  return f;
}

inline CMatrix dense_from_file(const StateFile& f) {
  if (f.kind != "dense_state") fail(Errc::ParseError, "expected a dense_state file, got '" + f.kind + "'");
  const Index n = static_cast<Index>(detail::product(f.dims));
  std::size_t pos = 0;
  return take_matrix(f.payload, pos, n, n);
}

// ---- chains and certificates ----

inline StateFile mpdo_file(const MpdoCores& m, const std::string& kind = "mpdo") {
  m.validate();
  StateFile f;
  f.kind = kind;
  f.dims = m.dims;
  f.metadata["bond_dims"] = join_ints(m.bond_dims);
  f.metadata["hermitian"] = m.hermitian ? "true" : "false";
  for (int l = 0; l < m.sites(); ++l)
    for (int a = 0; a < m.left_bond(l); ++a)
      for (int b = 0; b < m.right_bond(l); ++b) append_matrix(f.payload, m.core(l, a, b));
  return f;
}

inline MpdoCores mpdo_from_file(const StateFile& f) {
  if (f.kind != "mpdo" && f.kind != "certificate")
    fail(Errc::ParseError, "expected an mpdo or certificate file, got '" + f.kind + "'");
  if (f.dims.size() < 2) fail(Errc::ParseError, "a chain needs at least two sites");
  MpdoCores m = MpdoCores::zeros(f.dims, parse_int_list(f.meta("bond_dims"), "bond_dims"));
  if (auto it = f.metadata.find("hermitian"); it != f.metadata.end()) m.hermitian = it->second == "true";
  std::size_t pos = 0;
  for (int l = 0; l < m.sites(); ++l)
    for (int a = 0; a < m.left_bond(l); ++a)
      for (int b = 0; b < m.right_bond(l); ++b) m.core(l, a, b) = take_matrix(f.payload, pos, m.dims[l], m.dims[l]);
  return m;
}

inline StateFile certificate_file(const SepCertificate& cert) {
  StateFile f = mpdo_file(cert.decomposition, "certificate");
  f.metadata["hermitian"] = "true";
  f.metadata["residual"] = format_double(cert.residual);
  f.metadata["min_factor_eig"] = format_double(cert.min_factor_eig);
  f.metadata["terms"] = std::to_string(cert.terms());
  record_tolerances(f, cert.tolerances);
  for (const CutMetadata& c : cert.cone_metadata) {
    const std::string p = "cut" + std::to_string(c.cut + 1) + ".";
    f.metadata[p + "kind"] = c.folded ? "folded" : std::string(to_string(c.kind));
    if (c.folded) continue;
    f.metadata[p + "case"] = std::string(to_string(c.trace.path));
    f.metadata[p + "compression_index"] = std::to_string(c.trace.compression_index);
    f.metadata[p + "refined"] = c.trace.refined ? "true" : "false";
    if (c.trace.kernel_dim > 0) f.metadata[p + "kernel_dim"] = std::to_string(c.trace.kernel_dim);
    if (c.trace.epsilon != 0.0) f.metadata[p + "epsilon"] = format_double(c.trace.epsilon);
    std::string rays;
    for (const Ray& r : c.rays) rays += (rays.empty() ? "" : ";") + format_double(r.x()) + "," + format_double(r.y());
    f.metadata[p + "rays"] = rays;
  }
  return f;
}

inline SepCertificate certificate_from_file(const StateFile& f) {
  if (f.kind != "certificate") fail(Errc::ParseError, "expected a certificate file, got '" + f.kind + "'");
  SepCertificate cert;
  cert.decomposition = mpdo_from_file(f);
  cert.tolerances = read_tolerances(f);
  if (auto it = f.metadata.find("residual"); it != f.metadata.end()) cert.residual = parse_double(it->second, "residual");
  if (auto it = f.metadata.find("min_factor_eig"); it != f.metadata.end())
    cert.min_factor_eig = parse_double(it->second, "min_factor_eig");
  return cert;
}

// ---- channels and nonnegative matrices ----

inline StateFile channel_file(const ChannelRep& ch) {
  ch.validate();
  StateFile f;
  f.kind = "channel";
  f.dims = {ch.d_out, ch.d_in};
  f.metadata["terms"] = std::to_string(ch.terms.size());
  for (const auto& t : ch.terms) {
    append_matrix(f.payload, t.a);
    append_matrix(f.payload, t.b);
  }
  return f;
}

inline ChannelRep channel_from_file(const StateFile& f) {
  if (f.kind != "channel") fail(Errc::ParseError, "expected a channel file, got '" + f.kind + "'");
  ChannelRep ch;
  ch.d_out = f.dims[0];
  ch.d_in = f.dims[1];
  const int terms = parse_int_list(f.meta("terms"), "terms").front();
  std::size_t pos = 0;
  for (int t = 0; t < terms; ++t) {
    FactorPair p;
    p.a = take_matrix(f.payload, pos, ch.d_out, ch.d_out);
    p.b = take_matrix(f.payload, pos, ch.d_in, ch.d_in);
    ch.terms.push_back(std::move(p));
  }
  return ch;
}

inline StateFile nonneg_file(const RMatrix& m) {
  StateFile f;
  f.kind = "nonneg_matrix";
  f.dims = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  append_matrix(f.payload, m.cast<Complex>());
  return f;
}

inline RMatrix nonneg_from_file(const StateFile& f) {
  if (f.kind != "nonneg_matrix") fail(Errc::ParseError, "expected a nonneg_matrix file, got '" + f.kind + "'");
  std::size_t pos = 0;
  const CMatrix m = take_matrix(f.payload, pos, f.dims[0], f.dims[1]);
  if (m.imag().cwiseAbs().maxCoeff() != 0.0) fail(Errc::ParseError, "nonneg_matrix entries must be real");
  return m.real();
}

}  // namespace sepcert
