#include "weightforge/json_io.hpp"

#include <cstdint>
#include <stdexcept>

namespace weightforge {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* context) {
  if (!j.is_object())
    throw std::invalid_argument(std::string(context) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument(std::string(context) + ": unknown field '" +
                                  it.key() + "'");
  }
}

namespace {

std::vector<double> doubles_from(const json& j, const char* context) {
  if (!j.is_array())
    throw std::invalid_argument(std::string(context) + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number())
      throw std::invalid_argument(std::string(context) + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json exponent_to_json(double p) {
  if (is_inf(p)) return json("inf");
  return json(p);
}

double exponent_from_json(const json& j, const char* context) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw std::invalid_argument(std::string(context) + ": exponent string must be 'inf'");
  }
  if (!j.is_number())
    throw std::invalid_argument(std::string(context) + ": exponent must be a number or 'inf'");
  return j.get<double>();
}

}  // namespace

json to_json(const MeasureSpace& m) { return json{{"masses", m.masses}}; }

json to_json(const SpaceDescriptor& s) {
  return json{{"p", exponent_to_json(s.exponent)},
              {"weight", s.weight},
              {"measure", to_json(s.measure)}};
}

json to_json(const OperatorModel& op) {
  json rows = json::array();
  for (std::size_t i = 0; i < op.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < op.cols(); ++j) row.push_back(op.matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"matrix", std::move(rows)},
              {"domain", to_json(op.domain)},
              {"codomain", to_json(op.codomain)}};
}

json to_json(const WeightFamily& f) {
  json members = json::array();
  for (const auto& v : f.members) members.push_back(v);
  return json{{"measure", to_json(f.base)}, {"members", std::move(members)}};
}

MeasureSpace measure_from_json(const json& j) {
  require_keys(j, {"masses"}, "measure");
  if (!j.contains("masses")) throw std::invalid_argument("measure: missing 'masses'");
  MeasureSpace m{doubles_from(j["masses"], "measure.masses")};
  m.validate();
  return m;
}

SpaceDescriptor space_from_json(const json& j) {
  require_keys(j, {"p", "weight", "measure"}, "space");
  for (const char* k : {"p", "weight", "measure"})
    if (!j.contains(k))
      throw std::invalid_argument(std::string("space: missing '") + k + "'");
  SpaceDescriptor s{measure_from_json(j["measure"]),
                    exponent_from_json(j["p"], "space.p"),
                    doubles_from(j["weight"], "space.weight")};
  s.validate();
  return s;
}

OperatorModel operator_from_json(const json& j) {
  require_keys(j, {"matrix", "domain", "codomain"}, "operator");
  for (const char* k : {"matrix", "domain", "codomain"})
    if (!j.contains(k))
      throw std::invalid_argument(std::string("operator: missing '") + k + "'");
  OperatorModel op;
  op.domain = space_from_json(j["domain"]);
  op.codomain = space_from_json(j["codomain"]);
  const auto& rows = j["matrix"];
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument("operator.matrix: expected a nonempty array of rows");
  op.matrix = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto row = doubles_from(rows[i], "operator.matrix row");
    if (row.size() != op.matrix.cols)
      throw std::invalid_argument("operator.matrix: ragged rows");
    for (std::size_t c = 0; c < row.size(); ++c) op.matrix.at(i, c) = row[c];
  }
  op.validate();
  return op;
}

WeightFamily family_from_json(const json& j) {
  require_keys(j, {"measure", "members"}, "family");
  for (const char* k : {"measure", "members"})
    if (!j.contains(k))
      throw std::invalid_argument(std::string("family: missing '") + k + "'");
  WeightFamily f;
  f.base = measure_from_json(j["measure"]);
  if (!j["members"].is_array())
    throw std::invalid_argument("family.members: expected an array");
  for (const auto& m : j["members"])
    f.members.push_back(doubles_from(m, "family member"));
  f.validate();
  return f;
}

KernelSpec kernel_from_json(const json& j) {
  require_keys(j, {"grid", "x_masses", "y_masses"}, "kernel");
  for (const char* k : {"grid", "x_masses", "y_masses"})
    if (!j.contains(k))
      throw std::invalid_argument(std::string("kernel: missing '") + k + "'");
  KernelSpec spec;
  spec.x_measure = MeasureSpace{doubles_from(j["x_masses"], "kernel.x_masses")};
  spec.y_measure = MeasureSpace{doubles_from(j["y_masses"], "kernel.y_masses")};
  if (!j["grid"].is_array()) throw std::invalid_argument("kernel.grid: expected rows");
  for (const auto& row : j["grid"])
    spec.grid.push_back(doubles_from(row, "kernel.grid row"));
  return spec;
}

std::string json_digest(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json certificate_to_json(const DominationCertificate& cert) {
  json j{{"kind", "domination"},
         {"p", cert.p},
         {"C", cert.constant},
         {"y_star", cert.y_star},
         {"z_star", cert.z_star},
         {"cuts", cert.cuts.size()},
         {"residual", cert.residual},
         {"certified", cert.certified},
         {"route", cert.route}};
  j["id"] = json_digest(j);
  return j;
}

json certificate_to_json(const PietschCertificate& cert) {
  json eta = json::object();
  for (std::size_t k = 0; k < cert.eta.size(); ++k) {
    if (cert.eta[k] != 0.0) eta[std::to_string(k)] = cert.eta[k];
  }
  json support = json::array();
  for (const auto& x : cert.support) support.push_back(x);
  json j{{"kind", "pietsch"},
         {"p", cert.p},
         {"C", cert.constant},
         {"y_star", cert.y_star},
         {"eta", std::move(eta)},
         {"support", std::move(support)},
         {"cuts", cert.cuts.size()},
         {"residual", cert.residual},
         {"certified", cert.certified},
         {"route", cert.route}};
  j["id"] = json_digest(j);
  return j;
}

DominationCertificate domination_certificate_from_json(const json& j) {
  require_keys(j, {"kind", "p", "C", "y_star", "z_star", "cuts", "residual",
                   "certified", "route", "id"},
               "certificate");
  DominationCertificate cert;
  cert.p = j.at("p").get<double>();
  cert.constant = j.at("C").get<double>();
  cert.y_star = doubles_from(j.at("y_star"), "certificate.y_star");
  cert.z_star = doubles_from(j.at("z_star"), "certificate.z_star");
  cert.residual = j.at("residual").get<double>();
  cert.certified = j.at("certified").get<bool>();
  cert.route = j.at("route").get<std::string>();
  return cert;
}

PietschCertificate pietsch_certificate_from_json(const json& j) {
  require_keys(j, {"kind", "p", "C", "y_star", "eta", "support", "cuts", "residual",
                   "certified", "route", "id"},
               "certificate");
  PietschCertificate cert;
  cert.p = j.at("p").get<double>();
  cert.constant = j.at("C").get<double>();
  cert.y_star = doubles_from(j.at("y_star"), "certificate.y_star");
  for (const auto& x : j.at("support"))
    cert.support.push_back(doubles_from(x, "certificate.support"));
  cert.eta.assign(cert.support.size(), 0.0);
  for (auto it = j.at("eta").begin(); it != j.at("eta").end(); ++it) {
    std::size_t k = std::stoul(it.key());
    if (k >= cert.eta.size())
      throw std::invalid_argument("certificate.eta: index out of range");
    cert.eta[k] = it.value().get<double>();
  }
  cert.residual = j.at("residual").get<double>();
  cert.certified = j.at("certified").get<bool>();
  cert.route = j.at("route").get<std::string>();
  return cert;
}

}  // namespace weightforge
