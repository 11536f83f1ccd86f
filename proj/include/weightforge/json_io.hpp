#pragma once
// JSON (de)serialization for the wire formats: measures, spaces, operators,
// weight families, kernels and certificates. Parsing is strict: unknown keys
// are rejected so malformed problem files fail fast.

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "weightforge/operator.hpp"
#include "weightforge/synthesis.hpp"
#include "weightforge/vector_measure.hpp"

namespace weightforge {

using json = nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* context);

json to_json(const MeasureSpace& m);
json to_json(const SpaceDescriptor& s);
json to_json(const OperatorModel& op);
json to_json(const WeightFamily& f);

MeasureSpace measure_from_json(const json& j);
SpaceDescriptor space_from_json(const json& j);
OperatorModel operator_from_json(const json& j);
WeightFamily family_from_json(const json& j);

struct KernelSpec {
  std::vector<std::vector<double>> grid;
  MeasureSpace x_measure;
  MeasureSpace y_measure;
};

KernelSpec kernel_from_json(const json& j);

// FNV-1a digest of the canonical dump; certificate ids and input digests.
std::string json_digest(const json& j);

json certificate_to_json(const DominationCertificate& cert);
json certificate_to_json(const PietschCertificate& cert);
DominationCertificate domination_certificate_from_json(const json& j);
PietschCertificate pietsch_certificate_from_json(const json& j);

}  // namespace weightforge
