#pragma once

#include <string>

#include "json.hpp"

#include "stabpade/continuation.hpp"
#include "stabpade/model.hpp"
#include "stabpade/schlessinger.hpp"
#include "stabpade/stabilization.hpp"
#include "stabpade/ucs.hpp"

// JSON forms of the domain types.  Field names follow the C++ members;
// complex numbers are [re, im]; NaN is null and infinities are "inf"/"-inf".
// Objects are written with sorted keys so equal values give equal bytes.

namespace stabpade {

using json = nlohmann::json;

json number_to_json(double x);
double number_from_json(const json& j);
json complex_to_json(cplx z);
cplx complex_from_json(const json& j);

// Shortest decimal that reads back to the same double.
std::string format_double(double x);

void to_json(json& j, const ModelSpec& v);
void from_json(const json& j, ModelSpec& v);
void to_json(json& j, const BasisSpec& v);
void from_json(const json& j, BasisSpec& v);
void to_json(json& j, const ScalingParameter& v);
void from_json(const json& j, ScalingParameter& v);
void to_json(json& j, const StabilizationData& v);
void from_json(const json& j, StabilizationData& v);
void to_json(json& j, const AvoidedCrossing& v);
void from_json(const json& j, AvoidedCrossing& v);
void to_json(json& j, const StableWindow& v);
void from_json(const json& j, StableWindow& v);
void to_json(json& j, const WindowOptions& v);
void from_json(const json& j, WindowOptions& v);
void to_json(json& j, const WindowReport& v);
void from_json(const json& j, WindowReport& v);
void to_json(json& j, const ContinuedFraction& v);
void from_json(const json& j, ContinuedFraction& v);
void to_json(json& j, const Trajectory& v);
void from_json(const json& j, Trajectory& v);
void to_json(json& j, const SeedRegion& v);
void from_json(const json& j, SeedRegion& v);
void to_json(json& j, const StationaryPoint& v);
void from_json(const json& j, StationaryPoint& v);
void to_json(json& j, const DerivativeLandscape& v);
void from_json(const json& j, DerivativeLandscape& v);
void to_json(json& j, const BranchPointEstimate& v);
void from_json(const json& j, BranchPointEstimate& v);
void to_json(json& j, const UcsStationaryPoint& v);
void from_json(const json& j, UcsStationaryPoint& v);

// Member lookup that reports the missing or mistyped field by name.
template <class T>
T get_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing field");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(key, e.what());
  }
}

}  // namespace stabpade
