#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stabpade/continuation.hpp"
#include "stabpade/io.hpp"
#include "stabpade/serialize.hpp"
#include "stabpade/model.hpp"
#include "stabpade/stabilization.hpp"
#include "stabpade/ucs.hpp"

namespace stabpade {

inline constexpr int kSessionSchemaVersion = 1;

class MigrationError : public ValidationError {
 public:
  explicit MigrationError(int found)
      : ValidationError("schema_version", "session schema version " + std::to_string(found) +
                                              " is not readable by this build (expected " +
                                              std::to_string(kSessionSchemaVersion) + ")"),
        found_(found) {}
  int found() const noexcept { return found_; }

 private:
  int found_;
};

enum class Units { model_units, hartree };
std::string to_string(Units units);
Units units_from_string(const std::string& name);

struct ComputedSource {
  ModelSpec model;
  BasisSpec basis;

  bool operator==(const ComputedSource&) const = default;
};

struct ImportDescriptor {
  std::string path;
  ImportFormat format = ImportFormat::csv;
  std::string content_id;  // of the file bytes

  bool operator==(const ImportDescriptor&) const = default;
};

// Every record carries its own id and the id of the object it was derived
// from.  Ids hash the record content (parent included), so recomputing the
// same thing yields the same id.
struct StabilizationRecord {
  std::string id;
  std::vector<double> alpha_grid;  // as requested; empty for imports
  StabilizationData data;
  bool operator==(const StabilizationRecord&) const = default;
};

struct DetectionRecord {
  std::string id, parent;
  WindowOptions options;
  WindowReport report;
  bool operator==(const DetectionRecord&) const = default;
};

struct WindowRecord {
  std::string id, parent;
  StableWindow window;
  bool operator==(const WindowRecord&) const = default;
};

struct FitRecord {
  std::string id, parent;             // parent: window id
  std::vector<int> point_indices;     // grid indices actually fitted
  int order = 0;
  bool forced = false;                // fitted over a detected crossing on request
  std::vector<AvoidedCrossing> overridden;
  ContinuedFraction fraction;
  bool operator==(const FitRecord&) const = default;
};

struct TrajectoryRecord {
  std::string id, parent;  // parent: fit id
  Trajectory trajectory;
  bool operator==(const TrajectoryRecord&) const = default;
};

struct StationaryRecord {
  std::string id, parent;  // parent: fit id
  SeedRegion region;
  StationaryPoint point;
  bool operator==(const StationaryRecord&) const = default;
};

struct BranchPointRecord {
  std::string id, parent;
  BranchPointEstimate estimate;
  bool operator==(const BranchPointRecord&) const = default;
};

struct CrosscheckRecord {
  std::string id, parent;  // parent: stationary id
  UcsStationaryPoint ucs;
  double distance = 0.0;   // |E_pade - E_ucs|
  bool operator==(const CrosscheckRecord&) const = default;
};

struct LandscapeRecord {
  std::string id, parent;  // parent: fit id ("pade") or stabilization id ("ucs")
  std::string kind;        // "pade" or "ucs"
  cplx target{};           // ucs only
  DerivativeLandscape landscape;
  bool operator==(const LandscapeRecord&) const = default;
};

// Append-only analysis record.  Derived objects are added, never edited.
struct Session {
  std::string id;
  std::string created_at;  // ISO 8601 UTC
  std::optional<ComputedSource> computed;
  std::optional<ImportDescriptor> imported;
  Units units = Units::model_units;

  std::optional<StabilizationRecord> stabilization;
  std::vector<DetectionRecord> detections;
  std::vector<WindowRecord> windows;
  std::vector<FitRecord> fits;
  std::vector<TrajectoryRecord> trajectories;
  std::vector<StationaryRecord> stationary_points;
  std::vector<BranchPointRecord> branch_points;
  std::vector<CrosscheckRecord> crosschecks;
  std::vector<LandscapeRecord> landscapes;

  const WindowRecord* find_window(const std::string& id) const;
  const FitRecord* find_fit(const std::string& id) const;
  const StationaryRecord* find_stationary(const std::string& id) const;

  bool operator==(const Session&) const = default;
};

// created_at empty selects the current time.  The id hashes the source.
Session new_session(const ModelSpec& model, const BasisSpec& basis, Units units = Units::model_units,
                    std::string created_at = {});
Session new_import_session(const std::string& path, ImportFormat format, Units units = Units::model_units,
                           std::string created_at = {});
// Same, from file contents already in memory; label stands in for the path.
Session new_import_session_from_text(const std::string& text, const std::string& label, ImportFormat format,
                                     Units units = Units::model_units, std::string created_at = {});

// Each record in the session schema; the service sends these as payloads.
#define STABPADE_RECORD_JSON(R)        \
  void to_json(json& j, const R& r);   \
  void from_json(const json& j, R& r);
STABPADE_RECORD_JSON(StabilizationRecord)
STABPADE_RECORD_JSON(DetectionRecord)
STABPADE_RECORD_JSON(WindowRecord)
STABPADE_RECORD_JSON(FitRecord)
STABPADE_RECORD_JSON(TrajectoryRecord)
STABPADE_RECORD_JSON(StationaryRecord)
STABPADE_RECORD_JSON(BranchPointRecord)
STABPADE_RECORD_JSON(CrosscheckRecord)
STABPADE_RECORD_JSON(LandscapeRecord)
#undef STABPADE_RECORD_JSON

json session_to_json(const Session& session);
Session session_from_json(const json& j);

// Deterministic bytes: sorted keys, shortest round-trip numbers.
std::string serialize_session(const Session& session);
Session deserialize_session(const std::string& text);

void save_session(const Session& session, const std::string& path);
Session load_session(const std::string& path);

// Id of any record: prefix + hash of its JSON content without the id field.
std::string record_id(const std::string& prefix, const json& content);

std::string utc_timestamp();

}  // namespace stabpade
