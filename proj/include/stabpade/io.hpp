#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "stabpade/continuation.hpp"
#include "stabpade/stabilization.hpp"

namespace stabpade {

enum class ImportFormat { csv, json };
std::string to_string(ImportFormat format);
ImportFormat import_format_from_string(const std::string& name);

// Stabilization CSV:
//
//   # key: value            metadata, kept verbatim
//   alpha,root,energy       header; the root column may be omitted
//   0.6,0,-0.51
//   ...
//
// One row per (alpha, root).  alpha values must appear in increasing order
// (rows of one alpha contiguous).  With a root column every root needs a row
// at every alpha and the curves are taken as tracked.  Without one, each
// alpha row set is sorted and joined to the previous alpha by nearest energy;
// tracking is then flagged nearest_energy.
StabilizationData read_stabilization_csv(std::istream& in);
void write_stabilization_csv(std::ostream& out, const StabilizationData& data);

// JSON mirrors the StabilizationData fields; tracking_quality may be omitted.
StabilizationData read_stabilization_json(std::istream& in);
void write_stabilization_json(std::ostream& out, const StabilizationData& data);

StabilizationData import_stabilization(const std::string& path, ImportFormat format);
void export_stabilization(const std::string& path, const StabilizationData& data, ImportFormat format);

// theta,alpha,re_e,im_e,pade_error
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
// alpha,theta,d_theta,d_alpha
void write_landscape_csv(std::ostream& out, const DerivativeLandscape& landscape);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a(const std::string& bytes);
std::string content_id(const std::string& bytes);

std::string read_file(const std::string& path);
// Writes through a temporary file and renames, so readers never see a partial file.
void write_file(const std::string& path, const std::string& contents);

}  // namespace stabpade
