#pragma once

#include <string>

#include "warpmix/types.hpp"

namespace warpmix {

/* Curve CSV schema: header `curve_id,step,d0..d{D-1}`; steps 0-based and
 * consecutive within each curve; rows may arrive in any order. Curves keep
 * their order of first appearance. */
CurveSet load_curves_csv(const std::string& path);
void save_curves_csv(const CurveSet& data, const std::string& path);

/* Versioned JSON model document; numbers round-trip exactly. Loading
 * re-validates every model invariant. */
void save_model(const WarpMixtureModel& model, const std::string& path);
WarpMixtureModel load_model(const std::string& path);

/* One row per (curve, observation): Viterbi component, grid position, offset
 * and residual components. Indices are 0-based in all files. */
void export_alignments(const WarpMixtureModel& model, const CurveSet& data,
                       const std::string& path);

/* Per (component, grid position, dimension): mean and mean -/+ 2 stddev. */
void export_cluster_bands(const WarpMixtureModel& model, const std::string& path);

/* Write-temp-then-rename; no partial files on failure. */
void write_text_atomic(const std::string& path, const std::string& content);

/* FNV-1a 64 content digest, hex encoded. */
std::string file_digest_hex(const std::string& path);

/* Shortest decimal string that parses back to exactly the same double. */
std::string format_double(double value);

}  // namespace warpmix
