#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "barrierkit/barrier.hpp"
#include "barrierkit/oracle.hpp"
#include "barrierkit/tangency.hpp"

namespace barrierkit::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Fixed-format double rendering (%.17g) so reruns are byte-identical.
std::string fmt(double v);

/// FNV-1a 64-bit content hash, hex-encoded.
std::string fnv1a_hex(const std::string& content);

/// Reproducibility record written alongside every output set.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> options;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
};

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

// --- barrier artifacts ------------------------------------------------------

/// Columns: t, x_1..x_n, lambda_1..lambda_n, u_1..u_m, H_residual.
void write_arc_csv(const std::filesystem::path& path, const SystemModel& sys,
                   const BarrierArc& arc);

/// Arc nodes are decimated to at most max_nodes_per_arc (0 = keep all).
nlohmann::json boundary_json(const SystemModel& sys, const AdmissibleBoundary& boundary,
                             std::size_t max_nodes_per_arc = 4000);
void write_boundary_json(const std::filesystem::path& path, const SystemModel& sys,
                         const AdmissibleBoundary& boundary,
                         std::size_t max_nodes_per_arc = 4000);

/// Rebuild enough of a boundary from its JSON export to run verification
/// (arc states, adjoints, controls, endpoints; derivatives are not restored).
AdmissibleBoundary load_boundary_json(const std::filesystem::path& path);

/// Gnuplot-friendly blocks: one index per arc, then usable segments, corners.
void write_boundary_gnuplot(const std::filesystem::path& path, const SystemModel& sys,
                            const AdmissibleBoundary& boundary);

/// Static polyline rendering (first two state axes).
void write_boundary_svg(const std::filesystem::path& path, const SystemModel& sys,
                        const ConstraintSet& cs, const AdmissibleBoundary& boundary, const Vec& lo,
                        const Vec& hi);

// --- oracle artifacts -------------------------------------------------------

void write_grid_csv(const std::filesystem::path& path, const GridResult& grid,
                    std::size_t horizon_index = 0);

/// Plain-text P2 raster over the first two axes: 0 inadmissible, 1 unknown,
/// 2 admissible.
void write_grid_pgm(const std::filesystem::path& path, const GridResult& grid,
                    std::size_t horizon_index = 0);

nlohmann::json tangency_json(const std::vector<TangencyPoint>& points);
nlohmann::json verdict_json(const AdmissibilityVerdict& verdict);
nlohmann::json semi_report_json(const SemiReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace barrierkit::io
