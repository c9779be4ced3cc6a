#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sfclust/graph.hpp"
#include "sfclust/model.hpp"
#include "sfclust/types.hpp"

namespace sfclust::io {

inline constexpr char kToolVersion[] = "0.1.0";

/// Stamped into every output file so results can be traced to the exact
/// configuration and seed that produced them.
struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

std::string provenance_line(const Provenance& p);

/// Aggregated curves: `site_id,time,value,years_used`, one row per
/// observation, rows of a site contiguous with strictly increasing times.
void write_curves_csv(const std::string& path, const std::vector<AnnualCurve>& curves,
                      const Provenance& p);
std::vector<AnnualCurve> read_curves_csv(const std::string& path);

/// Geometry in the ingest input format `site_id,lat,lon,elev_m`.
void write_geometry_csv(const std::string& path, const std::vector<SiteGeometry>& sites,
                        const Provenance& p);

/// Daily observations `site_id,date,value` for a single non-leap year;
/// every curve must have exactly 365 values.
void write_observations_csv(const std::string& path, const Dataset& data, int year,
                            const Provenance& p);

/// Cluster assignments `site_id,cluster,posterior_1..posterior_C`;
/// clusters are written 1-based.
void write_assignments_csv(const std::string& path, const std::vector<std::string>& site_ids,
                           const LabelField& labels, const Eigen::MatrixXd& posteriors,
                           const Provenance& p);

/// Bare labeling `site_id,cluster` (1-based), e.g. simulation ground truth.
void write_labels_csv(const std::string& path, const std::vector<std::string>& site_ids,
                      const LabelField& labels, const Provenance& p);

/// Reads `site_id,cluster` pairs from either labels or assignments files
/// (extra posterior columns are ignored). Clusters returned as stored.
std::vector<std::pair<std::string, int>> read_labels_csv(const std::string& path);

/// Objective trace `iteration,objective`.
void write_trace_csv(const std::string& path, const std::vector<double>& objective,
                     const Provenance& p);

/// Edge list `site_a,site_b,weight` with each undirected edge written once.
void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const std::vector<std::string>& site_ids, const Provenance& p);

/// GeoJSON FeatureCollection of site points with `site_id`, `cluster`
/// (1-based) and `posterior_max` properties, for direct map rendering.
void write_geojson(const std::string& path, const std::vector<SiteGeometry>& sites,
                   const LabelField& labels, const Eigen::MatrixXd& posteriors,
                   const Provenance& p);

/// Versioned flat-text parameter snapshot (coefficients, covariances, theta,
/// basis, cumulative transform), written at full precision.
void write_params(const std::string& path, const ModelParams& params, const Provenance& p);
ModelParams read_params(const std::string& path);

}  // namespace sfclust::io
