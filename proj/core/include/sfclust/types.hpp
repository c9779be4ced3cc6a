#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace sfclust {

/// Station location and elevation. `site_id` is unique within a dataset.
struct SiteGeometry {
    std::string site_id;
    double latitude_deg = 0.0;   // [-90, 90]
    double longitude_deg = 0.0;  // [-180, 180]
    double elevation_m = 0.0;

    void validate() const;
};

/// One mean annual curve: values observed at strictly increasing times in
/// (0, 1). Aggregated daily data sits on the 365-point grid (d - 0.5)/365.
struct AnnualCurve {
    std::string site_id;
    Eigen::VectorXd times;
    Eigen::VectorXd values;
    int years_used = 1;

    void validate() const;
};

/// Curves plus geometry, aligned by index and sorted by site_id.
struct Dataset {
    std::vector<AnnualCurve> curves;
    std::vector<SiteGeometry> geometry;

    std::size_t size() const { return curves.size(); }

    /// Checks alignment, id uniqueness and per-curve invariants.
    void validate() const;
};

/// Cluster labels, one per site, in [0, C). Serialized 1-based.
using LabelField = std::vector<int>;

/// Throws ValidationError unless all labels are in [0, n_clusters) and the
/// field length matches n_sites.
void validate_labels(const LabelField& labels, int n_clusters, std::size_t n_sites);

}  // namespace sfclust
