#include "sfclust/types.hpp"

#include <cmath>
#include <set>

#include "sfclust/errors.hpp"

namespace sfclust {

void SiteGeometry::validate() const {
    if (site_id.empty()) throw ValidationError("geometry: empty site_id");
    if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0))
        throw ValidationError("site " + site_id + ": latitude out of [-90, 90]");
    if (!(longitude_deg >= -180.0 && longitude_deg <= 180.0))
        throw ValidationError("site " + site_id + ": longitude out of [-180, 180]");
    if (!std::isfinite(elevation_m))
        throw ValidationError("site " + site_id + ": non-finite elevation");
}

void AnnualCurve::validate() const {
    if (site_id.empty()) throw ValidationError("curve: empty site_id");
    if (times.size() != values.size())
        throw ValidationError("site " + site_id + ": times/values length mismatch");
    if (times.size() == 0) throw ValidationError("site " + site_id + ": empty curve");
    double prev = 0.0;
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        const double t = times[j];
        if (!(t > 0.0 && t < 1.0))
            throw ValidationError("site " + site_id + ": time outside (0, 1)");
        if (j > 0 && !(t > prev))
            throw ValidationError("site " + site_id + ": times not strictly increasing");
        prev = t;
        if (!std::isfinite(values[j]))
            throw ValidationError("site " + site_id + ": non-finite value");
    }
    if (years_used < 1) throw ValidationError("site " + site_id + ": years_used < 1");
}

void Dataset::validate() const {
    if (curves.size() != geometry.size())
        throw ValidationError("dataset: curve/geometry count mismatch");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        curves[i].validate();
        geometry[i].validate();
        if (curves[i].site_id != geometry[i].site_id)
            throw ValidationError("dataset: misaligned site ids at index " + std::to_string(i) +
                                  " (" + curves[i].site_id + " vs " + geometry[i].site_id + ")");
        if (!seen.insert(curves[i].site_id).second)
            throw ValidationError("dataset: duplicate site_id " + curves[i].site_id);
    }
}

void validate_labels(const LabelField& labels, int n_clusters, std::size_t n_sites) {
    if (labels.size() != n_sites)
        throw ValidationError("label field length " + std::to_string(labels.size()) +
                              " does not match site count " + std::to_string(n_sites));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_clusters)
            throw ValidationError("label out of range at site index " + std::to_string(i));
    }
}

}  // namespace sfclust
