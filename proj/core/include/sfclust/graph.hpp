#pragma once

#include <string>
#include <vector>

#include "sfclust/types.hpp"

namespace sfclust {

/// Symmetric neighbor structure with nonnegative edge weights. Neighbor
/// lists are sorted by index; j in adj[i] iff i in adj[j], with equal weights.
struct NeighborGraph {
    struct Edge {
        int to = 0;
        double weight = 1.0;
    };

    int n = 0;
    std::vector<std::vector<Edge>> adj;

    std::size_t edge_count() const;

    /// Visits each undirected edge once (i < j).
    template <typename F>
    void for_each_edge(F&& f) const {
        for (int i = 0; i < n; ++i)
            for (const Edge& e : adj[static_cast<std::size_t>(i)])
                if (e.to > i) f(i, e.to, e.weight);
    }

    /// Throws ValidationError on self-loops, asymmetry, or negative weights.
    void validate() const;
};

/// Great-circle distance with Earth radius 6371.0 km.
double haversine_distance_km(const SiteGeometry& a, const SiteGeometry& b);

/// Symmetrized k-nearest-neighbor graph under haversine distance; distance
/// ties are broken by site order. All edge weights start at 1.
NeighborGraph knn_graph(const std::vector<SiteGeometry>& sites, int k);

/// Drops every edge whose absolute elevation difference exceeds threshold_m
/// (strictly; an exact 1000 m difference survives the default). Isolated
/// sites are allowed.
[[nodiscard]] NeighborGraph apply_elevation_cutoff(NeighborGraph g,
                                                   const std::vector<SiteGeometry>& sites,
                                                   double threshold_m = 1000.0);

enum class WeightScheme { binary_cutoff, exp_decay };

std::string to_string(WeightScheme scheme);
WeightScheme weight_scheme_from_string(const std::string& s);

/// Geographic-covariate edge weights. binary_cutoff removes edges above the
/// elevation threshold (weight 1 otherwise); exp_decay sets
/// w_ij = exp(-|elev_i - elev_j| / h_m).
[[nodiscard]] NeighborGraph covariate_weights(NeighborGraph g,
                                              const std::vector<SiteGeometry>& sites,
                                              WeightScheme scheme, double param);

}  // namespace sfclust
