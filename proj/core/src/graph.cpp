#include "sfclust/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <set>
#include <utility>

#include "sfclust/errors.hpp"

namespace sfclust {

namespace {

constexpr double kEarthRadiusKm = 6371.0;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::size_t NeighborGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto& list : adj) total += list.size();
    return total / 2;
}

void NeighborGraph::validate() const {
    if (static_cast<std::size_t>(n) != adj.size())
        throw ValidationError("graph: adjacency size mismatch");
    for (int i = 0; i < n; ++i) {
        int prev = -1;
        for (const Edge& e : adj[static_cast<std::size_t>(i)]) {
            if (e.to == i) throw ValidationError("graph: self-loop at " + std::to_string(i));
            if (e.to < 0 || e.to >= n) throw ValidationError("graph: neighbor index out of range");
            if (e.to <= prev) throw ValidationError("graph: neighbor list not sorted/unique");
            prev = e.to;
            if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
                throw ValidationError("graph: bad edge weight");
            const auto& back = adj[static_cast<std::size_t>(e.to)];
            auto it = std::lower_bound(back.begin(), back.end(), i,
                                       [](const Edge& a, int b) { return a.to < b; });
            if (it == back.end() || it->to != i || it->weight != e.weight)
                throw ValidationError("graph: asymmetric edge " + std::to_string(i) + "-" +
                                      std::to_string(e.to));
        }
    }
}

double haversine_distance_km(const SiteGeometry& a, const SiteGeometry& b) {
    const double phi1 = deg2rad(a.latitude_deg);
    const double phi2 = deg2rad(b.latitude_deg);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(b.longitude_deg - a.longitude_deg);
    const double s1 = std::sin(0.5 * dphi);
    const double s2 = std::sin(0.5 * dlambda);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

NeighborGraph knn_graph(const std::vector<SiteGeometry>& sites, int k) {
    const int n = static_cast<int>(sites.size());
    if (k < 1) throw ConfigError("knn_graph: k must be >= 1");
    if (n < k + 1)
        throw ConfigError("knn_graph: need at least k + 1 = " + std::to_string(k + 1) + " sites");
    {
        std::set<std::string> ids;
        for (const auto& s : sites)
            if (!ids.insert(s.site_id).second)
                throw ValidationError("knn_graph: duplicate site_id " + s.site_id);
    }

    NeighborGraph g;
    g.n = n;
    g.adj.assign(static_cast<std::size_t>(n), {});

    std::set<std::pair<int, int>> edges;
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            dist[static_cast<std::size_t>(j)] = {
                haversine_distance_km(sites[static_cast<std::size_t>(i)],
                                      sites[static_cast<std::size_t>(j)]),
                j};
        dist[static_cast<std::size_t>(i)].first = std::numeric_limits<double>::infinity();
        // ties broken by site order (sites are sorted by site_id upstream)
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int m = 0; m < k; ++m) {
            const int j = dist[static_cast<std::size_t>(m)].second;
            edges.insert({std::min(i, j), std::max(i, j)});
        }
    }
    for (const auto& [i, j] : edges) {
        g.adj[static_cast<std::size_t>(i)].push_back({j, 1.0});
        g.adj[static_cast<std::size_t>(j)].push_back({i, 1.0});
    }
    for (auto& list : g.adj)
        std::sort(list.begin(), list.end(),
                  [](const NeighborGraph::Edge& a, const NeighborGraph::Edge& b) {
                      return a.to < b.to;
                  });
    return g;
}

NeighborGraph apply_elevation_cutoff(NeighborGraph g, const std::vector<SiteGeometry>& sites,
                                     double threshold_m) {
    if (sites.size() != static_cast<std::size_t>(g.n))
        throw ValidationError("elevation cutoff: geometry does not match graph");
    for (int i = 0; i < g.n; ++i) {
        auto& list = g.adj[static_cast<std::size_t>(i)];
        list.erase(std::remove_if(list.begin(), list.end(),
                                  [&](const NeighborGraph::Edge& e) {
                                      const double d =
                                          std::abs(sites[static_cast<std::size_t>(i)].elevation_m -
                                                   sites[static_cast<std::size_t>(e.to)].elevation_m);
                                      return d > threshold_m;
                                  }),
                   list.end());
    }
    return g;
}

std::string to_string(WeightScheme scheme) {
    return scheme == WeightScheme::binary_cutoff ? "binary_cutoff" : "exp_decay";
}

WeightScheme weight_scheme_from_string(const std::string& s) {
    if (s == "binary_cutoff") return WeightScheme::binary_cutoff;
    if (s == "exp_decay") return WeightScheme::exp_decay;
    throw ConfigError("unknown weight scheme '" + s + "' (expected binary_cutoff or exp_decay)");
}

NeighborGraph covariate_weights(NeighborGraph g, const std::vector<SiteGeometry>& sites,
                                WeightScheme scheme, double param) {
    if (sites.size() != static_cast<std::size_t>(g.n))
        throw ValidationError("covariate weights: geometry does not match graph");
    if (!(param > 0.0))
        throw ConfigError("covariate weights: scheme parameter must be positive");
    if (scheme == WeightScheme::binary_cutoff) return apply_elevation_cutoff(std::move(g), sites, param);
    for (int i = 0; i < g.n; ++i) {
        for (auto& e : g.adj[static_cast<std::size_t>(i)]) {
            const double d = std::abs(sites[static_cast<std::size_t>(i)].elevation_m -
                                      sites[static_cast<std::size_t>(e.to)].elevation_m);
            e.weight = std::exp(-d / param);
        }
    }
    return g;
}

}  // namespace sfclust
