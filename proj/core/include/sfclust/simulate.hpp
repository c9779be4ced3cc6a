#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sfclust/basis.hpp"
#include "sfclust/graph.hpp"
#include "sfclust/mrf.hpp"
#include "sfclust/types.hpp"

namespace sfclust {

/// Generative settings: site placement, neighbor graph, true label-field and
/// curve parameters. Leaving `geometry` empty places `n_sites` uniformly on
/// the configured rectangle with i.i.d. elevations, so the elevation-cutoff
/// path is exercised. Leaving `alpha` or `gamma` empty falls back to
/// default_cluster_means() and gamma_scale^2 * I.
struct SimSpec {
    int n_sites = 200;
    std::vector<SiteGeometry> geometry;
    double lat_min = 0.0;
    double lat_max = 10.0;
    double lon_min = 0.0;
    double lon_max = 10.0;
    double elev_min = 0.0;
    double elev_max = 2000.0;

    int knn = 5;
    double elevation_cutoff_m = 1000.0;

    int n_clusters = 3;
    double theta = 1.0;
    Eigen::MatrixXd alpha;  // C x q
    Eigen::MatrixXd gamma;  // q x q
    double gamma_scale = 0.3;
    double sigma2 = 0.25;

    BasisSpec basis;
    int timepoints = 365;
    int burn_in = 200;
    ScanOrder scan_order = ScanOrder::systematic;
    std::uint64_t seed = 0;

    void validate() const;

    /// Supplied geometry, or the seed-deterministic uniform placement.
    std::vector<SiteGeometry> resolved_geometry() const;

    /// kNN graph with the elevation cutoff applied, on resolved_geometry().
    NeighborGraph build_graph() const;

    Eigen::MatrixXd resolved_alpha() const;
    Eigen::MatrixXd resolved_gamma() const;
};

/// Well-separated default cluster means: bump curves with distinct centers,
/// projected onto the basis by least squares over the lattice.
Eigen::MatrixXd default_cluster_means(const BasisSpec& basis, int n_clusters);

/// Burn-in convergence diagnostic: fraction of edges whose endpoints disagree
/// at the end of the burn-in, compared against the value 20 sweeps earlier.
struct GibbsDiagnostic {
    double discordant_fraction = 0.0;
    double reference_fraction = 0.0;
    bool stabilized = true;
};

/// Labels drawn from the Gibbs distribution: i.i.d. uniform start, then
/// `burn_in` sweeps at the true theta. Deterministic given the seed.
LabelField sample_labels(const SimSpec& spec, GibbsDiagnostic* diag = nullptr);

/// Curves drawn from the generative model: Y_i = S (alpha_{Z_i} + gamma_i)
/// + eps_i with gamma_i ~ N(0, Gamma), eps_i ~ N(0, sigma2 I), observed on
/// the grid (j - 0.5)/timepoints. Deterministic given the seed.
Dataset sample_curves(const LabelField& labels, const SimSpec& spec);

}  // namespace sfclust
