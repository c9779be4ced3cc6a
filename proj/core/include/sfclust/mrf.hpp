#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>

#include "sfclust/graph.hpp"
#include "sfclust/rng.hpp"
#include "sfclust/types.hpp"

namespace sfclust {

enum class ScanOrder { systematic, random };

std::string to_string(ScanOrder order);
ScanOrder scan_order_from_string(const std::string& s);

/// Interaction strength and label alphabet of the spatial label field.
/// theta >= 0 (attractive smoothing) unless allow_negative_theta is set.
struct MrfParams {
    double theta = 0.0;
    int n_clusters = 2;
    bool allow_negative_theta = false;

    void validate() const;
};

/// Energy of assigning label k to site i given the rest of the field:
/// U_ik = theta * sum over neighbors j of w_ij * 1{Z_j = k}.
double local_energy(int site, int label, const LabelField& labels, const NeighborGraph& graph,
                    double theta);

/// Gibbs conditional P(Z_i = k | neighbors) = exp(U_ik) / sum_l exp(U_il),
/// computed with max-energy subtraction. Sums to 1.
Eigen::VectorXd conditional_probs(int site, const LabelField& labels, const NeighborGraph& graph,
                                  const MrfParams& params);

/// One sweep of single-site Gibbs resampling; systematic scans visit sites in
/// ascending index. Mutates the field in place.
void gibbs_sweep(LabelField& labels, const NeighborGraph& graph, const MrfParams& params,
                 Rng& rng, ScanOrder order = ScanOrder::systematic);

/// Convenience overload: one systematic sweep, deterministic given the seed.
LabelField gibbs_sweep(const LabelField& labels, const NeighborGraph& graph,
                       const MrfParams& params, std::uint64_t seed);

/// One ICM sweep in ascending site order: each site moves to
/// argmax_k [log_densities(i, k) + U_ik] using the latest labels; ties break
/// to the smallest label. Returns the number of changed labels.
int icm_sweep(LabelField& labels, const Eigen::MatrixXd& log_densities,
              const NeighborGraph& graph, const MrfParams& params);

/// Pure overload returning the updated field with the change count.
std::pair<LabelField, int> icm_sweep(const LabelField& labels,
                                     const Eigen::MatrixXd& log_densities,
                                     const NeighborGraph& graph, const MrfParams& params);

/// The objective ICM ascends: sum_i log_densities(i, Z_i)
/// + theta * sum over edges of w_ij * 1{Z_i = Z_j}.
double icm_objective(const Eigen::MatrixXd& log_densities, const LabelField& labels,
                     const NeighborGraph& graph, double theta);

/// Log pseudo-likelihood sum_i log P(Z_i | Z_neighbors; theta).
/// Equals -n log C at theta = 0.
double log_pseudo_likelihood(const LabelField& labels, const NeighborGraph& graph, double theta,
                             int n_clusters);

struct ThetaFit {
    double theta = 0.0;
    double log_pl = 0.0;
    bool at_lower_bound = false;
    bool at_upper_bound = false;
};

/// Maximum pseudo-likelihood estimate of theta by golden-section search on
/// [lo, hi] to absolute tolerance 1e-5. The log pseudo-likelihood is concave
/// in theta, so the interior optimum is unique; an optimum at a bound sets
/// the corresponding flag.
ThetaFit fit_theta(const LabelField& labels, const NeighborGraph& graph, int n_clusters,
                   double lo = 0.0, double hi = 10.0);

}  // namespace sfclust
