#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sfclust/basis.hpp"
#include "sfclust/graph.hpp"
#include "sfclust/model.hpp"
#include "sfclust/types.hpp"

namespace sfclust {

/// Estimation settings. `n_clusters` holds the candidate cluster counts;
/// fit() uses the first entry, select_C() tries them all.
struct FitConfig {
    std::vector<int> n_clusters{2};
    int max_iter = 100;
    int icm_sweeps_per_iter = 3;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    int restarts = 5;

    BasisSpec basis;
    int lattice_points = 365;

    bool estimate_theta = true;
    double theta_init = 0.5;
    double theta_lo = 0.0;
    double theta_hi = 10.0;
    bool estimate_gamma = true;

    void validate() const;
};

/// Outcome of one estimation run. Labels are 0-based and canonical: clusters
/// ordered by descending size, ties broken by smallest contained site index.
struct FitResult {
    LabelField labels;
    ModelParams params;
    std::vector<double> objective_trace;  // J after each iteration
    Eigen::MatrixXd conditional_posteriors;  // n x C, rows sum to 1
    double objective = 0.0;              // final J
    double pseudo_bic = 0.0;
    bool converged = false;
    int iterations = 0;
    int n_clusters = 0;
};

/// Per-curve ordinary least squares basis coefficients, one row per curve.
Eigen::MatrixXd ols_coefficients(const CurveBases& bases);

/// K-means (k-means++ seeding, 50 iterations) on per-curve OLS coefficients.
/// Empty clusters are re-seeded with the point farthest from its center.
LabelField initialize_labels(const Dataset& data, const CurveBases& bases, int n_clusters,
                             std::uint64_t seed);

/// Full estimation: alternate label-field optimization (ICM) with coefficient
/// and covariance updates and the coupling-strength update, restarted
/// `config.restarts` times from distinct seeds; best run by final objective
/// J = sum_i log f(Y_i | Z_i) + log-pseudo-likelihood(Z; theta).
FitResult fit(const Dataset& data, const NeighborGraph& graph, const FitConfig& config);

/// Fits every candidate cluster count and picks the one minimizing
/// pseudo_bic = -2 J + p log n with p = C q + q(q+1)/2 + 2; ties go to the
/// smaller count. Candidates whose fit fails are reported and skipped.
struct SelectionResult {
    int best_n_clusters = 0;
    std::vector<FitResult> fits;        // successful candidates, in input order
    std::vector<std::string> failures;  // one message per failed candidate
};

SelectionResult select_C(const Dataset& data, const NeighborGraph& graph,
                         const FitConfig& config);

/// Per-site cluster membership probabilities at the fitted point, holding
/// neighbors at the final labels: row i is the softmax of
/// log f(Y_i | k) + theta * (weighted same-label neighbor mass).
Eigen::MatrixXd conditional_posteriors(const Dataset& data, const NeighborGraph& graph,
                                       const FitResult& result);

}  // namespace sfclust
