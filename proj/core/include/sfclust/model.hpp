#pragma once

#include <Eigen/Core>

#include "sfclust/basis.hpp"
#include "sfclust/mrf.hpp"
#include "sfclust/types.hpp"

namespace sfclust {

/// Cluster mean coefficients, one row per cluster.
struct ClusterParams {
    Eigen::MatrixXd alpha;  // C x q

    int n_clusters() const { return static_cast<int>(alpha.rows()); }
    int q() const { return static_cast<int>(alpha.cols()); }
    void validate() const;
};

/// Shared random-effect covariance and noise variance.
struct CovParams {
    Eigen::MatrixXd gamma;  // q x q symmetric PSD
    double sigma2 = 1.0;

    static constexpr double sigma2_min = 1e-8;

    static CovParams zero_effects(int q, double sigma2 = 1.0);

    void validate() const;
};

/// Full parameter set: cluster means, covariances, label-field coupling,
/// basis family, and the cumulative coordinate change applied to it.
struct ModelParams {
    ClusterParams clusters;
    CovParams cov;
    MrfParams mrf;
    BasisSpec basis;
    OrthoTransform transform;

    void validate() const;
};

/// Gaussian log-density of one curve under cluster mean `alpha`:
/// y ~ N(S alpha, sigma2 I + S Gamma S^T). Works on q x q systems only;
/// the n x n covariance is never formed.
double marginal_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                       const Eigen::VectorXd& alpha, const CovParams& cov);

/// n x C matrix with entry (i, k) = marginal log-density of curve i under
/// cluster k. Rows follow dataset order.
Eigen::MatrixXd density_matrix(const Dataset& data, const CurveBases& bases,
                               const ClusterParams& clusters, const CovParams& cov);

/// Posterior law of the curve-specific random effect given the curve and its
/// cluster. Valid for singular Gamma (the posterior degenerates smoothly).
struct RandomEffectPosterior {
    Eigen::VectorXd mean;  // q
    Eigen::MatrixXd cov;   // q x q symmetric PSD
};

RandomEffectPosterior random_effect_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                                              const Eigen::VectorXd& alpha, const CovParams& cov);

/// One hard-assignment M-step at fixed labels: GLS cluster means under the
/// current covariances, then covariance updates from the random-effect
/// posteriors evaluated at the new means. Leaves the observed-data
/// log-likelihood no worse.
struct MStepResult {
    ClusterParams clusters;
    CovParams cov;
};

MStepResult m_step(const Dataset& data, const CurveBases& bases, const LabelField& labels,
                   int n_clusters, const CovParams& cov);

/// Sum of per-curve marginal log-densities at the assigned labels.
double observed_loglik(const Dataset& data, const CurveBases& bases,
                       const ClusterParams& clusters, const CovParams& cov,
                       const LabelField& labels);

}  // namespace sfclust
