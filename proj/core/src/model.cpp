#include "sfclust/model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "internal_linalg.hpp"
#include "sfclust/errors.hpp"

namespace sfclust {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Everything the Woodbury route needs, factored once per covariance and
// per time-grid group: K = sigma2 I + G A G with A = S^T S, G = Gamma^{1/2}.
struct GroupCache {
    const Eigen::MatrixXd* A = nullptr;
    Eigen::LLT<Eigen::MatrixXd> K_llt;
    double logdet_K = 0.0;
    Eigen::MatrixXd AG;  // A * G
    Eigen::MatrixXd M;   // S^T Sigma^{-1} S, symmetric
};

struct CovCache {
    Eigen::MatrixXd G;
    double sigma2 = 0.0;
    std::vector<GroupCache> groups;
};

CovCache build_cov_cache(const CurveBases& bases, const CovParams& cov, bool with_M) {
    const int q = bases.q();
    CovCache cache;
    cache.G = detail::sym_sqrt(cov.gamma, "Gamma");
    cache.sigma2 = cov.sigma2;
    cache.groups.resize(bases.n_groups());
    for (std::size_t g = 0; g < bases.n_groups(); ++g) {
        GroupCache& gc = cache.groups[g];
        gc.A = &bases.group_gram(g);
        Eigen::MatrixXd K = cov.sigma2 * Eigen::MatrixXd::Identity(q, q);
        K.noalias() += cache.G * (*gc.A) * cache.G;
        gc.K_llt.compute(detail::symmetrize(K));
        if (gc.K_llt.info() != Eigen::Success)
            throw ConditioningError("model: covariance system not positive definite");
        gc.logdet_K = 2.0 * gc.K_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        gc.AG.noalias() = (*gc.A) * cache.G;
        if (with_M) {
            Eigen::MatrixXd GA = gc.AG.transpose();
            Eigen::MatrixXd M = (*gc.A) - gc.AG * gc.K_llt.solve(GA);
            gc.M = detail::symmetrize(M) / cov.sigma2;
        }
    }
    return cache;
}

void check_model_dims(const CurveBases& bases, const CovParams& cov, int alpha_q,
                      const char* what) {
    if (alpha_q != bases.q())
        throw ValidationError(std::string(what) + ": alpha dimension does not match basis");
    if (cov.gamma.rows() != bases.q())
        throw ValidationError(std::string(what) + ": Gamma dimension does not match basis");
}

}  // namespace

void ClusterParams::validate() const {
    if (alpha.rows() < 1 || alpha.cols() < 1)
        throw ValidationError("ClusterParams: alpha must be a nonempty C x q matrix");
    if (!alpha.allFinite()) throw NumericError("ClusterParams: non-finite coefficient");
}

CovParams CovParams::zero_effects(int q, double sigma2) {
    CovParams cov;
    cov.gamma = Eigen::MatrixXd::Zero(q, q);
    cov.sigma2 = sigma2;
    return cov;
}

void CovParams::validate() const {
    if (gamma.rows() != gamma.cols() || gamma.rows() < 1)
        throw ValidationError("CovParams: Gamma must be square");
    if (!gamma.allFinite()) throw NumericError("CovParams: non-finite Gamma entry");
    const double scale = std::max(1.0, gamma.cwiseAbs().maxCoeff());
    if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ValidationError("CovParams: Gamma must be symmetric");
    if (!std::isfinite(sigma2) || sigma2 < sigma2_min)
        throw ValidationError("CovParams: sigma2 must be at least 1e-8");
}

void ModelParams::validate() const {
    clusters.validate();
    cov.validate();
    mrf.validate();
    basis.validate();
    if (clusters.q() != basis.q || cov.gamma.rows() != basis.q)
        throw ValidationError("ModelParams: dimension mismatch between basis and parameters");
    if (mrf.n_clusters != clusters.n_clusters())
        throw ValidationError("ModelParams: cluster count mismatch");
    if (transform.T.rows() != basis.q || transform.T.cols() != basis.q ||
        transform.T_inv.rows() != basis.q || transform.T_inv.cols() != basis.q)
        throw ValidationError("ModelParams: transform must be q x q");
}

double marginal_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                       const Eigen::VectorXd& alpha, const CovParams& cov) {
    cov.validate();
    const Eigen::Index n = y.size();
    const Eigen::Index q = S.cols();
    if (S.rows() != n) throw ValidationError("marginal_loglik: S rows do not match curve length");
    if (alpha.size() != q || cov.gamma.rows() != q)
        throw ValidationError("marginal_loglik: coefficient dimension mismatch");

    const Eigen::MatrixXd G = detail::sym_sqrt(cov.gamma, "Gamma");
    const Eigen::MatrixXd U = S * G;
    Eigen::MatrixXd K = cov.sigma2 * Eigen::MatrixXd::Identity(q, q);
    K.noalias() += U.transpose() * U;
    Eigen::LLT<Eigen::MatrixXd> llt(detail::symmetrize(K));
    if (llt.info() != Eigen::Success)
        throw ConditioningError("marginal_loglik: covariance system not positive definite");
    const double logdet_K = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    const Eigen::VectorXd r = y - S * alpha;
    const Eigen::VectorXd w = U.transpose() * r;
    const double quad =
        std::max(0.0, (r.squaredNorm() - w.dot(llt.solve(w))) / cov.sigma2);
    return -0.5 * (static_cast<double>(n) * kLog2Pi +
                   static_cast<double>(n - q) * std::log(cov.sigma2) + logdet_K + quad);
}

Eigen::MatrixXd density_matrix(const Dataset& data, const CurveBases& bases,
                               const ClusterParams& clusters, const CovParams& cov) {
    clusters.validate();
    cov.validate();
    check_model_dims(bases, cov, clusters.q(), "density_matrix");
    const std::size_t n = bases.n_curves();
    if (data.curves.size() != n)
        throw ValidationError("density_matrix: dataset does not match basis caches");

    const int C = clusters.n_clusters();
    const int q = bases.q();
    const CovCache cache = build_cov_cache(bases, cov, false);

    // Per (group, cluster) pieces of the residual expansion.
    const std::size_t n_groups = bases.n_groups();
    std::vector<Eigen::MatrixXd> A_alpha(n_groups);    // q x C, col k = A_g alpha_k
    std::vector<Eigen::MatrixXd> GA_alpha(n_groups);   // q x C, col k = G A_g alpha_k
    std::vector<Eigen::VectorXd> alpha_A_alpha(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        A_alpha[g].noalias() = *cache.groups[g].A * clusters.alpha.transpose();
        GA_alpha[g].noalias() = cache.G * A_alpha[g];
        alpha_A_alpha[g].resize(C);
        for (int k = 0; k < C; ++k)
            alpha_A_alpha[g][k] = clusters.alpha.row(k).dot(A_alpha[g].col(k));
    }

    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), C);
    Eigen::VectorXd Gp(q);
    Eigen::VectorXd w(q);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t g = bases.group_of(i);
        const GroupCache& gc = cache.groups[g];
        const double n_i = static_cast<double>(bases.curve_length(i));
        const double base =
            n_i * kLog2Pi + (n_i - q) * std::log(cov.sigma2) + gc.logdet_K;
        const Eigen::VectorXd p = bases.projected(i);
        Gp.noalias() = cache.G * p;
        const double yty = bases.y_squared_norm(i);
        for (int k = 0; k < C; ++k) {
            const double rtr = std::max(
                0.0, yty - 2.0 * clusters.alpha.row(k).dot(p) + alpha_A_alpha[g][k]);
            w = Gp - GA_alpha[g].col(k);
            const double quad =
                std::max(0.0, (rtr - w.dot(gc.K_llt.solve(w))) / cov.sigma2);
            out(static_cast<Eigen::Index>(i), k) = -0.5 * (base + quad);
        }
        if (!out.row(static_cast<Eigen::Index>(i)).allFinite())
            throw NumericError("density_matrix: non-finite log density for site " +
                               data.curves[i].site_id);
    }
    return out;
}

RandomEffectPosterior random_effect_posterior(const Eigen::VectorXd& y, const Eigen::MatrixXd& S,
                                              const Eigen::VectorXd& alpha,
                                              const CovParams& cov) {
    cov.validate();
    const Eigen::Index q = S.cols();
    if (S.rows() != y.size())
        throw ValidationError("random_effect_posterior: S rows do not match curve length");
    if (alpha.size() != q || cov.gamma.rows() != q)
        throw ValidationError("random_effect_posterior: coefficient dimension mismatch");

    const Eigen::MatrixXd G = detail::sym_sqrt(cov.gamma, "Gamma");
    const Eigen::MatrixXd A = detail::symmetrize(Eigen::MatrixXd(S.transpose() * S));
    Eigen::MatrixXd K = cov.sigma2 * Eigen::MatrixXd::Identity(q, q);
    K.noalias() += G * A * G;
    Eigen::LLT<Eigen::MatrixXd> llt(detail::symmetrize(K));
    if (llt.info() != Eigen::Success)
        throw ConditioningError("random_effect_posterior: covariance system not positive definite");

    const Eigen::MatrixXd AG = A * G;
    const Eigen::VectorXd p = S.transpose() * (y - S * alpha);
    RandomEffectPosterior post;
    post.mean = cov.gamma * (p - AG * llt.solve(G * p)) / cov.sigma2;
    const Eigen::MatrixXd M =
        detail::symmetrize(Eigen::MatrixXd(A - AG * llt.solve(AG.transpose()))) / cov.sigma2;
    post.cov = detail::psd_project(
        detail::symmetrize(Eigen::MatrixXd(cov.gamma - cov.gamma * M * cov.gamma)));
    return post;
}

MStepResult m_step(const Dataset& data, const CurveBases& bases, const LabelField& labels,
                   int n_clusters, const CovParams& cov) {
    cov.validate();
    check_model_dims(bases, cov, static_cast<int>(cov.gamma.rows()), "m_step");
    const std::size_t n = bases.n_curves();
    if (data.curves.size() != n)
        throw ValidationError("m_step: dataset does not match basis caches");
    validate_labels(labels, n_clusters, n);

    const int q = bases.q();
    const CovCache cache = build_cov_cache(bases, cov, true);

    // GLS cluster means: sum_i M_g(i) alpha_k = sum_i S_i^T Sigma_i^{-1} y_i
    // over i with Z_i = k, accumulated in ascending site order.
    std::vector<Eigen::MatrixXd> lhs(n_clusters, Eigen::MatrixXd::Zero(q, q));
    std::vector<Eigen::VectorXd> rhs(n_clusters, Eigen::VectorXd::Zero(q));
    std::vector<int> counts(n_clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = labels[i];
        const GroupCache& gc = cache.groups[bases.group_of(i)];
        const Eigen::VectorXd p = bases.projected(i);
        lhs[k] += gc.M;
        rhs[k] += (p - gc.AG * gc.K_llt.solve(cache.G * p)) / cov.sigma2;
        ++counts[k];
    }
    std::vector<int> empty;
    for (int k = 0; k < n_clusters; ++k)
        if (counts[k] == 0) empty.push_back(k);
    if (!empty.empty()) {
        std::string msg = "m_step: empty cluster(s):";
        for (int k : empty) msg += " " + std::to_string(k + 1);
        throw EmptyClusterError(msg, empty);
    }

    ClusterParams clusters;
    clusters.alpha.resize(n_clusters, q);
    for (int k = 0; k < n_clusters; ++k) {
        Eigen::LLT<Eigen::MatrixXd> llt(detail::symmetrize(lhs[k]));
        if (llt.info() != Eigen::Success)
            throw ConditioningError("m_step: singular coefficient system for cluster " +
                                    std::to_string(k + 1));
        clusters.alpha.row(k) = llt.solve(rhs[k]).transpose();
    }

    // Random-effect posteriors at the new means drive the covariance updates.
    const std::size_t n_groups = bases.n_groups();
    std::vector<Eigen::MatrixXd> V(n_groups);
    std::vector<double> trace_AV(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        const GroupCache& gc = cache.groups[g];
        V[g] = detail::psd_project(detail::symmetrize(
            Eigen::MatrixXd(cov.gamma - cov.gamma * gc.M * cov.gamma)));
        trace_AV[g] = (gc.A->array() * V[g].array()).sum();
    }
    std::vector<Eigen::MatrixXd> A_alpha(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g)
        A_alpha[g].noalias() = *cache.groups[g].A * clusters.alpha.transpose();

    Eigen::MatrixXd gamma_acc = Eigen::MatrixXd::Zero(q, q);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = labels[i];
        const std::size_t g = bases.group_of(i);
        const GroupCache& gc = cache.groups[g];
        const Eigen::VectorXd p = bases.projected(i);
        const Eigen::VectorXd d = p - A_alpha[g].col(k);
        const Eigen::VectorXd mean = cov.gamma * (d - gc.AG * gc.K_llt.solve(cache.G * d)) /
                                     cov.sigma2;
        gamma_acc.noalias() += mean * mean.transpose();
        gamma_acc += V[g];
        const Eigen::VectorXd c = clusters.alpha.row(k).transpose() + mean;
        const double fit = std::max(
            0.0, bases.y_squared_norm(i) - 2.0 * c.dot(p) + c.dot(*gc.A * c));
        rss += fit + trace_AV[g];
    }

    MStepResult out;
    out.clusters = std::move(clusters);
    out.cov.gamma = detail::psd_project(detail::symmetrize(
        Eigen::MatrixXd(gamma_acc / static_cast<double>(n))));
    out.cov.sigma2 =
        std::max(CovParams::sigma2_min, rss / static_cast<double>(bases.total_observations()));
    return out;
}

double observed_loglik(const Dataset& data, const CurveBases& bases,
                       const ClusterParams& clusters, const CovParams& cov,
                       const LabelField& labels) {
    validate_labels(labels, clusters.n_clusters(), bases.n_curves());
    const Eigen::MatrixXd dens = density_matrix(data, bases, clusters, cov);
    double total = 0.0;
    for (std::size_t i = 0; i < bases.n_curves(); ++i)
        total += dens(static_cast<Eigen::Index>(i), labels[i]);
    return total;
}

}  // namespace sfclust
