#include "sfclust/fit.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "internal_linalg.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/mrf.hpp"
#include "sfclust/rng.hpp"

namespace sfclust {

void FitConfig::validate() const {
    if (n_clusters.empty()) throw ConfigError("fit: no cluster-count candidates");
    for (int c : n_clusters)
        if (c < 1) throw ConfigError("fit: cluster count must be at least 1");
    if (max_iter < 1) throw ConfigError("fit: max_iter must be positive");
    if (icm_sweeps_per_iter < 1) throw ConfigError("fit: icm_sweeps_per_iter must be positive");
    if (!(tol > 0.0)) throw ConfigError("fit: tol must be positive");
    if (restarts < 1) throw ConfigError("fit: restarts must be positive");
    basis.validate();
    if (lattice_points < basis.q) throw ConfigError("fit: lattice_points must be at least q");
    if (!(std::isfinite(theta_lo) && std::isfinite(theta_hi) && theta_lo < theta_hi))
        throw ConfigError("fit: theta bounds must satisfy lo < hi");
    if (!std::isfinite(theta_init) || theta_init < 0.0)
        throw ConfigError("fit: theta_init must be finite and nonnegative");
}

Eigen::MatrixXd ols_coefficients(const CurveBases& bases) {
    const int q = bases.q();
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(bases.n_groups());
    for (std::size_t g = 0; g < bases.n_groups(); ++g) {
        llts[g].compute(bases.group_gram(g));
        if (llts[g].info() != Eigen::Success)
            throw ConditioningError("ols_coefficients: rank-deficient basis on a shared time grid");
    }
    Eigen::MatrixXd beta(static_cast<Eigen::Index>(bases.n_curves()), q);
    for (std::size_t i = 0; i < bases.n_curves(); ++i)
        beta.row(static_cast<Eigen::Index>(i)) =
            llts[bases.group_of(i)].solve(bases.projected(i)).transpose();
    return beta;
}

namespace {

LabelField kmeans_labels(const Eigen::MatrixXd& X, int C, Rng& rng) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd centers(C, X.cols());
    centers.row(0) = X.row(rng.uniform_int(static_cast<int>(n)));
    Eigen::VectorXd d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < C; ++k) {
        const double total = d2.sum();
        Eigen::Index pick;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double cum = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(static_cast<int>(n));
        }
        centers.row(k) = X.row(pick);
        d2 = d2.cwiseMin((X.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }

    LabelField labels(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd dist(n);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = (X.row(i) - centers.row(0)).squaredNorm();
            for (int k = 1; k < C; ++k) {
                const double dd = (X.row(i) - centers.row(k)).squaredNorm();
                if (dd < bd) {
                    bd = dd;
                    best = k;
                }
            }
            dist[i] = bd;
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        std::vector<int> counts(C, 0);
        for (int l : labels) ++counts[l];
        for (int k = 0; k < C; ++k) {
            if (counts[k] > 0) continue;
            Eigen::Index pick = -1;
            double far = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (counts[labels[static_cast<std::size_t>(i)]] < 2) continue;
                if (dist[i] > far) {
                    far = dist[i];
                    pick = i;
                }
            }
            if (pick < 0) throw NumericError("initialize_labels: cannot fill empty cluster");
            --counts[labels[static_cast<std::size_t>(pick)]];
            labels[static_cast<std::size_t>(pick)] = k;
            ++counts[k];
            dist[pick] = 0.0;
            changed = true;
        }
        if (!changed) break;
        centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            centers.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
        for (int k = 0; k < C; ++k) centers.row(k) /= static_cast<double>(counts[k]);
    }
    return labels;
}

void reseed_empty_clusters(LabelField& labels, const Eigen::MatrixXd& dens, int C) {
    std::vector<int> counts(C, 0);
    for (int l : labels) ++counts[l];
    for (int k = 0; k < C; ++k) {
        if (counts[k] > 0) continue;
        int pick = -1;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (counts[labels[i]] < 2) continue;
            const double d = dens(static_cast<Eigen::Index>(i), labels[i]);
            if (d < worst) {
                worst = d;
                pick = static_cast<int>(i);
            }
        }
        if (pick < 0) throw NumericError("fit: cannot re-seed empty cluster " + std::to_string(k + 1));
        --counts[labels[static_cast<std::size_t>(pick)]];
        labels[static_cast<std::size_t>(pick)] = k;
        ++counts[k];
    }
}

std::vector<int> canonical_permutation(const LabelField& labels, int C) {
    std::vector<int> counts(C, 0);
    std::vector<int> first(C, std::numeric_limits<int>::max());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (counts[labels[i]] == 0) first[labels[i]] = static_cast<int>(i);
        ++counts[labels[i]];
    }
    std::vector<int> order(static_cast<std::size_t>(C));
    for (int k = 0; k < C; ++k) order[static_cast<std::size_t>(k)] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return first[a] < first[b];
    });
    std::vector<int> perm(static_cast<std::size_t>(C));
    for (int rank = 0; rank < C; ++rank) perm[static_cast<std::size_t>(order[rank])] = rank;
    return perm;
}

Eigen::MatrixXd posterior_matrix(const Eigen::MatrixXd& dens, const LabelField& labels,
                                 const NeighborGraph& graph, double theta, int C) {
    Eigen::MatrixXd post(dens.rows(), C);
    Eigen::VectorXd u(C);
    for (int i = 0; i < graph.n; ++i) {
        u = dens.row(i).transpose();
        for (const auto& e : graph.adj[static_cast<std::size_t>(i)])
            u[labels[static_cast<std::size_t>(e.to)]] += theta * e.weight;
        u.array() -= u.maxCoeff();
        u = u.array().exp();
        post.row(i) = (u / u.sum()).transpose();
    }
    return post;
}

struct RestartOutcome {
    LabelField labels;
    ClusterParams clusters;
    CovParams cov;
    double theta = 0.0;
    Eigen::MatrixXd cumulative;
    Eigen::MatrixXd cumulative_inv;
    Eigen::MatrixXd dens;
    std::vector<double> trace;
    double objective = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

RestartOutcome fit_restart(const Dataset& data, CurveBases bases, const NeighborGraph& graph,
                           const FitConfig& config, int C, std::uint64_t seed) {
    const int q = bases.q();
    const std::size_t n = bases.n_curves();

    const Eigen::MatrixXd beta = ols_coefficients(bases);
    Rng rng(seed);
    LabelField labels = (C == 1) ? LabelField(n, 0) : kmeans_labels(beta, C, rng);

    // Moment initializer: cluster means of the OLS coefficients, their
    // within-cluster scatter for Gamma, the mean OLS residual for sigma2.
    ClusterParams clusters;
    clusters.alpha = Eigen::MatrixXd::Zero(C, q);
    std::vector<int> counts(C, 0);
    for (std::size_t i = 0; i < n; ++i) {
        clusters.alpha.row(labels[i]) += beta.row(static_cast<Eigen::Index>(i));
        ++counts[labels[i]];
    }
    for (int k = 0; k < C; ++k) clusters.alpha.row(k) /= static_cast<double>(std::max(1, counts[k]));
    CovParams cov;
    if (config.estimate_gamma) {
        Eigen::MatrixXd gacc = Eigen::MatrixXd::Zero(q, q);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd d =
                (beta.row(static_cast<Eigen::Index>(i)) - clusters.alpha.row(labels[i])).transpose();
            gacc.noalias() += d * d.transpose();
        }
        cov.gamma = detail::psd_project(gacc / static_cast<double>(n));
    } else {
        cov.gamma = Eigen::MatrixXd::Zero(q, q);
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        rss += std::max(0.0, bases.y_squared_norm(i) -
                                 beta.row(static_cast<Eigen::Index>(i)).dot(bases.projected(i)));
    cov.sigma2 = std::max(CovParams::sigma2_min, rss / static_cast<double>(bases.total_observations()));

    double theta = config.theta_init;
    double log_pl = 0.0;

    RestartOutcome out;
    out.cumulative_inv = Eigen::MatrixXd::Identity(q, q);

    Eigen::MatrixXd dens;
    double prev_J = std::numeric_limits<double>::quiet_NaN();
    int t = 1;
    for (; t <= config.max_iter; ++t) {
        const OrthoTransform tr = orthogonalize(bases.lattice_matrix(), cov.gamma, cov.sigma2);
        bases.apply_transform(tr);
        clusters.alpha = clusters.alpha * tr.T_inv.transpose();
        cov.gamma = detail::symmetrize(tr.T_inv * cov.gamma * tr.T_inv.transpose());
        out.cumulative_inv = tr.T_inv * out.cumulative_inv;

        dens = density_matrix(data, bases, clusters, cov);

        MrfParams mrf;
        mrf.theta = theta;
        mrf.n_clusters = C;
        for (int s = 0; s < config.icm_sweeps_per_iter; ++s)
            if (icm_sweep(labels, dens, graph, mrf) == 0) break;
        reseed_empty_clusters(labels, dens, C);

        MStepResult ms = m_step(data, bases, labels, C, cov);
        clusters = std::move(ms.clusters);
        cov = ms.cov;
        if (!config.estimate_gamma) cov.gamma.setZero();

        if (config.estimate_theta && C > 1) {
            const ThetaFit tf = fit_theta(labels, graph, C, config.theta_lo, config.theta_hi);
            theta = tf.theta;
            log_pl = tf.log_pl;
        } else {
            log_pl = log_pseudo_likelihood(labels, graph, theta, C);
        }

        dens = density_matrix(data, bases, clusters, cov);
        double loglik = 0.0;
        for (std::size_t i = 0; i < n; ++i) loglik += dens(static_cast<Eigen::Index>(i), labels[i]);
        const double J = loglik + log_pl;
        if (!std::isfinite(J))
            throw NumericError("fit: non-finite objective at iteration " + std::to_string(t));
        out.trace.push_back(J);
        if (t > 1 && std::abs(J - prev_J) < config.tol * std::max(1.0, std::abs(prev_J))) {
            prev_J = J;
            out.converged = true;
            break;
        }
        prev_J = J;
    }
    out.iterations = std::min(t, config.max_iter);
    out.labels = std::move(labels);
    out.clusters = std::move(clusters);
    out.cov = std::move(cov);
    out.theta = theta;
    out.cumulative = bases.cumulative_transform();
    out.dens = std::move(dens);
    out.objective = out.trace.back();
    return out;
}

FitResult assemble_result(RestartOutcome best, const NeighborGraph& graph,
                          const FitConfig& config, int C) {
    const int q = config.basis.q;
    const Eigen::Index n = best.dens.rows();
    const std::vector<int> perm = canonical_permutation(best.labels, C);

    FitResult res;
    res.n_clusters = C;
    res.labels.resize(best.labels.size());
    for (std::size_t i = 0; i < best.labels.size(); ++i) res.labels[i] = perm[best.labels[i]];

    res.params.clusters.alpha.resize(C, q);
    Eigen::MatrixXd dens(n, C);
    for (int k = 0; k < C; ++k) {
        res.params.clusters.alpha.row(perm[k]) = best.clusters.alpha.row(k);
        dens.col(perm[k]) = best.dens.col(k);
    }
    res.params.cov = std::move(best.cov);
    res.params.mrf.theta = best.theta;
    res.params.mrf.n_clusters = C;
    res.params.basis = config.basis;
    res.params.transform.T = std::move(best.cumulative);
    res.params.transform.T_inv = std::move(best.cumulative_inv);

    res.objective_trace = std::move(best.trace);
    res.objective = best.objective;
    res.converged = best.converged;
    res.iterations = best.iterations;
    res.conditional_posteriors = posterior_matrix(dens, res.labels, graph, best.theta, C);
    const double p = static_cast<double>(C) * q + q * (q + 1) / 2.0 + 2.0;
    res.pseudo_bic = -2.0 * res.objective + p * std::log(static_cast<double>(n));
    return res;
}

}  // namespace

LabelField initialize_labels(const Dataset& data, const CurveBases& bases, int n_clusters,
                             std::uint64_t seed) {
    if (n_clusters < 1) throw ConfigError("initialize_labels: cluster count must be at least 1");
    const std::size_t n = bases.n_curves();
    if (data.curves.size() != n)
        throw ValidationError("initialize_labels: dataset does not match basis caches");
    if (static_cast<std::size_t>(n_clusters) > n)
        throw ConfigError("initialize_labels: more clusters than curves");
    if (n_clusters == 1) return LabelField(n, 0);
    const Eigen::MatrixXd beta = ols_coefficients(bases);
    Rng rng(seed);
    return kmeans_labels(beta, n_clusters, rng);
}

FitResult fit(const Dataset& data, const NeighborGraph& graph, const FitConfig& config) {
    config.validate();
    data.validate();
    if (static_cast<std::size_t>(graph.n) != data.size())
        throw ValidationError("fit: graph and dataset sizes differ");
    const int C = config.n_clusters.front();
    if (data.size() < static_cast<std::size_t>(C))
        throw ConfigError("fit: fewer curves than clusters");

    const CurveBases bases = CurveBases::build(data, config.basis, config.lattice_points);

    RestartOutcome best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
        RestartOutcome run = fit_restart(data, bases, graph, config, C, derive_seed(config.seed, r));
        if (!have || run.objective > best.objective) {
            best = std::move(run);
            have = true;
        }
    }
    return assemble_result(std::move(best), graph, config, C);
}

SelectionResult select_C(const Dataset& data, const NeighborGraph& graph,
                         const FitConfig& config) {
    config.validate();
    SelectionResult sel;
    bool have = false;
    double best_bic = 0.0;
    for (int C : config.n_clusters) {
        FitConfig one = config;
        one.n_clusters = {C};
        try {
            FitResult r = fit(data, graph, one);
            const double bic = r.pseudo_bic;
            sel.fits.push_back(std::move(r));
            if (!have || bic < best_bic || (bic == best_bic && C < sel.best_n_clusters)) {
                best_bic = bic;
                sel.best_n_clusters = C;
                have = true;
            }
        } catch (const Error& e) {
            sel.failures.push_back("C=" + std::to_string(C) + ": " + e.what());
        }
    }
    if (!have)
        throw Error("select_C: every candidate failed; first failure: " +
                    (sel.failures.empty() ? std::string("none attempted") : sel.failures.front()));
    return sel;
}

Eigen::MatrixXd conditional_posteriors(const Dataset& data, const NeighborGraph& graph,
                                       const FitResult& result) {
    data.validate();
    if (static_cast<std::size_t>(graph.n) != data.size())
        throw ValidationError("conditional_posteriors: graph and dataset sizes differ");
    result.params.validate();
    const int C = result.params.mrf.n_clusters;
    validate_labels(result.labels, C, data.size());

    CurveBases bases = CurveBases::build(data, result.params.basis,
                                         std::max(365, result.params.basis.q));
    bases.apply_transform(result.params.transform);
    const Eigen::MatrixXd dens =
        density_matrix(data, bases, result.params.clusters, result.params.cov);
    return posterior_matrix(dens, result.labels, graph, result.params.mrf.theta, C);
}

}  // namespace sfclust
