#include "sfclust/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfclust/errors.hpp"

namespace sfclust {

std::string to_string(ScanOrder order) {
    return order == ScanOrder::systematic ? "systematic" : "random";
}

ScanOrder scan_order_from_string(const std::string& s) {
    if (s == "systematic") return ScanOrder::systematic;
    if (s == "random") return ScanOrder::random;
    throw ConfigError("unknown scan order '" + s + "' (expected systematic or random)");
}

void MrfParams::validate() const {
    if (n_clusters < 1) throw ConfigError("mrf: n_clusters must be >= 1");
    if (!std::isfinite(theta)) throw ConfigError("mrf: theta must be finite");
    if (theta < 0.0 && !allow_negative_theta)
        throw ConfigError("mrf: negative theta requires allow_negative_theta");
}

double local_energy(int site, int label, const LabelField& labels, const NeighborGraph& graph,
                    double theta) {
    double same = 0.0;
    for (const auto& e : graph.adj[static_cast<std::size_t>(site)])
        if (labels[static_cast<std::size_t>(e.to)] == label) same += e.weight;
    return theta * same;
}

namespace {

// Weighted like-label mass for every label at once; one pass over neighbors.
void neighbor_mass(int site, const LabelField& labels, const NeighborGraph& graph,
                   Eigen::VectorXd& mass) {
    mass.setZero();
    for (const auto& e : graph.adj[static_cast<std::size_t>(site)])
        mass[labels[static_cast<std::size_t>(e.to)]] += e.weight;
}

void softmax_in_place(Eigen::VectorXd& energies) {
    energies.array() -= energies.maxCoeff();
    energies = energies.array().exp();
    energies /= energies.sum();
}

int sample_from(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform01();
    double cum = 0.0;
    const int c = static_cast<int>(probs.size());
    for (int k = 0; k < c; ++k) {
        cum += probs[k];
        if (u < cum) return k;
    }
    return c - 1;
}

}  // namespace

Eigen::VectorXd conditional_probs(int site, const LabelField& labels, const NeighborGraph& graph,
                                  const MrfParams& params) {
    Eigen::VectorXd energies(params.n_clusters);
    neighbor_mass(site, labels, graph, energies);
    energies *= params.theta;
    softmax_in_place(energies);
    return energies;
}

void gibbs_sweep(LabelField& labels, const NeighborGraph& graph, const MrfParams& params,
                 Rng& rng, ScanOrder order) {
    params.validate();
    validate_labels(labels, params.n_clusters, static_cast<std::size_t>(graph.n));
    std::vector<int> visit(static_cast<std::size_t>(graph.n));
    std::iota(visit.begin(), visit.end(), 0);
    if (order == ScanOrder::random) rng.shuffle(visit);
    Eigen::VectorXd energies(params.n_clusters);
    for (int site : visit) {
        neighbor_mass(site, labels, graph, energies);
        energies *= params.theta;
        softmax_in_place(energies);
        labels[static_cast<std::size_t>(site)] = sample_from(energies, rng);
    }
}

LabelField gibbs_sweep(const LabelField& labels, const NeighborGraph& graph,
                       const MrfParams& params, std::uint64_t seed) {
    LabelField out = labels;
    Rng rng(seed);
    gibbs_sweep(out, graph, params, rng);
    return out;
}

int icm_sweep(LabelField& labels, const Eigen::MatrixXd& log_densities,
              const NeighborGraph& graph, const MrfParams& params) {
    params.validate();
    const int c = params.n_clusters;
    if (log_densities.rows() != graph.n || log_densities.cols() != c)
        throw ValidationError("icm_sweep: density matrix shape mismatch");
    if (!log_densities.allFinite()) throw NumericError("icm_sweep: non-finite log densities");
    validate_labels(labels, c, static_cast<std::size_t>(graph.n));
    Eigen::VectorXd mass(c);
    int changed = 0;
    for (int i = 0; i < graph.n; ++i) {
        neighbor_mass(i, labels, graph, mass);
        int best = 0;
        double best_score = log_densities(i, 0) + params.theta * mass[0];
        for (int k = 1; k < c; ++k) {
            const double score = log_densities(i, k) + params.theta * mass[k];
            if (score > best_score) {
                best_score = score;
                best = k;
            }
        }
        if (best != labels[static_cast<std::size_t>(i)]) {
            labels[static_cast<std::size_t>(i)] = best;
            ++changed;
        }
    }
    return changed;
}

std::pair<LabelField, int> icm_sweep(const LabelField& labels,
                                     const Eigen::MatrixXd& log_densities,
                                     const NeighborGraph& graph, const MrfParams& params) {
    LabelField out = labels;
    const int changed = icm_sweep(out, log_densities, graph, params);
    return {std::move(out), changed};
}

double icm_objective(const Eigen::MatrixXd& log_densities, const LabelField& labels,
                     const NeighborGraph& graph, double theta) {
    double obj = 0.0;
    for (int i = 0; i < graph.n; ++i) obj += log_densities(i, labels[static_cast<std::size_t>(i)]);
    graph.for_each_edge([&](int i, int j, double w) {
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)])
            obj += theta * w;
    });
    return obj;
}

double log_pseudo_likelihood(const LabelField& labels, const NeighborGraph& graph, double theta,
                             int n_clusters) {
    validate_labels(labels, n_clusters, static_cast<std::size_t>(graph.n));
    Eigen::VectorXd mass(n_clusters);
    double total = 0.0;
    for (int i = 0; i < graph.n; ++i) {
        neighbor_mass(i, labels, graph, mass);
        Eigen::VectorXd energies = theta * mass;
        const double top = energies.maxCoeff();
        const double lse = top + std::log((energies.array() - top).exp().sum());
        total += energies[labels[static_cast<std::size_t>(i)]] - lse;
    }
    return total;
}

ThetaFit fit_theta(const LabelField& labels, const NeighborGraph& graph, int n_clusters,
                   double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw ConfigError("fit_theta: bounds must be finite with lo < hi");
    const auto objective = [&](double theta) {
        return log_pseudo_likelihood(labels, graph, theta, n_clusters);
    };
    constexpr double kTol = 1e-5;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (b - a > kTol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = objective(x1);
        }
    }
    ThetaFit fit;
    fit.theta = 0.5 * (a + b);
    fit.log_pl = objective(fit.theta);
    // Strong coupling flattens the objective to exactly zero over part of the
    // range; a bound that ties the interior candidate wins (lower bound last)
    // so degenerate fields report as boundary hits.
    const double at_hi = objective(hi);
    if (at_hi >= fit.log_pl) {
        fit.theta = hi;
        fit.log_pl = at_hi;
    }
    const double at_lo = objective(lo);
    if (at_lo >= fit.log_pl) {
        fit.theta = lo;
        fit.log_pl = at_lo;
    }
    fit.at_lower_bound = fit.theta - lo <= 10.0 * kTol;
    fit.at_upper_bound = hi - fit.theta <= 10.0 * kTol;
    return fit;
}

}  // namespace sfclust
