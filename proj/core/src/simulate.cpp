#include "sfclust/simulate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include "internal_linalg.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/rng.hpp"

namespace sfclust {

namespace {

// Seed streams, so the geometry, the label field, and the curves can be
// regenerated independently of each other.
constexpr std::uint64_t kGeometryStream = 0;
constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kCurveStream = 2;

std::string site_name(int index, int width) {
    std::ostringstream name;
    name << 'S' << std::setfill('0') << std::setw(width) << index + 1;
    return name.str();
}

double discordant_fraction(const LabelField& labels, const NeighborGraph& graph) {
    if (graph.edge_count() == 0) return 0.0;
    long discordant = 0;
    graph.for_each_edge([&](int i, int j, double) {
        if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)])
            ++discordant;
    });
    return static_cast<double>(discordant) / static_cast<double>(graph.edge_count());
}

}  // namespace

void SimSpec::validate() const {
    if (n_sites < 1) throw ConfigError("sim: n_sites must be positive");
    if (!geometry.empty() && static_cast<int>(geometry.size()) != n_sites)
        throw ConfigError("sim: supplied geometry size does not match n_sites");
    if (geometry.empty()) {
        if (!(lat_min < lat_max) || !(lon_min < lon_max))
            throw ConfigError("sim: rectangle bounds must satisfy min < max");
        if (!(elev_min <= elev_max)) throw ConfigError("sim: elevation bounds out of order");
        if (lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0)
            throw ConfigError("sim: rectangle outside valid coordinates");
    }
    if (knn < 1) throw ConfigError("sim: knn must be positive");
    if (n_sites <= knn) throw ConfigError("sim: n_sites must exceed knn");
    if (!(elevation_cutoff_m > 0.0)) throw ConfigError("sim: elevation cutoff must be positive");
    if (n_clusters < 1) throw ConfigError("sim: n_clusters must be positive");
    if (!std::isfinite(theta) || theta < 0.0) throw ConfigError("sim: theta must be nonnegative");
    basis.validate();
    if (alpha.size() != 0 &&
        (alpha.rows() != n_clusters || alpha.cols() != basis.q))
        throw ConfigError("sim: alpha must be n_clusters x q");
    if (gamma.size() != 0 && (gamma.rows() != basis.q || gamma.cols() != basis.q))
        throw ConfigError("sim: gamma must be q x q");
    if (gamma.size() == 0 && !(gamma_scale >= 0.0 && std::isfinite(gamma_scale)))
        throw ConfigError("sim: gamma_scale must be nonnegative");
    if (!std::isfinite(sigma2) || sigma2 < 0.0) throw ConfigError("sim: sigma2 must be nonnegative");
    if (timepoints < basis.q) throw ConfigError("sim: timepoints must be at least q");
    if (burn_in < 1) throw ConfigError("sim: burn_in must be at least 1");
}

std::vector<SiteGeometry> SimSpec::resolved_geometry() const {
    if (!geometry.empty()) return geometry;
    Rng rng(derive_seed(seed, kGeometryStream));
    int width = 4;
    for (int pow10 = 10000; pow10 <= n_sites; pow10 *= 10) ++width;
    std::vector<SiteGeometry> sites(static_cast<std::size_t>(n_sites));
    for (int i = 0; i < n_sites; ++i) {
        SiteGeometry& g = sites[static_cast<std::size_t>(i)];
        g.site_id = site_name(i, width);
        g.latitude_deg = lat_min + rng.uniform01() * (lat_max - lat_min);
        g.longitude_deg = lon_min + rng.uniform01() * (lon_max - lon_min);
        g.elevation_m = elev_min + rng.uniform01() * (elev_max - elev_min);
    }
    return sites;
}

NeighborGraph SimSpec::build_graph() const {
    const std::vector<SiteGeometry> sites = resolved_geometry();
    NeighborGraph g = knn_graph(sites, knn);
    return apply_elevation_cutoff(std::move(g), sites, elevation_cutoff_m);
}

Eigen::MatrixXd SimSpec::resolved_alpha() const {
    if (alpha.size() != 0) return alpha;
    return default_cluster_means(basis, n_clusters);
}

Eigen::MatrixXd SimSpec::resolved_gamma() const {
    if (gamma.size() != 0) return gamma;
    return gamma_scale * gamma_scale *
           Eigen::MatrixXd::Identity(basis.q, basis.q);
}

Eigen::MatrixXd default_cluster_means(const BasisSpec& basis, int n_clusters) {
    basis.validate();
    if (n_clusters < 1) throw ConfigError("default_cluster_means: n_clusters must be positive");
    const LatticeBasis lattice = build_lattice_basis(basis, std::max(365, basis.q));
    const Eigen::Index L = lattice.values.rows();

    constexpr double kBase = 8.0;
    constexpr double kAmplitude = 8.0;
    constexpr double kWidth = 0.12;

    Eigen::MatrixXd targets(L, n_clusters);
    for (int k = 0; k < n_clusters; ++k) {
        const double center = static_cast<double>(k + 1) / (n_clusters + 1);
        targets.col(k) =
            (kBase + kAmplitude * (-(lattice.points.array() - center).square() /
                                   (2.0 * kWidth * kWidth))
                                      .exp())
                .matrix();
    }

    const Eigen::MatrixXd gram = lattice.values.transpose() * lattice.values;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw ConditioningError("default_cluster_means: degenerate lattice basis");
    return llt.solve(lattice.values.transpose() * targets).transpose();
}

LabelField sample_labels(const SimSpec& spec, GibbsDiagnostic* diag) {
    spec.validate();
    const NeighborGraph graph = spec.build_graph();
    Rng rng(derive_seed(spec.seed, kLabelStream));

    LabelField labels(static_cast<std::size_t>(spec.n_sites));
    for (int i = 0; i < spec.n_sites; ++i)
        labels[static_cast<std::size_t>(i)] = rng.uniform_int(spec.n_clusters);

    MrfParams mrf;
    mrf.theta = spec.theta;
    mrf.n_clusters = spec.n_clusters;

    double reference = discordant_fraction(labels, graph);
    for (int sweep = 1; sweep <= spec.burn_in; ++sweep) {
        gibbs_sweep(labels, graph, mrf, rng, spec.scan_order);
        if (sweep == spec.burn_in - 20) reference = discordant_fraction(labels, graph);
    }
    if (diag != nullptr) {
        diag->discordant_fraction = discordant_fraction(labels, graph);
        diag->reference_fraction = reference;
        diag->stabilized = std::abs(diag->discordant_fraction - reference) <=
                           0.01 * std::max(reference, 0.01);
    }
    return labels;
}

Dataset sample_curves(const LabelField& labels, const SimSpec& spec) {
    spec.validate();
    validate_labels(labels, spec.n_clusters, static_cast<std::size_t>(spec.n_sites));

    const std::vector<SiteGeometry> sites = spec.resolved_geometry();
    Eigen::VectorXd times(spec.timepoints);
    for (int j = 0; j < spec.timepoints; ++j)
        times[j] = (j + 0.5) / static_cast<double>(spec.timepoints);
    const Eigen::MatrixXd S = evaluate_basis(spec.basis, times);
    const Eigen::MatrixXd alpha = spec.resolved_alpha();
    const Eigen::MatrixXd G = detail::sym_sqrt(spec.resolved_gamma(), "sim gamma");
    const double noise_sd = std::sqrt(spec.sigma2);

    Rng rng(derive_seed(spec.seed, kCurveStream));
    Dataset data;
    data.geometry = sites;
    data.curves.resize(sites.size());
    Eigen::VectorXd z(spec.basis.q);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (int j = 0; j < spec.basis.q; ++j) z[j] = rng.normal();
        const Eigen::VectorXd coef = alpha.row(labels[i]).transpose() + G * z;
        AnnualCurve& curve = data.curves[i];
        curve.site_id = sites[i].site_id;
        curve.times = times;
        curve.values = S * coef;
        for (int j = 0; j < spec.timepoints; ++j) curve.values[j] += noise_sd * rng.normal();
        curve.years_used = 1;
    }
    data.validate();
    return data;
}

}  // namespace sfclust
