#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <set>
#include <vector>

#include "sfclust/basis.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/graph.hpp"
#include "sfclust/simulate.hpp"
#include "sfclust/types.hpp"
#include "testutil.hpp"

using namespace sfclust;

namespace {

SimSpec grid_spec(int rows, int cols, int n_clusters, double theta, std::uint64_t seed) {
    SimSpec spec;
    spec.geometry = testutil::grid_sites(rows, cols, 0.1);
    spec.n_sites = rows * cols;
    spec.n_clusters = n_clusters;
    spec.theta = theta;
    spec.knn = 4;
    spec.seed = seed;
    return spec;
}

double discordance(const LabelField& labels, const NeighborGraph& g) {
    std::size_t bad = 0;
    g.for_each_edge([&](int i, int j, double) {
        if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) ++bad;
    });
    return static_cast<double>(bad) / static_cast<double>(g.edge_count());
}

}  // namespace

TEST_CASE("generative settings are checked up front") {
    SimSpec base;
    base.validate();

    SimSpec spec = base;
    spec.n_sites = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.burn_in = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.timepoints = spec.basis.q - 1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.sigma2 = -0.1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.sigma2 = 0.0;
    spec.validate();
    spec = base;
    spec.n_sites = 5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.elevation_cutoff_m = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.lat_min = 5.0;
    spec.lat_max = 5.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.theta = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = base;
    spec.geometry = testutil::grid_sites(3, 3, 0.1);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.n_sites = 9;
    spec.validate();
    spec = base;
    spec.alpha = Eigen::MatrixXd::Zero(2, spec.basis.q);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.alpha = Eigen::MatrixXd::Zero(spec.n_clusters, spec.basis.q);
    spec.validate();
    spec = base;
    spec.gamma = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("random site placement is deterministic, bounded and sorted") {
    SimSpec spec;
    spec.n_sites = 50;
    spec.lat_min = -5.0;
    spec.lat_max = 5.0;
    spec.lon_min = 100.0;
    spec.lon_max = 120.0;
    spec.elev_min = 200.0;
    spec.elev_max = 900.0;
    spec.seed = 7;
    const std::vector<SiteGeometry> sites = spec.resolved_geometry();
    REQUIRE(sites.size() == 50);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const SiteGeometry& g = sites[i];
        CHECK(g.latitude_deg >= -5.0);
        CHECK(g.latitude_deg <= 5.0);
        CHECK(g.longitude_deg >= 100.0);
        CHECK(g.longitude_deg <= 120.0);
        CHECK(g.elevation_m >= 200.0);
        CHECK(g.elevation_m <= 900.0);
        ids.insert(g.site_id);
        if (i > 0) CHECK(sites[i - 1].site_id < g.site_id);
    }
    CHECK(ids.size() == 50);
    CHECK(sites.front().site_id == "S0001");
    CHECK(sites.back().site_id == "S0050");

    const std::vector<SiteGeometry> again = spec.resolved_geometry();
    for (std::size_t i = 0; i < sites.size(); ++i) {
        CHECK(again[i].latitude_deg == sites[i].latitude_deg);
        CHECK(again[i].elevation_m == sites[i].elevation_m);
    }
    SimSpec other = spec;
    other.seed = 8;
    CHECK(other.resolved_geometry()[0].latitude_deg != sites[0].latitude_deg);

    SimSpec supplied = spec;
    supplied.geometry = testutil::grid_sites(5, 10, 0.2);
    CHECK(supplied.resolved_geometry()[3].site_id == supplied.geometry[3].site_id);
}

TEST_CASE("the simulated graph honors the elevation rule") {
    SimSpec spec;
    spec.n_sites = 80;
    spec.elev_min = 0.0;
    spec.elev_max = 3000.0;
    spec.elevation_cutoff_m = 1000.0;
    spec.seed = 11;
    const std::vector<SiteGeometry> sites = spec.resolved_geometry();
    const NeighborGraph g = spec.build_graph();
    g.validate();
    CHECK(g.n == 80);
    CHECK(g.edge_count() > 0);
    g.for_each_edge([&](int i, int j, double w) {
        CHECK(std::abs(sites[static_cast<std::size_t>(i)].elevation_m -
                       sites[static_cast<std::size_t>(j)].elevation_m) <= 1000.0);
        CHECK(w == 1.0);
    });
}

TEST_CASE("default regime means are distinct, smooth and positive") {
    const BasisSpec basis = BasisSpec::bspline(12);
    const Eigen::MatrixXd alpha = default_cluster_means(basis, 3);
    REQUIRE(alpha.rows() == 3);
    REQUIRE(alpha.cols() == 12);
    const Eigen::MatrixXd lattice = build_lattice_basis(basis).values;
    const Eigen::MatrixXd curves = lattice * alpha.transpose();
    CHECK(curves.minCoeff() > 0.0);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            CHECK((curves.col(a) - curves.col(b)).norm() / std::sqrt(365.0) > 1.0);
}

TEST_CASE("uncoupled label draws are uniform across regimes") {
    SimSpec spec = grid_spec(30, 30, 3, 0.0, 13);
    spec.burn_in = 5;
    const LabelField labels = sample_labels(spec);
    REQUIRE(labels.size() == 900);
    std::vector<int> counts(3, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    // Chi-square against uniform, dof 2, upper 0.1% point 13.82.
    double chi2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double d = counts[static_cast<std::size_t>(k)] - 300.0;
        chi2 += d * d / 300.0;
    }
    CHECK(chi2 < 13.82);
}

TEST_CASE("coupling smooths the sampled field") {
    SimSpec spec = grid_spec(30, 30, 3, 2.0, 17);
    spec.burn_in = 60;
    GibbsDiagnostic diag;
    const LabelField labels = sample_labels(spec, &diag);
    const double d = discordance(labels, spec.build_graph());
    CHECK(d == doctest::Approx(diag.discordant_fraction).epsilon(1e-12));
    CHECK(d < 0.45);
    CHECK(diag.reference_fraction >= 0.0);
    CHECK(diag.reference_fraction <= 1.0);

    SimSpec free = grid_spec(30, 30, 3, 0.0, 17);
    free.burn_in = 60;
    const double d0 = discordance(sample_labels(free), free.build_graph());
    CHECK(d < d0 - 0.1);
}

TEST_CASE("one seed, one draw") {
    SimSpec spec = grid_spec(8, 8, 2, 0.5, 23);
    spec.basis = BasisSpec::bspline(5);
    spec.timepoints = 30;
    spec.burn_in = 10;
    const LabelField labels_a = sample_labels(spec);
    const LabelField labels_b = sample_labels(spec);
    CHECK(labels_a == labels_b);
    const Dataset data_a = sample_curves(labels_a, spec);
    const Dataset data_b = sample_curves(labels_a, spec);
    for (std::size_t i = 0; i < data_a.size(); ++i)
        CHECK((data_a.curves[i].values - data_b.curves[i].values).cwiseAbs().maxCoeff() == 0.0);

    SimSpec other = spec;
    other.seed = 24;
    const LabelField labels_c = sample_labels(other);
    const Dataset data_c = sample_curves(labels_a, other);
    const bool labels_differ = labels_c != labels_a;
    const bool curves_differ =
        (data_c.curves[0].values - data_a.curves[0].values).cwiseAbs().maxCoeff() != 0.0;
    CHECK(labels_differ);
    CHECK(curves_differ);
}

TEST_CASE("a noise-free draw reproduces the regime curves exactly") {
    SimSpec spec = grid_spec(4, 4, 2, 0.0, 29);
    spec.basis = BasisSpec::bspline(4);
    spec.timepoints = 12;
    spec.burn_in = 1;
    spec.knn = 3;
    spec.sigma2 = 0.0;
    spec.gamma = Eigen::MatrixXd::Zero(4, 4);
    Eigen::MatrixXd alpha(2, 4);
    alpha << 1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0;
    spec.alpha = alpha;
    const LabelField labels = sample_labels(spec);
    const Dataset data = sample_curves(labels, spec);
    const Eigen::MatrixXd S = evaluate_basis(spec.basis, testutil::midpoint_grid(12));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd expect = S * alpha.row(labels[i]).transpose();
        CHECK((data.curves[i].values - expect).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(data.curves[i].times.size() == 12);
        CHECK(data.curves[i].years_used == 1);
    }
    data.validate();
}

TEST_CASE("sampled curves have the advertised first and second moments") {
    SimSpec spec = grid_spec(40, 50, 3, 0.0, 31);
    spec.basis = BasisSpec::bspline(4);
    spec.timepoints = 20;
    spec.burn_in = 1;
    spec.sigma2 = 0.16;
    spec.gamma = 0.09 * Eigen::MatrixXd::Identity(4, 4);
    const LabelField labels = sample_labels(spec);
    const Dataset data = sample_curves(labels, spec);
    const Eigen::MatrixXd S = evaluate_basis(spec.basis, testutil::midpoint_grid(20));
    const Eigen::MatrixXd alpha = spec.resolved_alpha();

    for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(20);
        Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(20);
        int members = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (labels[i] != k) continue;
            sum += data.curves[i].values;
            sumsq += data.curves[i].values.cwiseProduct(data.curves[i].values);
            ++members;
        }
        REQUIRE(members > 500);
        const Eigen::VectorXd mean = sum / members;
        const Eigen::VectorXd truth = S * alpha.row(k).transpose();
        for (int j = 0; j < 20; ++j) {
            const double var_truth = spec.sigma2 + 0.09 * S.row(j).squaredNorm();
            const double sd = std::sqrt(var_truth);
            CHECK(std::abs(mean[j] - truth[j]) <= 5.0 * sd / std::sqrt(double(members)));
            const double var = sumsq[j] / members - mean[j] * mean[j];
            CHECK(var == doctest::Approx(var_truth).epsilon(0.25));
        }
    }
}

TEST_CASE("the default generative settings yield positive precipitation curves") {
    SimSpec spec;
    spec.n_sites = 60;
    spec.seed = 37;
    const LabelField labels = sample_labels(spec);
    const Dataset data = sample_curves(labels, spec);
    REQUIRE(data.size() == 60);
    double lowest = std::numeric_limits<double>::infinity();
    for (const AnnualCurve& c : data.curves) lowest = std::min(lowest, c.values.minCoeff());
    CHECK(lowest > 0.0);
    CHECK(data.curves.front().times.size() == 365);
}

TEST_CASE("explicit regime parameters pass through unchanged") {
    SimSpec spec;
    spec.basis = BasisSpec::bspline(5);
    spec.n_clusters = 2;
    Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(2, 5, 1.5);
    Eigen::MatrixXd gamma = 0.2 * Eigen::MatrixXd::Identity(5, 5);
    spec.alpha = alpha;
    spec.gamma = gamma;
    CHECK((spec.resolved_alpha() - alpha).cwiseAbs().maxCoeff() == 0.0);
    CHECK((spec.resolved_gamma() - gamma).cwiseAbs().maxCoeff() == 0.0);
    SimSpec defaults;
    defaults.gamma_scale = 0.4;
    defaults.basis = BasisSpec::bspline(3, 3);
    const Eigen::MatrixXd scaled = defaults.resolved_gamma();
    CHECK(scaled.isDiagonal());
    CHECK(scaled(0, 0) == doctest::Approx(0.16).epsilon(1e-15));
    CHECK(scaled(1, 1) == scaled(0, 0));
}

TEST_CASE("label draws must match the requested roster") {
    SimSpec spec = grid_spec(4, 4, 2, 0.5, 41);
    spec.basis = BasisSpec::bspline(4);
    spec.timepoints = 10;
    spec.knn = 3;
    LabelField wrong_size(15, 0);
    CHECK_THROWS_AS(sample_curves(wrong_size, spec), ValidationError);
    LabelField out_of_range(16, 0);
    out_of_range[3] = 2;
    CHECK_THROWS_AS(sample_curves(out_of_range, spec), ValidationError);
}
