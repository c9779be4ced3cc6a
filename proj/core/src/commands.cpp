#include "sfclust/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sfclust/curves.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/fit.hpp"
#include "sfclust/graph.hpp"
#include "sfclust/io.hpp"
#include "sfclust/metrics.hpp"
#include "sfclust/simulate.hpp"

namespace sfclust::commands {
namespace {

std::string num(double v, const char* format = "%.6g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string require_path(const RunConfig& config, const std::string& key, const char* command) {
    const std::string value = config.get_string(key);
    if (value.empty())
        throw ConfigError(std::string(command) + " requires the configuration key " + key);
    return value;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path);
    return in;
}

std::string ensure_out_dir(const RunConfig& config) {
    const std::string dir = config.get_string("out.dir");
    if (dir.empty()) throw ConfigError("out.dir must not be empty");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

std::string join_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

io::Provenance provenance(const RunConfig& config) {
    return io::Provenance{config.hash(), config.get_uint64("seed")};
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 20) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size() - limit) + " more)";
    return out;
}

std::vector<std::string> site_ids_of(const Dataset& data) {
    std::vector<std::string> ids;
    ids.reserve(data.size());
    for (const SiteGeometry& s : data.geometry) ids.push_back(s.site_id);
    return ids;
}

void print_cluster_sizes(std::ostream& out, const LabelField& labels, int n_clusters) {
    std::vector<int> sizes(static_cast<std::size_t>(n_clusters), 0);
    for (int z : labels) ++sizes[static_cast<std::size_t>(z)];
    out << "cluster sizes:";
    for (int k = 0; k < n_clusters; ++k) out << ' ' << k + 1 << ':' << sizes[static_cast<std::size_t>(k)];
    out << '\n';
}

NeighborGraph build_fit_graph(const RunConfig& config, const std::vector<SiteGeometry>& sites) {
    NeighborGraph g = knn_graph(sites, config.get_int("graph.k"));
    const WeightScheme scheme = config.weight_scheme();
    const double param = scheme == WeightScheme::binary_cutoff
                             ? config.get_double("graph.elevation_cutoff_m")
                             : config.get_double("graph.exp_decay_h_m");
    return covariate_weights(std::move(g), sites, scheme, param);
}

}  // namespace

int run_ingest(const RunConfig& config, std::ostream& out) {
    const std::string obs_path = require_path(config, "ingest.obs_csv", "ingest");
    const std::string geom_path = require_path(config, "ingest.geom_csv", "ingest");

    auto obs_in = open_input(obs_path);
    const auto rows =
        read_observations_csv(obs_in, obs_path, config.get_bool("ingest.allow_negative"));
    auto geom_in = open_input(geom_path);
    const auto sites = read_geometry_csv(geom_in, geom_path);

    std::unordered_map<std::string, const SiteGeometry*> geo;
    for (const SiteGeometry& s : sites)
        if (!geo.emplace(s.site_id, &s).second)
            throw ValidationError(geom_path + ": duplicate site_id '" + s.site_id + "'");

    const RecordMap records = ingest_records(rows);
    const MissingStats gaps = missing_stats(records);

    FilterReport report;
    const RecordMap kept =
        filter_complete_sites(records, config.get_int("ingest.min_complete_years"),
                              config.get_int("ingest.max_missing_days_per_year"), &report);

    const int year_start = config.get_int("ingest.year_start");
    const int year_end = config.get_int("ingest.year_end");
    if ((year_start == 0) != (year_end == 0))
        throw ConfigError("ingest.year_start and ingest.year_end must be set together");
    if (year_start > year_end) throw ConfigError("ingest.year_start exceeds ingest.year_end");

    std::vector<AnnualCurve> curves;
    std::vector<SiteGeometry> geometry;
    std::vector<std::string> no_geometry;
    for (const auto& [id, record] : kept) {
        const auto it = geo.find(id);
        if (it == geo.end()) {
            no_geometry.push_back(id);
            continue;
        }
        const int ys = year_start > 0 ? year_start : record.first_year();
        const int ye = year_end > 0 ? year_end : record.last_year();
        curves.push_back(aggregate_mean_daily(record, ys, ye));
        geometry.push_back(*it->second);
    }

    const std::string dir = ensure_out_dir(config);
    const io::Provenance prov = provenance(config);
    const std::string curves_out = join_path(dir, "curves.csv");
    const std::string geom_out = join_path(dir, "geometry.csv");
    io::write_curves_csv(curves_out, curves, prov);
    io::write_geometry_csv(geom_out, geometry, prov);

    out << "observation rows: " << rows.size() << ", sites: " << report.n_input << '\n';
    out << "missing days: " << gaps.missing_days << " of " << gaps.expected_days << " ("
        << num(100.0 * gaps.fraction(), "%.2f") << "%)\n";
    out << "complete sites kept: " << report.n_retained << ", dropped: " << report.dropped.size()
        << '\n';
    if (!report.dropped.empty()) out << "  below threshold: " << join_ids(report.dropped) << '\n';
    if (!no_geometry.empty())
        out << "  without geometry: " << join_ids(no_geometry) << '\n';
    if (year_start > 0)
        out << "aggregation years: " << year_start << ".." << year_end << '\n';
    else
        out << "aggregation years: per-site full span\n";
    if (curves.empty())
        out << "no site met the completeness requirement; outputs contain headers only\n";
    out << "wrote " << curves_out << " (" << curves.size() << " sites)\n";
    out << "wrote " << geom_out << '\n';
    return 0;
}

int run_fit(const RunConfig& config, std::ostream& out) {
    const std::string curves_path = require_path(config, "fit.curves_csv", "fit");
    const std::string geom_path = require_path(config, "fit.geom_csv", "fit");

    auto curves = io::read_curves_csv(curves_path);
    auto geom_in = open_input(geom_path);
    const auto sites = read_geometry_csv(geom_in, geom_path);
    if (curves.empty()) throw ValidationError("fit: no curves in " + curves_path);

    std::sort(curves.begin(), curves.end(),
              [](const AnnualCurve& a, const AnnualCurve& b) { return a.site_id < b.site_id; });

    std::unordered_map<std::string, const SiteGeometry*> geo;
    for (const SiteGeometry& s : sites)
        if (!geo.emplace(s.site_id, &s).second)
            throw ValidationError(geom_path + ": duplicate site_id '" + s.site_id + "'");

    Dataset data;
    std::vector<std::string> orphans;
    for (AnnualCurve& c : curves) {
        const auto it = geo.find(c.site_id);
        if (it == geo.end()) {
            orphans.push_back(c.site_id);
            continue;
        }
        data.geometry.push_back(*it->second);
        data.curves.push_back(std::move(c));
    }
    if (!orphans.empty())
        throw ValidationError("fit: curves without geometry: " + join_ids(orphans));
    data.validate();

    const NeighborGraph graph = build_fit_graph(config, data.geometry);
    const FitConfig fc = config.fit_config();

    out << "sites: " << data.size() << ", edges: " << graph.edge_count() << '\n';

    FitResult result;
    if (fc.n_clusters.size() > 1) {
        SelectionResult sel = select_C(data, graph, fc);
        for (const FitResult& f : sel.fits)
            out << "  C=" << f.n_clusters << "  J=" << num(f.objective)
                << "  pseudo-BIC=" << num(f.pseudo_bic)
                << (f.converged ? "" : "  (iteration cap)") << '\n';
        for (const std::string& msg : sel.failures) out << "  failed: " << msg << '\n';
        out << "selected C=" << sel.best_n_clusters << " by pseudo-BIC\n";
        for (FitResult& f : sel.fits)
            if (f.n_clusters == sel.best_n_clusters) result = std::move(f);
    } else {
        result = fit(data, graph, fc);
    }

    const std::string dir = ensure_out_dir(config);
    const io::Provenance prov = provenance(config);
    const std::vector<std::string> ids = site_ids_of(data);
    const std::string assign_out = join_path(dir, "assignments.csv");
    io::write_assignments_csv(assign_out, ids, result.labels, result.conditional_posteriors, prov);
    io::write_geojson(join_path(dir, "clusters.geojson"), data.geometry, result.labels,
                      result.conditional_posteriors, prov);
    io::write_params(join_path(dir, "params.txt"), result.params, prov);
    io::write_trace_csv(join_path(dir, "trace.csv"), result.objective_trace, prov);
    io::write_graph_csv(join_path(dir, "graph.csv"), graph, ids, prov);

    out << "clusters: " << result.n_clusters << ", theta: " << num(result.params.mrf.theta)
        << ", sigma2: " << num(result.params.cov.sigma2) << '\n';
    out << "objective: " << num(result.objective, "%.8g") << " after " << result.iterations
        << " iterations" << (result.converged ? "" : " (iteration cap reached)") << '\n';
    print_cluster_sizes(out, result.labels, result.n_clusters);
    out << "wrote " << assign_out << ", clusters.geojson, params.txt, trace.csv, graph.csv in "
        << dir << '\n';
    if (!result.converged)
        out << "warning: estimation stopped at fit.max_iter without meeting fit.tol\n";
    return result.converged ? 0 : 2;
}

int run_simulate(const RunConfig& config, std::ostream& out) {
    const SimSpec spec = config.sim_spec();
    if (spec.timepoints != 365)
        throw ConfigError("simulate requires sim.timepoints = 365 to export daily observations");

    GibbsDiagnostic diag;
    const LabelField labels = sample_labels(spec, &diag);
    const Dataset data = sample_curves(labels, spec);
    const NeighborGraph graph = spec.build_graph();

    const std::string dir = ensure_out_dir(config);
    const io::Provenance prov = provenance(config);
    const std::vector<std::string> ids = site_ids_of(data);
    const std::string obs_out = join_path(dir, "observations.csv");
    io::write_observations_csv(obs_out, data, 2001, prov);
    io::write_geometry_csv(join_path(dir, "geometry.csv"), data.geometry, prov);
    io::write_labels_csv(join_path(dir, "truth_labels.csv"), ids, labels, prov);

    const bool write_truth = spec.sigma2 >= CovParams::sigma2_min;
    if (write_truth) {
        ModelParams truth;
        truth.clusters.alpha = spec.resolved_alpha();
        truth.cov.gamma = spec.resolved_gamma();
        truth.cov.sigma2 = spec.sigma2;
        truth.mrf.theta = spec.theta;
        truth.mrf.n_clusters = spec.n_clusters;
        truth.basis = spec.basis;
        truth.transform.T = Eigen::MatrixXd::Identity(spec.basis.q, spec.basis.q);
        truth.transform.T_inv = truth.transform.T;
        io::write_params(join_path(dir, "truth_params.txt"), truth, prov);
    }

    out << "sites: " << data.size() << ", edges: " << graph.edge_count() << '\n';
    out << "burn-in sweeps: " << spec.burn_in
        << ", discordant edge fraction: " << num(diag.discordant_fraction, "%.4f")
        << " (reference " << num(diag.reference_fraction, "%.4f") << ")\n";
    if (!diag.stabilized)
        out << "warning: label field may not have stabilized; increase sim.burn_in\n";
    print_cluster_sizes(out, labels, spec.n_clusters);
    out << "wrote " << obs_out << ", geometry.csv, truth_labels.csv"
        << (write_truth ? ", truth_params.txt" : "") << " in " << dir << '\n';
    if (!write_truth)
        out << "truth parameters omitted (sim.sigma2 below the representable minimum)\n";
    return 0;
}

int run_score(const RunConfig& config, std::ostream& out) {
    const std::string assign_path = require_path(config, "score.assignments", "score");
    const std::string truth_path = require_path(config, "score.truth", "score");

    auto assigned = io::read_labels_csv(assign_path);
    auto truth = io::read_labels_csv(truth_path);
    if (assigned.empty()) throw ValidationError("score: no rows in " + assign_path);

    const auto by_id = [](const std::pair<std::string, int>& a,
                          const std::pair<std::string, int>& b) { return a.first < b.first; };
    std::sort(assigned.begin(), assigned.end(), by_id);
    std::sort(truth.begin(), truth.end(), by_id);

    std::vector<std::string> only_assigned, only_truth;
    std::size_t i = 0, j = 0;
    while (i < assigned.size() || j < truth.size()) {
        if (j == truth.size() || (i < assigned.size() && assigned[i].first < truth[j].first))
            only_assigned.push_back(assigned[i++].first);
        else if (i == assigned.size() || truth[j].first < assigned[i].first)
            only_truth.push_back(truth[j++].first);
        else {
            ++i;
            ++j;
        }
    }
    if (!only_assigned.empty() || !only_truth.empty()) {
        std::string msg = "score: rosters differ";
        if (!only_assigned.empty()) msg += "; only in assignments: " + join_ids(only_assigned);
        if (!only_truth.empty()) msg += "; only in truth: " + join_ids(only_truth);
        throw ValidationError(msg);
    }

    const std::size_t n = assigned.size();
    LabelField a(n), b(n);
    for (std::size_t r = 0; r < n; ++r) {
        a[r] = assigned[r].second - 1;
        b[r] = truth[r].second - 1;
    }

    const Eigen::MatrixXi table = contingency_table(a, b);
    const double ari = adjusted_rand_index(a, b);

    out << "sites: " << n << '\n';
    out << "adjusted Rand index: " << num(ari, "%.6f") << '\n';
    out << "contingency (rows: assignments, columns: truth):\n";
    out << "        ";
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
        char head[16];
        std::snprintf(head, sizeof head, "%8s", ("t" + std::to_string(c + 1)).c_str());
        out << head;
    }
    out << '\n';
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        char head[16];
        std::snprintf(head, sizeof head, "%8s", ("a" + std::to_string(r + 1)).c_str());
        out << head;
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            char cell[16];
            std::snprintf(cell, sizeof cell, "%8d", table(r, c));
            out << cell;
        }
        out << '\n';
    }
    return 0;
}

}  // namespace sfclust::commands
