#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "sfclust/commands.hpp"
#include "sfclust/config.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/io.hpp"
#include "sfclust/model.hpp"
#include "sfclust/types.hpp"
#include "testutil.hpp"

using namespace sfclust;
using testutil::TempDir;

namespace {

RunConfig make_config(std::vector<std::pair<std::string, std::string>> entries) {
    RunConfig cfg;
    for (auto& [key, value] : entries) cfg.set(key, value);
    return cfg;
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

constexpr int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

/// Appends one observation row per non-Feb-29 day of `year`. The callback
/// maps day-of-year (1..365) to the value; a negative result skips the row,
/// leaving that day missing.
template <typename F>
void append_year(std::string& csv, const std::string& site, int year, F value) {
    int d = 0;
    for (int m = 0; m < 12; ++m) {
        for (int day = 1; day <= kMonthDays[m]; ++day) {
            ++d;
            const double v = value(d);
            if (v < 0) continue;
            char buf[80];
            std::snprintf(buf, sizeof buf, "%s,%04d-%02d-%02d,%.17g\n", site.c_str(), year, m + 1,
                          day, v);
            csv += buf;
        }
    }
}

std::string geometry_csv(const std::vector<std::string>& ids) {
    std::string text = "site_id,lat,lon,elev_m\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        text += ids[i] + "," + std::to_string(40.0 + 0.1 * static_cast<double>(i)) + "," +
                std::to_string(-3.0 + 0.1 * static_cast<double>(i)) + ",500\n";
    return text;
}

struct FitInputs {
    std::vector<SiteGeometry> sites;
    std::string curves_path;
    std::string geom_path;
};

/// Twenty 40-point curves in two interleaved shape groups, geometry on a
/// 4 x 5 grid at sea level so every kNN edge survives the elevation rule.
FitInputs write_fit_inputs(const TempDir& tmp) {
    FitInputs fx;
    fx.sites = testutil::grid_sites(4, 5, 0.1);
    const Eigen::VectorXd t = testutil::midpoint_grid(40);
    std::vector<AnnualCurve> curves;
    for (int i = 0; i < 20; ++i) {
        AnnualCurve c;
        c.site_id = fx.sites[static_cast<std::size_t>(i)].site_id;
        c.times = t;
        c.values = Eigen::VectorXd(40);
        for (int j = 0; j < 40; ++j)
            c.values(j) = std::sin(2.0 * oracle::kPi * t(j) * (1 + i % 2)) +
                          0.01 * static_cast<double>((i * 40 + j) % 7);
        curves.push_back(std::move(c));
    }
    fx.curves_path = tmp.file("curves.csv");
    fx.geom_path = tmp.file("geom.csv");
    io::write_curves_csv(fx.curves_path, curves, {0x7, 7});
    io::write_geometry_csv(fx.geom_path, fx.sites, {0x7, 7});
    return fx;
}

}  // namespace

TEST_CASE("ingest aggregates complete sites and reports coverage") {
    TempDir tmp("cmd-ingest");
    std::string obs = "site_id,date,value\n";
    for (int s = 0; s < 4; ++s)
        append_year(obs, "S" + std::to_string(s + 1), 2001,
                    [&](int d) { return static_cast<double>(1000 * (s + 1) + d); });
    testutil::spit(tmp.file("obs.csv"), obs);
    testutil::spit(tmp.file("geom.csv"), geometry_csv({"S1", "S2", "S3"}));

    const RunConfig cfg = make_config({{"ingest.obs_csv", tmp.file("obs.csv")},
                                       {"ingest.geom_csv", tmp.file("geom.csv")},
                                       {"ingest.min_complete_years", "1"},
                                       {"out.dir", tmp.file("out")},
                                       {"seed", "3"}});
    std::ostringstream log;
    CHECK(commands::run_ingest(cfg, log) == 0);
    const std::string text = log.str();
    CHECK(contains(text, "observation rows: 1460, sites: 4"));
    CHECK(contains(text, "missing days: 0 of 1460 (0.00%)"));
    CHECK(contains(text, "complete sites kept: 4, dropped: 0"));
    CHECK(contains(text, "without geometry: S4"));
    CHECK(contains(text, "aggregation years: per-site full span"));
    CHECK(contains(text, "(3 sites)"));

    const auto curves = io::read_curves_csv(tmp.file("out/curves.csv"));
    REQUIRE(curves.size() == 3);
    CHECK(curves[0].site_id == "S1");
    CHECK(curves[2].site_id == "S3");
    for (const auto& c : curves) {
        CHECK(c.years_used == 1);
        CHECK(c.values.size() == 365);
    }
    CHECK(curves[0].values(0) == 1001.0);
    CHECK(curves[1].values(59) == 2060.0);
    CHECK(curves[2].values(364) == 3365.0);
    CHECK(curves[0].times(0) > 0.0);
    CHECK(curves[0].times(364) < 1.0);

    const std::string geom_text = testutil::slurp(tmp.file("out/geometry.csv"));
    CHECK(count_lines(geom_text) == 5);
    CHECK(contains(geom_text, "S3,"));
}

TEST_CASE("ingest writes headers only when no site is complete enough") {
    TempDir tmp("cmd-ingest-empty");
    std::string obs = "site_id,date,value\n";
    for (const char* id : {"A", "B", "C"})
        append_year(obs, id, 2001, [](int d) { return static_cast<double>(d); });
    testutil::spit(tmp.file("obs.csv"), obs);
    testutil::spit(tmp.file("geom.csv"), geometry_csv({"A", "B", "C"}));

    const RunConfig cfg = make_config({{"ingest.obs_csv", tmp.file("obs.csv")},
                                       {"ingest.geom_csv", tmp.file("geom.csv")},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK(commands::run_ingest(cfg, log) == 0);
    const std::string text = log.str();
    CHECK(contains(text, "complete sites kept: 0, dropped: 3"));
    CHECK(contains(text, "below threshold: A, B, C"));
    CHECK(contains(text,
                   "no site met the completeness requirement; outputs contain headers only"));
    CHECK(contains(text, "(0 sites)"));

    const std::string curves_text = testutil::slurp(tmp.file("out/curves.csv"));
    CHECK(count_lines(curves_text) == 2);
    CHECK(contains(curves_text, "site_id,time,value,years_used"));
    CHECK(count_lines(testutil::slurp(tmp.file("out/geometry.csv"))) == 2);
}

TEST_CASE("ingest reports sub-percent missing fractions and honors the year window") {
    TempDir tmp("cmd-ingest-window");
    const std::vector<std::string> ids{"P1", "P2", "P3", "P4"};
    std::string obs = "site_id,date,value\n";
    for (int s = 0; s < 4; ++s)
        for (int year = 2001; year <= 2005; ++year)
            append_year(obs, ids[static_cast<std::size_t>(s)], year, [&](int d) {
                const bool gap = s == 0 && year == 2003 && d >= 100 && d <= 102;
                return gap ? -1.0 : static_cast<double>(d + 1000 * (year - 2001));
            });
    testutil::spit(tmp.file("obs.csv"), obs);
    testutil::spit(tmp.file("geom.csv"), geometry_csv(ids));

    const RunConfig cfg = make_config({{"ingest.obs_csv", tmp.file("obs.csv")},
                                       {"ingest.geom_csv", tmp.file("geom.csv")},
                                       {"ingest.min_complete_years", "4"},
                                       {"ingest.year_start", "2002"},
                                       {"ingest.year_end", "2003"},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK(commands::run_ingest(cfg, log) == 0);
    const std::string text = log.str();
    CHECK(contains(text, "missing days: 3 of 7300 (0.04%)"));
    CHECK(contains(text, "complete sites kept: 4, dropped: 0"));
    CHECK(contains(text, "aggregation years: 2002..2003"));

    const auto curves = io::read_curves_csv(tmp.file("out/curves.csv"));
    REQUIRE(curves.size() == 4);
    for (const auto& c : curves) CHECK(c.years_used == 2);
    CHECK(curves[0].values(0) == 1501.0);
    CHECK(curves[0].values(99) == 1100.0);
    CHECK(curves[1].values(99) == 1600.0);
}

TEST_CASE("ingest rejects bad year windows, duplicate geometry, and negatives") {
    TempDir tmp("cmd-ingest-bad");
    std::string obs = "site_id,date,value\n";
    append_year(obs, "A", 2001, [](int d) { return static_cast<double>(d); });
    testutil::spit(tmp.file("obs.csv"), obs);
    testutil::spit(tmp.file("geom.csv"), geometry_csv({"A"}));
    const auto base = [&] {
        return make_config({{"ingest.obs_csv", tmp.file("obs.csv")},
                            {"ingest.geom_csv", tmp.file("geom.csv")},
                            {"ingest.min_complete_years", "1"},
                            {"out.dir", tmp.file("out")}});
    };
    std::ostringstream log;

    RunConfig only_start = base();
    only_start.set("ingest.year_start", "2001");
    CHECK_THROWS_WITH_AS(commands::run_ingest(only_start, log),
                         "ingest.year_start and ingest.year_end must be set together",
                         ConfigError);

    RunConfig reversed = base();
    reversed.set("ingest.year_start", "2003");
    reversed.set("ingest.year_end", "2002");
    CHECK_THROWS_WITH_AS(commands::run_ingest(reversed, log),
                         "ingest.year_start exceeds ingest.year_end", ConfigError);

    const RunConfig no_obs = make_config({{"ingest.geom_csv", tmp.file("geom.csv")}});
    CHECK_THROWS_WITH_AS(commands::run_ingest(no_obs, log),
                         "ingest requires the configuration key ingest.obs_csv", ConfigError);

    RunConfig ghost = base();
    ghost.set("ingest.obs_csv", tmp.file("nope.csv"));
    CHECK_THROWS_WITH_AS(commands::run_ingest(ghost, log),
                         doctest::Contains("cannot open for reading"), Error);

    testutil::spit(tmp.file("dup.csv"), geometry_csv({"A"}) + "A,41,3,10\n");
    RunConfig dup = base();
    dup.set("ingest.geom_csv", tmp.file("dup.csv"));
    CHECK_THROWS_WITH_AS(commands::run_ingest(dup, log),
                         doctest::Contains("duplicate site_id A"), ValidationError);

    testutil::spit(tmp.file("neg.csv"), "site_id,date,value\nA,2001-01-01,-4\n");
    RunConfig neg = base();
    neg.set("ingest.obs_csv", tmp.file("neg.csv"));
    CHECK_THROWS_WITH_AS(commands::run_ingest(neg, log),
                         doctest::Contains("negative value '-4'"), ParseError);
    neg.set("ingest.allow_negative", "true");
    CHECK(commands::run_ingest(neg, log) == 0);
}

TEST_CASE("simulate writes observations, geometry, truth labels, and parameters") {
    TempDir tmp("cmd-simulate");
    const RunConfig cfg = make_config({{"sim.n_sites", "30"},
                                       {"sim.clusters", "2"},
                                       {"sim.burn_in", "30"},
                                       {"seed", "5"},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK(commands::run_simulate(cfg, log) == 0);
    const std::string text = log.str();
    CHECK(contains(text, "sites: 30, edges: "));
    CHECK(contains(text, "burn-in sweeps: 30, discordant edge fraction: "));
    CHECK(contains(text, "cluster sizes: 1:"));
    CHECK(contains(text, "truth_params.txt"));
    for (const char* name :
         {"observations.csv", "geometry.csv", "truth_labels.csv", "truth_params.txt"})
        CHECK(std::filesystem::exists(tmp.path() / "out" / name));

    const ModelParams truth = io::read_params(tmp.file("out/truth_params.txt"));
    CHECK(truth.mrf.n_clusters == 2);
    CHECK(truth.mrf.theta == 1.0);
    CHECK(truth.cov.sigma2 == 0.25);

    const auto labels = io::read_labels_csv(tmp.file("out/truth_labels.csv"));
    REQUIRE(labels.size() == 30);
    for (const auto& [id, cluster] : labels) {
        CHECK(cluster >= 1);
        CHECK(cluster <= 2);
    }

    const std::string first = testutil::slurp(tmp.file("out/observations.csv"));
    std::ostringstream log2;
    CHECK(commands::run_simulate(cfg, log2) == 0);
    CHECK(testutil::slurp(tmp.file("out/observations.csv")) == first);
    CHECK(log2.str() == text);

    RunConfig reseeded = cfg;
    reseeded.set("seed", "6");
    std::ostringstream log3;
    CHECK(commands::run_simulate(reseeded, log3) == 0);
    CHECK(testutil::slurp(tmp.file("out/observations.csv")) != first);
}

TEST_CASE("simulate omits truth parameters when noise sits below the floor") {
    TempDir tmp("cmd-simulate-floor");
    const RunConfig cfg = make_config({{"sim.n_sites", "12"},
                                       {"sim.clusters", "2"},
                                       {"sim.burn_in", "5"},
                                       {"sim.sigma2", "0"},
                                       {"seed", "9"},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK(commands::run_simulate(cfg, log) == 0);
    CHECK(contains(log.str(),
                   "truth parameters omitted (sim.sigma2 below the representable minimum)"));
    CHECK_FALSE(std::filesystem::exists(tmp.path() / "out" / "truth_params.txt"));
    CHECK(std::filesystem::exists(tmp.path() / "out" / "truth_labels.csv"));

    RunConfig subdaily = cfg;
    subdaily.set("sim.timepoints", "120");
    std::ostringstream log2;
    CHECK_THROWS_WITH_AS(commands::run_simulate(subdaily, log2),
                         "simulate requires sim.timepoints = 365 to export daily observations",
                         ConfigError);
}

TEST_CASE("simulate, ingest, fit, and score compose into a full study") {
    TempDir tmp("cmd-pipeline");
    const std::string sim_dir = tmp.file("sim");
    const std::string ingest_dir = tmp.file("ingest");
    const std::string fit_dir = tmp.file("fit");

    const RunConfig sim_cfg = make_config({{"sim.n_sites", "60"},
                                           {"sim.clusters", "2"},
                                           {"sim.burn_in", "40"},
                                           {"seed", "17"},
                                           {"out.dir", sim_dir}});
    std::ostringstream sim_log;
    REQUIRE(commands::run_simulate(sim_cfg, sim_log) == 0);

    const RunConfig ingest_cfg = make_config({{"ingest.obs_csv", sim_dir + "/observations.csv"},
                                              {"ingest.geom_csv", sim_dir + "/geometry.csv"},
                                              {"ingest.min_complete_years", "1"},
                                              {"ingest.allow_negative", "true"},
                                              {"out.dir", ingest_dir}});
    std::ostringstream ingest_log;
    REQUIRE(commands::run_ingest(ingest_cfg, ingest_log) == 0);
    CHECK(contains(ingest_log.str(), "complete sites kept: 60, dropped: 0"));

    const RunConfig fit_cfg = make_config({{"fit.curves_csv", ingest_dir + "/curves.csv"},
                                           {"fit.geom_csv", ingest_dir + "/geometry.csv"},
                                           {"fit.clusters", "2"},
                                           {"fit.restarts", "2"},
                                           {"fit.max_iter", "30"},
                                           {"fit.tol", "1e-5"},
                                           {"seed", "7"},
                                           {"out.dir", fit_dir}});
    std::ostringstream fit_log;
    const int rc = commands::run_fit(fit_cfg, fit_log);
    CHECK((rc == 0 || rc == 2));
    const std::string fit_text = fit_log.str();
    CHECK(contains(fit_text, "sites: 60, edges: "));
    CHECK(contains(fit_text, "clusters: 2, theta: "));
    CHECK(contains(fit_text, "objective: "));
    CHECK(contains(fit_text, "cluster sizes:"));
    for (const char* name :
         {"assignments.csv", "clusters.geojson", "params.txt", "trace.csv", "graph.csv"})
        CHECK(std::filesystem::exists(std::filesystem::path(fit_dir) / name));

    const ModelParams fitted = io::read_params(fit_dir + "/params.txt");
    CHECK(fitted.mrf.n_clusters == 2);
    CHECK(fitted.cov.sigma2 >= CovParams::sigma2_min);

    const RunConfig score_cfg = make_config({{"score.assignments", fit_dir + "/assignments.csv"},
                                             {"score.truth", sim_dir + "/truth_labels.csv"}});
    std::ostringstream score_log;
    CHECK(commands::run_score(score_cfg, score_log) == 0);
    const std::string score_text = score_log.str();
    CHECK(contains(score_text, "sites: 60"));
    REQUIRE(contains(score_text, "adjusted Rand index: "));
    const std::size_t pos = score_text.find("adjusted Rand index: ");
    const double ari = std::stod(score_text.substr(pos + 21));
    CHECK(ari >= -1.0);
    CHECK(ari <= 1.0);
    CHECK(contains(score_text, "contingency (rows: assignments, columns: truth):"));
}

TEST_CASE("fit reports the iteration cap and still writes outputs") {
    TempDir tmp("cmd-fit-cap");
    const FitInputs fx = write_fit_inputs(tmp);
    const RunConfig cfg = make_config({{"fit.curves_csv", fx.curves_path},
                                       {"fit.geom_csv", fx.geom_path},
                                       {"fit.clusters", "2"},
                                       {"fit.restarts", "1"},
                                       {"fit.max_iter", "1"},
                                       {"basis.q", "6"},
                                       {"basis.lattice_points", "80"},
                                       {"seed", "3"},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK(commands::run_fit(cfg, log) == 2);
    CHECK(contains(log.str(), "(iteration cap reached)"));
    CHECK(contains(log.str(),
                   "warning: estimation stopped at fit.max_iter without meeting fit.tol"));
    CHECK(std::filesystem::exists(tmp.path() / "out" / "assignments.csv"));
    CHECK(io::read_labels_csv(tmp.file("out/assignments.csv")).size() == 20);
}

TEST_CASE("fit reports candidate objectives and the pseudo-BIC selection") {
    TempDir tmp("cmd-fit-select");
    const FitInputs fx = write_fit_inputs(tmp);
    const RunConfig cfg = make_config({{"fit.curves_csv", fx.curves_path},
                                       {"fit.geom_csv", fx.geom_path},
                                       {"fit.clusters", "1,2"},
                                       {"fit.restarts", "1"},
                                       {"fit.max_iter", "15"},
                                       {"fit.tol", "1e-4"},
                                       {"basis.q", "6"},
                                       {"basis.lattice_points", "80"},
                                       {"seed", "3"},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    const int rc = commands::run_fit(cfg, log);
    CHECK((rc == 0 || rc == 2));
    const std::string text = log.str();
    CHECK(contains(text, "  C=1  J="));
    CHECK(contains(text, "  C=2  J="));
    CHECK(contains(text, "pseudo-BIC="));
    CHECK(contains(text, "selected C="));
    CHECK(contains(text, " by pseudo-BIC"));
    CHECK(io::read_labels_csv(tmp.file("out/assignments.csv")).size() == 20);
}

TEST_CASE("fit rejects curve files without matching geometry") {
    TempDir tmp("cmd-fit-orphan");
    const FitInputs fx = write_fit_inputs(tmp);
    const std::vector<SiteGeometry> partial(fx.sites.begin(), fx.sites.end() - 2);
    io::write_geometry_csv(tmp.file("partial.csv"), partial, {0x7, 7});
    const RunConfig cfg = make_config({{"fit.curves_csv", fx.curves_path},
                                       {"fit.geom_csv", tmp.file("partial.csv")},
                                       {"out.dir", tmp.file("out")}});
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(commands::run_fit(cfg, log),
                         "fit: curves without geometry: S0019, S0020", ValidationError);

    io::write_curves_csv(tmp.file("empty.csv"), {}, {0x7, 7});
    const RunConfig empty = make_config({{"fit.curves_csv", tmp.file("empty.csv")},
                                         {"fit.geom_csv", fx.geom_path},
                                         {"out.dir", tmp.file("out")}});
    CHECK_THROWS_WITH_AS(commands::run_fit(empty, log), doctest::Contains("fit: no curves in"),
                         ValidationError);
}

TEST_CASE("score reports perfect recovery for relabeled assignments") {
    TempDir tmp("cmd-score");
    const std::vector<std::string> ids{"S1", "S2", "S3", "S4", "S5", "S6"};
    io::write_labels_csv(tmp.file("assign.csv"), ids, {0, 0, 1, 1, 2, 2}, {0x1, 1});
    io::write_labels_csv(tmp.file("truth.csv"), ids, {2, 2, 0, 0, 1, 1}, {0x1, 1});
    const RunConfig cfg = make_config({{"score.assignments", tmp.file("assign.csv")},
                                       {"score.truth", tmp.file("truth.csv")}});
    std::ostringstream log;
    CHECK(commands::run_score(cfg, log) == 0);
    const std::string text = log.str();
    CHECK(contains(text, "sites: 6"));
    CHECK(contains(text, "adjusted Rand index: 1.000000"));
    CHECK(contains(text, "t3"));
    CHECK(contains(text, "a3"));
}

TEST_CASE("score rejects mismatched rosters and empty assignments") {
    TempDir tmp("cmd-score-roster");
    io::write_labels_csv(tmp.file("assign.csv"), {"A", "B"}, {0, 1}, {0x1, 1});
    io::write_labels_csv(tmp.file("truth.csv"), {"B", "C"}, {0, 1}, {0x1, 1});
    const RunConfig cfg = make_config({{"score.assignments", tmp.file("assign.csv")},
                                       {"score.truth", tmp.file("truth.csv")}});
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(commands::run_score(cfg, log),
                         "score: rosters differ; only in assignments: A; only in truth: C",
                         ValidationError);

    io::write_labels_csv(tmp.file("none.csv"), {}, {}, {0x1, 1});
    const RunConfig empty = make_config({{"score.assignments", tmp.file("none.csv")},
                                         {"score.truth", tmp.file("truth.csv")}});
    CHECK_THROWS_WITH_AS(commands::run_score(empty, log), doctest::Contains("score: no rows in"),
                         ValidationError);

    const RunConfig missing = make_config({{"score.truth", tmp.file("truth.csv")}});
    CHECK_THROWS_WITH_AS(commands::run_score(missing, log),
                         "score requires the configuration key score.assignments", ConfigError);
}
