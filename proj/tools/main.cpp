#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "sfclust/commands.hpp"
#include "sfclust/config.hpp"
#include "sfclust/errors.hpp"
#include "sfclust/io.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed;
    std::string out_dir;
    std::string clusters;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

sfclust::RunConfig load_config(const CommonOpts& o) {
    sfclust::RunConfig cfg;
    if (!o.config_path.empty()) cfg = sfclust::RunConfig::from_file(o.config_path);
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw sfclust::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (!o.seed.empty()) cfg.set("seed", o.seed);
    if (!o.out_dir.empty()) cfg.set("out.dir", o.out_dir);
    if (!o.clusters.empty()) cfg.set("fit.clusters", o.clusters);
    return cfg;
}

void add_common(CLI::App* sub, CommonOpts& o, bool with_clusters) {
    sub->add_option("--config", o.config_path, "Configuration file (key = value lines)");
    sub->add_option("--set", o.sets, "Override one configuration key (key=value, repeatable)");
    sub->add_option("--seed", o.seed, "Random seed (overrides the seed key)");
    sub->add_option("--out-dir", o.out_dir, "Output directory (overrides out.dir)");
    if (with_clusters)
        sub->add_option("--clusters", o.clusters,
                        "Candidate cluster counts, e.g. 3 or 2,3,4 (overrides fit.clusters)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatially coupled clustering of annual curves"};
    app.set_version_flag("--version", std::string("sfclust ") + sfclust::io::kToolVersion);
    app.require_subcommand(1);

    CommonOpts ingest_o, fit_o, sim_o, score_o;
    CLI::App* ingest =
        app.add_subcommand("ingest", "Aggregate daily observations into annual curves");
    add_common(ingest, ingest_o, false);
    CLI::App* fit = app.add_subcommand("fit", "Estimate clusters from curves and geometry");
    add_common(fit, fit_o, true);
    CLI::App* simulate =
        app.add_subcommand("simulate", "Draw a synthetic dataset from the generative model");
    add_common(simulate, sim_o, false);
    CLI::App* score = app.add_subcommand("score", "Compare an assignment against reference labels");
    add_common(score, score_o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest))
            return sfclust::commands::run_ingest(load_config(ingest_o), std::cout);
        if (app.got_subcommand(fit))
            return sfclust::commands::run_fit(load_config(fit_o), std::cout);
        if (app.got_subcommand(simulate))
            return sfclust::commands::run_simulate(load_config(sim_o), std::cout);
        if (app.got_subcommand(score))
            return sfclust::commands::run_score(load_config(score_o), std::cout);
    } catch (const sfclust::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
