#include "sfclust/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sfclust/errors.hpp"

namespace sfclust {

namespace {

const std::map<std::string, std::string>& registry() {
    static const std::map<std::string, std::string> keys = {
        {"seed", "0"},
        {"out.dir", "out"},

        {"ingest.obs_csv", ""},
        {"ingest.geom_csv", ""},
        {"ingest.min_complete_years", "50"},
        {"ingest.max_missing_days_per_year", "0"},
        {"ingest.year_start", "0"},
        {"ingest.year_end", "0"},
        {"ingest.allow_negative", "false"},

        {"graph.k", "5"},
        {"graph.elevation_cutoff_m", "1000"},
        {"graph.weight_scheme", "binary_cutoff"},
        {"graph.exp_decay_h_m", "500"},

        {"basis.kind", "bspline"},
        {"basis.q", "12"},
        {"basis.order", "4"},
        {"basis.knots", ""},
        {"basis.lattice_points", "365"},

        {"mrf.theta_init", "0.5"},
        {"mrf.theta_bounds", "0,10"},
        {"mrf.scan_order", "systematic"},

        {"model.estimate_gamma", "true"},

        {"fit.curves_csv", ""},
        {"fit.geom_csv", ""},
        {"fit.clusters", "2"},
        {"fit.max_iter", "100"},
        {"fit.icm_sweeps", "3"},
        {"fit.tol", "1e-6"},
        {"fit.restarts", "5"},
        {"fit.estimate_theta", "true"},

        {"sim.n_sites", "200"},
        {"sim.clusters", "3"},
        {"sim.theta", "1"},
        {"sim.sigma2", "0.25"},
        {"sim.gamma_scale", "0.3"},
        {"sim.timepoints", "365"},
        {"sim.burn_in", "200"},
        {"sim.lat_range", "0,10"},
        {"sim.lon_range", "0,10"},
        {"sim.elev_range", "0,2000"},

        {"score.assignments", ""},
        {"score.truth", ""},
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
    throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return from_stream(in, path);
}

RunConfig RunConfig::from_stream(std::istream& in, const std::string& name) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ": line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (cfg.values_.count(key))
            throw ConfigError(name + ": line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!registry().count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

bool RunConfig::is_set(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const auto reg = registry().find(key);
    if (reg == registry().end()) throw ConfigError("unknown config key '" + key + "'");
    return reg->second;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const long n = std::stol(v, &used);
        if (used == v.size() && n >= std::numeric_limits<int>::min() &&
            n <= std::numeric_limits<int>::max())
            return static_cast<int>(n);
    } catch (const std::exception&) {
    }
    bad_value(key, v, "an integer");
}

double RunConfig::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    bad_value(key, v, "a number");
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "a boolean (true/false)");
}

std::uint64_t RunConfig::get_uint64(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const unsigned long long n = std::stoull(v, &used);
        if (used == v.size() && v.find('-') == std::string::npos) return n;
    } catch (const std::exception&) {
    }
    bad_value(key, v, "a nonnegative integer");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<int> out;
    for (const std::string& item : split_list(v)) {
        try {
            std::size_t used = 0;
            const long n = std::stol(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<int>(n));
        } catch (const std::exception&) {
            bad_value(key, v, "a comma-separated integer list");
        }
    }
    if (out.empty()) bad_value(key, v, "a nonempty integer list");
    return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (const std::string& item : split_list(v)) {
        try {
            std::size_t used = 0;
            const double x = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(x);
        } catch (const std::exception&) {
            bad_value(key, v, "a comma-separated number list");
        }
    }
    return out;
}

std::pair<double, double> RunConfig::get_pair(const std::string& key) const {
    const std::vector<double> items = get_double_list(key);
    if (items.size() != 2) bad_value(key, get_string(key), "two comma-separated numbers");
    return {items[0], items[1]};
}

std::vector<std::pair<std::string, std::string>> RunConfig::effective() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(registry().size());
    for (const auto& [key, def] : registry()) {
        const auto it = values_.find(key);
        out.emplace_back(key, it != values_.end() ? it->second : def);
    }
    return out;
}

std::uint64_t RunConfig::hash() const {
    std::string text;
    for (const auto& [key, value] : effective()) {
        text += key;
        text += '=';
        text += value;
        text += '\n';
    }
    return fnv1a64(text);
}

BasisSpec RunConfig::basis_spec() const {
    BasisSpec spec;
    spec.kind = basis_kind_from_string(get_string("basis.kind"));
    spec.q = get_int("basis.q");
    spec.order = get_int("basis.order");
    spec.interior_knots = get_double_list("basis.knots");
    spec.validate();
    return spec;
}

WeightScheme RunConfig::weight_scheme() const {
    return weight_scheme_from_string(get_string("graph.weight_scheme"));
}

FitConfig RunConfig::fit_config() const {
    FitConfig fc;
    fc.n_clusters = get_int_list("fit.clusters");
    fc.max_iter = get_int("fit.max_iter");
    fc.icm_sweeps_per_iter = get_int("fit.icm_sweeps");
    fc.tol = get_double("fit.tol");
    fc.seed = get_uint64("seed");
    fc.restarts = get_int("fit.restarts");
    fc.basis = basis_spec();
    fc.lattice_points = get_int("basis.lattice_points");
    fc.estimate_theta = get_bool("fit.estimate_theta");
    fc.theta_init = get_double("mrf.theta_init");
    const auto bounds = get_pair("mrf.theta_bounds");
    fc.theta_lo = bounds.first;
    fc.theta_hi = bounds.second;
    fc.estimate_gamma = get_bool("model.estimate_gamma");
    fc.validate();
    return fc;
}

SimSpec RunConfig::sim_spec() const {
    SimSpec spec;
    spec.n_sites = get_int("sim.n_sites");
    const auto lat = get_pair("sim.lat_range");
    const auto lon = get_pair("sim.lon_range");
    const auto elev = get_pair("sim.elev_range");
    spec.lat_min = lat.first;
    spec.lat_max = lat.second;
    spec.lon_min = lon.first;
    spec.lon_max = lon.second;
    spec.elev_min = elev.first;
    spec.elev_max = elev.second;
    spec.knn = get_int("graph.k");
    spec.elevation_cutoff_m = get_double("graph.elevation_cutoff_m");
    spec.n_clusters = get_int("sim.clusters");
    spec.theta = get_double("sim.theta");
    spec.gamma_scale = get_double("sim.gamma_scale");
    spec.sigma2 = get_double("sim.sigma2");
    spec.basis = basis_spec();
    spec.timepoints = get_int("sim.timepoints");
    spec.burn_in = get_int("sim.burn_in");
    spec.scan_order = scan_order_from_string(get_string("mrf.scan_order"));
    spec.seed = get_uint64("seed");
    spec.validate();
    return spec;
}

}  // namespace sfclust
