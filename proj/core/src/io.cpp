#include "sfclust/io.hpp"

#include <json.hpp>

#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sfclust/basis.hpp"
#include "sfclust/csv.hpp"
#include "sfclust/errors.hpp"

namespace sfclust::io {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex16(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path);
    return in;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path);
}

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

std::string date_string(int year, int day_of_year) {
    static const int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int month = 0;
    int d = day_of_year;
    while (d > kMonthDays[month]) {
        d -= kMonthDays[month];
        ++month;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month + 1, d);
    return buf;
}

}  // namespace

std::string provenance_line(const Provenance& p) {
    std::string line = "# sfclust ";
    line += kToolVersion;
    line += " config=";
    line += hex16(p.config_hash);
    line += " seed=";
    line += std::to_string(p.seed);
    return line;
}

void write_curves_csv(const std::string& path, const std::vector<AnnualCurve>& curves,
                      const Provenance& p) {
    for (const AnnualCurve& c : curves) c.validate();
    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_id,time,value,years_used\n";
    for (const AnnualCurve& c : curves)
        for (Eigen::Index j = 0; j < c.times.size(); ++j)
            out << c.site_id << ',' << fmt(c.times[j]) << ',' << fmt(c.values[j]) << ','
                << c.years_used << '\n';
    finish(out, path);
}

std::vector<AnnualCurve> read_curves_csv(const std::string& path) {
    auto in = open_in(path);
    const auto rows = csv::read_table(in, path);
    if (rows.empty()) throw ParseError(path + ": missing header");
    csv::require_header(rows.front(), {"site_id", "time", "value", "years_used"}, path);

    struct Block {
        std::string id;
        std::vector<double> t, v;
        int years = 1;
    };
    std::vector<Block> blocks;
    std::unordered_set<std::string> seen;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const csv::Row& row = rows[r];
        const std::string where = path + ": line " + std::to_string(row.line_no);
        if (row.fields.size() != 4)
            throw ParseError(where + ": expected 4 fields, got " +
                             std::to_string(row.fields.size()));
        const std::string& id = row.fields[0];
        if (id.empty()) throw ParseError(where + ": empty site_id");

        if (blocks.empty() || blocks.back().id != id) {
            if (!seen.insert(id).second)
                throw ParseError(where + ": rows of site '" + id + "' are not contiguous");
            const long long y = csv::parse_long(row.fields[3], path, row.line_no);
            if (y < 1 || y > INT_MAX) throw ParseError(where + ": years_used out of range");
            blocks.push_back({id, {}, {}, static_cast<int>(y)});
        } else if (csv::parse_long(row.fields[3], path, row.line_no) != blocks.back().years) {
            throw ParseError(where + ": years_used changes within site '" + id + "'");
        }

        Block& b = blocks.back();
        const double t = csv::parse_double(row.fields[1], path, row.line_no);
        if (!b.t.empty() && !(t > b.t.back()))
            throw ParseError(where + ": times of site '" + id + "' must be strictly increasing");
        b.t.push_back(t);
        b.v.push_back(csv::parse_double(row.fields[2], path, row.line_no));
    }

    std::vector<AnnualCurve> curves;
    curves.reserve(blocks.size());
    for (Block& b : blocks) {
        AnnualCurve c;
        c.site_id = std::move(b.id);
        const auto m = static_cast<Eigen::Index>(b.t.size());
        c.times = Eigen::Map<const Eigen::VectorXd>(b.t.data(), m);
        c.values = Eigen::Map<const Eigen::VectorXd>(b.v.data(), m);
        c.years_used = b.years;
        c.validate();
        curves.push_back(std::move(c));
    }
    return curves;
}

void write_geometry_csv(const std::string& path, const std::vector<SiteGeometry>& sites,
                        const Provenance& p) {
    for (const SiteGeometry& s : sites) s.validate();
    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_id,lat,lon,elev_m\n";
    for (const SiteGeometry& s : sites)
        out << s.site_id << ',' << fmt(s.latitude_deg) << ',' << fmt(s.longitude_deg) << ','
            << fmt(s.elevation_m) << '\n';
    finish(out, path);
}

void write_observations_csv(const std::string& path, const Dataset& data, int year,
                            const Provenance& p) {
    if (year < 1 || is_leap(year))
        throw ValidationError("observation export needs a non-leap year, got " +
                              std::to_string(year));
    for (const AnnualCurve& c : data.curves)
        if (c.values.size() != 365)
            throw ValidationError("observation export needs 365 values per site; site '" +
                                  c.site_id + "' has " + std::to_string(c.values.size()));
    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_id,date,value\n";
    for (const AnnualCurve& c : data.curves)
        for (int d = 1; d <= 365; ++d)
            out << c.site_id << ',' << date_string(year, d) << ',' << fmt(c.values[d - 1]) << '\n';
    finish(out, path);
}

void write_assignments_csv(const std::string& path, const std::vector<std::string>& site_ids,
                           const LabelField& labels, const Eigen::MatrixXd& posteriors,
                           const Provenance& p) {
    const std::size_t n = site_ids.size();
    if (labels.size() != n || static_cast<std::size_t>(posteriors.rows()) != n)
        throw ValidationError("assignments writer: sites, labels and posteriors disagree in size");
    const int C = static_cast<int>(posteriors.cols());
    validate_labels(labels, C, n);

    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_id,cluster";
    for (int k = 1; k <= C; ++k) out << ",posterior_" << k;
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        out << site_ids[i] << ',' << labels[i] + 1;
        for (int k = 0; k < C; ++k)
            out << ',' << fmt(posteriors(static_cast<Eigen::Index>(i), k));
        out << '\n';
    }
    finish(out, path);
}

void write_labels_csv(const std::string& path, const std::vector<std::string>& site_ids,
                      const LabelField& labels, const Provenance& p) {
    const std::size_t n = site_ids.size();
    if (labels.size() != n)
        throw ValidationError("labels writer: sites and labels disagree in size");
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] < 0)
            throw ValidationError("labels writer: negative label at site '" + site_ids[i] + "'");

    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_id,cluster\n";
    for (std::size_t i = 0; i < n; ++i) out << site_ids[i] << ',' << labels[i] + 1 << '\n';
    finish(out, path);
}

std::vector<std::pair<std::string, int>> read_labels_csv(const std::string& path) {
    auto in = open_in(path);
    const auto rows = csv::read_table(in, path);
    if (rows.empty()) throw ParseError(path + ": missing header");
    const auto& h = rows.front().fields;
    if (h.size() < 2 || h[0] != "site_id" || h[1] != "cluster")
        throw ParseError(path + ": expected a header starting with site_id,cluster");

    std::vector<std::pair<std::string, int>> out;
    out.reserve(rows.size() - 1);
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const csv::Row& row = rows[r];
        const std::string where = path + ": line " + std::to_string(row.line_no);
        if (row.fields.size() < 2) throw ParseError(where + ": expected at least 2 fields");
        if (row.fields[0].empty()) throw ParseError(where + ": empty site_id");
        if (!seen.insert(row.fields[0]).second)
            throw ParseError(where + ": duplicate site_id '" + row.fields[0] + "'");
        const long long c = csv::parse_long(row.fields[1], path, row.line_no);
        if (c < 1 || c > INT_MAX) throw ParseError(where + ": cluster must be a positive integer");
        out.emplace_back(row.fields[0], static_cast<int>(c));
    }
    return out;
}

void write_trace_csv(const std::string& path, const std::vector<double>& objective,
                     const Provenance& p) {
    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "iteration,objective\n";
    for (std::size_t t = 0; t < objective.size(); ++t)
        out << t + 1 << ',' << fmt(objective[t]) << '\n';
    finish(out, path);
}

void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const std::vector<std::string>& site_ids, const Provenance& p) {
    if (static_cast<std::size_t>(graph.n) != site_ids.size())
        throw ValidationError("graph writer: graph and site roster disagree in size");
    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "site_a,site_b,weight\n";
    graph.for_each_edge([&](int i, int j, double w) {
        out << site_ids[static_cast<std::size_t>(i)] << ',' << site_ids[static_cast<std::size_t>(j)]
            << ',' << fmt(w) << '\n';
    });
    finish(out, path);
}

void write_geojson(const std::string& path, const std::vector<SiteGeometry>& sites,
                   const LabelField& labels, const Eigen::MatrixXd& posteriors,
                   const Provenance& p) {
    const std::size_t n = sites.size();
    if (labels.size() != n || static_cast<std::size_t>(posteriors.rows()) != n)
        throw ValidationError("geojson writer: sites, labels and posteriors disagree in size");
    validate_labels(labels, static_cast<int>(posteriors.cols()), n);

    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const SiteGeometry& s = sites[i];
        const double pmax = posteriors.row(static_cast<Eigen::Index>(i)).maxCoeff();
        features.push_back({
            {"type", "Feature"},
            {"geometry",
             {{"type", "Point"}, {"coordinates", {s.longitude_deg, s.latitude_deg}}}},
            {"properties",
             {{"site_id", s.site_id},
              {"cluster", labels[i] + 1},
              {"posterior_max", pmax}}},
        });
    }
    nlohmann::json doc = {
        {"type", "FeatureCollection"},
        {"provenance",
         {{"tool", std::string("sfclust ") + kToolVersion},
          {"config_hash", hex16(p.config_hash)},
          {"seed", p.seed}}},
        {"features", std::move(features)},
    };

    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

void write_params(const std::string& path, const ModelParams& params, const Provenance& p) {
    params.validate();
    const int C = params.clusters.n_clusters();
    const int q = params.clusters.q();

    auto out = open_out(path);
    out << provenance_line(p) << '\n';
    out << "sfclust-params v1\n";
    out << "n_clusters " << C << '\n';
    out << "theta " << fmt(params.mrf.theta) << '\n';
    out << "sigma2 " << fmt(params.cov.sigma2) << '\n';
    out << "basis_kind " << to_string(params.basis.kind) << '\n';
    out << "basis_q " << params.basis.q << '\n';
    out << "basis_order " << params.basis.order << '\n';
    out << "basis_knots ";
    if (params.basis.interior_knots.empty()) {
        out << "none";
    } else {
        for (std::size_t i = 0; i < params.basis.interior_knots.size(); ++i)
            out << (i ? "," : "") << fmt(params.basis.interior_knots[i]);
    }
    out << '\n';

    for (int k = 0; k < C; ++k) {
        out << "alpha " << k + 1;
        for (int j = 0; j < q; ++j) out << ' ' << fmt(params.clusters.alpha(k, j));
        out << '\n';
    }
    const auto write_matrix = [&](const char* name, const Eigen::MatrixXd& m) {
        for (int r = 0; r < q; ++r) {
            out << name << ' ' << r + 1;
            for (int c = 0; c < q; ++c) out << ' ' << fmt(m(r, c));
            out << '\n';
        }
    };
    write_matrix("gamma", params.cov.gamma);
    write_matrix("transform", params.transform.T);
    write_matrix("transform_inv", params.transform.T_inv);
    finish(out, path);
}

ModelParams read_params(const std::string& path) {
    auto in = open_in(path);

    std::string line;
    std::size_t line_no = 0;
    bool version_seen = false;

    int C = 0, q = 0, order = 0;
    double theta = 0.0, sigma2 = 0.0;
    std::string kind;
    std::vector<double> knots;
    bool have_C = false, have_q = false, have_order = false, have_theta = false,
         have_sigma2 = false, have_kind = false, have_knots = false;

    Eigen::MatrixXd alpha, gamma, T, T_inv;
    int alpha_rows = 0, gamma_rows = 0, t_rows = 0, tinv_rows = 0;

    const auto fail = [&](const std::string& what) {
        return ParseError(path + ": line " + std::to_string(line_no) + ": " + what);
    };
    const auto one_double = [&](std::istringstream& ss, const char* name) {
        std::string tok, extra;
        if (!(ss >> tok)) throw fail(std::string(name) + ": missing value");
        const double v = csv::parse_double(tok, path, line_no);
        if (ss >> extra) throw fail(std::string(name) + ": trailing tokens");
        return v;
    };
    const auto one_long = [&](std::istringstream& ss, const char* name) {
        std::string tok, extra;
        if (!(ss >> tok)) throw fail(std::string(name) + ": missing value");
        const long long v = csv::parse_long(tok, path, line_no);
        if (ss >> extra) throw fail(std::string(name) + ": trailing tokens");
        return v;
    };
    const auto matrix_row = [&](std::istringstream& ss, Eigen::MatrixXd& m, int rows, int& count,
                                const std::string& what) {
        if (!have_q) throw fail("basis_q must precede " + what + " rows");
        if (m.size() == 0) m.setZero(rows, q);
        std::string tok;
        if (!(ss >> tok)) throw fail(what + ": missing row index");
        const long long r = csv::parse_long(tok, path, line_no);
        if (r != count + 1) throw fail(what + ": rows out of order");
        for (int j = 0; j < q; ++j) {
            if (!(ss >> tok)) throw fail(what + ": expected " + std::to_string(q) + " values");
            m(static_cast<Eigen::Index>(r) - 1, j) = csv::parse_double(tok, path, line_no);
        }
        if (ss >> tok) throw fail(what + ": trailing tokens");
        ++count;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;

        if (!version_seen) {
            std::string v, extra;
            if (key != "sfclust-params" || !(ss >> v) || v != "v1" || ss >> extra)
                throw fail("expected 'sfclust-params v1' header");
            version_seen = true;
            continue;
        }

        if (key == "n_clusters") {
            if (have_C) throw fail("duplicate n_clusters");
            const long long v = one_long(ss, "n_clusters");
            if (v < 1 || v > INT_MAX) throw fail("n_clusters out of range");
            C = static_cast<int>(v);
            have_C = true;
        } else if (key == "theta") {
            if (have_theta) throw fail("duplicate theta");
            theta = one_double(ss, "theta");
            have_theta = true;
        } else if (key == "sigma2") {
            if (have_sigma2) throw fail("duplicate sigma2");
            sigma2 = one_double(ss, "sigma2");
            have_sigma2 = true;
        } else if (key == "basis_kind") {
            if (have_kind) throw fail("duplicate basis_kind");
            std::string extra;
            if (!(ss >> kind) || ss >> extra) throw fail("basis_kind: expected one value");
            if (kind != "bspline" && kind != "fourier")
                throw fail("basis_kind: unknown value '" + kind + "'");
            have_kind = true;
        } else if (key == "basis_q") {
            if (have_q) throw fail("duplicate basis_q");
            const long long v = one_long(ss, "basis_q");
            if (v < 2 || v > 10000) throw fail("basis_q out of range");
            q = static_cast<int>(v);
            have_q = true;
        } else if (key == "basis_order") {
            if (have_order) throw fail("duplicate basis_order");
            const long long v = one_long(ss, "basis_order");
            if (v < 1 || v > 1000) throw fail("basis_order out of range");
            order = static_cast<int>(v);
            have_order = true;
        } else if (key == "basis_knots") {
            if (have_knots) throw fail("duplicate basis_knots");
            std::string spec_str, extra;
            if (!(ss >> spec_str)) throw fail("basis_knots: missing value");
            if (ss >> extra) throw fail("basis_knots: trailing tokens");
            if (spec_str != "none")
                for (const std::string& f : csv::split_line(spec_str))
                    knots.push_back(csv::parse_double(f, path, line_no));
            have_knots = true;
        } else if (key == "alpha") {
            if (!have_C) throw fail("n_clusters must precede alpha rows");
            matrix_row(ss, alpha, C, alpha_rows, "alpha");
        } else if (key == "gamma") {
            matrix_row(ss, gamma, q, gamma_rows, "gamma");
        } else if (key == "transform") {
            matrix_row(ss, T, q, t_rows, "transform");
        } else if (key == "transform_inv") {
            matrix_row(ss, T_inv, q, tinv_rows, "transform_inv");
        } else {
            throw fail("unknown entry '" + key + "'");
        }
    }

    if (!version_seen) throw ParseError(path + ": empty parameter file");
    const auto require = [&](bool ok, const char* what) {
        if (!ok) throw ParseError(path + ": missing or incomplete " + std::string(what));
    };
    require(have_C, "n_clusters");
    require(have_q, "basis_q");
    require(have_order, "basis_order");
    require(have_theta, "theta");
    require(have_sigma2, "sigma2");
    require(have_kind, "basis_kind");
    require(have_knots, "basis_knots");
    require(alpha_rows == C, "alpha rows");
    require(gamma_rows == q, "gamma rows");
    require(t_rows == q, "transform rows");
    require(tinv_rows == q, "transform_inv rows");

    BasisSpec spec;
    if (kind == "fourier") {
        if (!knots.empty()) throw ParseError(path + ": fourier basis cannot carry knots");
        spec = BasisSpec::fourier(q);
    } else if (knots.empty()) {
        spec = BasisSpec::bspline(q, order);
    } else {
        spec = BasisSpec::bspline_with_knots(std::move(knots), order);
        if (spec.q != q)
            throw ParseError(path + ": basis_q inconsistent with knot count and order");
    }

    ModelParams params;
    params.clusters.alpha = std::move(alpha);
    params.cov.gamma = std::move(gamma);
    params.cov.sigma2 = sigma2;
    params.mrf.theta = theta;
    params.mrf.n_clusters = C;
    params.mrf.allow_negative_theta = theta < 0.0;
    params.basis = spec;
    params.transform.T = std::move(T);
    params.transform.T_inv = std::move(T_inv);
    params.validate();
    return params;
}

}  // namespace sfclust::io
