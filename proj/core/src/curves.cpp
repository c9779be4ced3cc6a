#include "sfclust/curves.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "sfclust/csv.hpp"
#include "sfclust/errors.hpp"

namespace sfclust {

namespace {

constexpr std::array<int, 13> kDaysInMonth = {0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
// cumulative days before each month, non-leap
constexpr std::array<int, 13> kCumDays = {0, 0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};

}  // namespace

bool Date::is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

bool Date::valid() const {
    if (month < 1 || month > 12 || day < 1) return false;
    int dim = kDaysInMonth[static_cast<std::size_t>(month)];
    if (month == 2 && is_leap(year)) dim = 29;
    return day <= dim;
}

int Date::day_of_year365() const {
    if (month == 2 && day == 29) return 0;
    return kCumDays[static_cast<std::size_t>(month)] + day;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::optional<Date> parse_iso_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i == 4 || i == 7) continue;
        if (text[i] < '0' || text[i] > '9') return std::nullopt;
    }
    Date d;
    d.year = std::stoi(text.substr(0, 4));
    d.month = std::stoi(text.substr(5, 2));
    d.day = std::stoi(text.substr(8, 2));
    if (!d.valid()) return std::nullopt;
    return d;
}

int SiteRecord::first_year() const {
    return observations.empty() ? 0 : observations.front().date.year;
}

int SiteRecord::last_year() const {
    return observations.empty() ? 0 : observations.back().date.year;
}

RecordMap ingest_records(const std::vector<RawObservation>& rows) {
    RecordMap map;
    for (const auto& row : rows) {
        if (row.site_id.empty()) throw ValidationError("observation with empty site_id");
        if (!row.date.valid())
            throw ValidationError("site " + row.site_id + ": invalid date");
        if (!row.missing && !(std::isfinite(row.value)))
            throw ValidationError("site " + row.site_id + " " + row.date.iso() +
                                  ": non-finite value");
        auto& rec = map[row.site_id];
        rec.site_id = row.site_id;
        rec.observations.push_back({row.date, row.value, row.missing});
    }
    for (auto& [id, rec] : map) {
        std::sort(rec.observations.begin(), rec.observations.end(),
                  [](const SiteRecord::Obs& a, const SiteRecord::Obs& b) {
                      return a.date.key() < b.date.key();
                  });
        for (std::size_t j = 1; j < rec.observations.size(); ++j) {
            if (rec.observations[j].date.key() == rec.observations[j - 1].date.key())
                throw ValidationError("site " + id + ": duplicate observation for " +
                                      rec.observations[j].date.iso());
        }
    }
    return map;
}

namespace {

// year -> number of distinct non-missing days on the 365 grid
std::unordered_map<int, int> present_days_per_year(const SiteRecord& rec) {
    std::unordered_map<int, int> present;
    for (const auto& o : rec.observations) {
        if (o.missing) continue;
        if (o.date.day_of_year365() == 0) continue;  // Feb 29
        ++present[o.date.year];
    }
    return present;
}

}  // namespace

RecordMap filter_complete_sites(const RecordMap& records, int min_complete_years,
                                int max_missing_days_per_year, FilterReport* report) {
    if (min_complete_years < 0 || max_missing_days_per_year < 0)
        throw ConfigError("completeness thresholds must be non-negative");
    RecordMap out;
    FilterReport rep;
    rep.n_input = records.size();
    for (const auto& [id, rec] : records) {
        const auto present = present_days_per_year(rec);
        int complete = 0;
        for (const auto& [year, days] : present) {
            if (365 - days <= max_missing_days_per_year) ++complete;
        }
        if (complete >= min_complete_years) {
            out.emplace(id, rec);
        } else {
            rep.dropped.push_back(id);
        }
    }
    rep.n_retained = out.size();
    std::sort(rep.dropped.begin(), rep.dropped.end());
    if (report) *report = std::move(rep);
    return out;
}

AnnualCurve aggregate_mean_daily(const SiteRecord& record, int year_start, int year_end) {
    if (year_start > year_end)
        throw ConfigError("aggregate: year_start > year_end");
    std::array<double, 366> sum{};
    std::array<int, 366> count{};
    std::unordered_set<int> years;
    for (const auto& o : record.observations) {
        if (o.date.year < year_start || o.date.year > year_end) continue;
        if (o.missing) continue;
        const int d = o.date.day_of_year365();
        if (d == 0) continue;  // Feb 29 dropped
        sum[static_cast<std::size_t>(d)] += o.value;
        count[static_cast<std::size_t>(d)] += 1;
        years.insert(o.date.year);
    }
    std::string gaps;
    int n_gaps = 0;
    for (int d = 1; d <= 365; ++d) {
        if (count[static_cast<std::size_t>(d)] == 0) {
            if (n_gaps < 5) gaps += (n_gaps ? ", " : "") + std::to_string(d);
            ++n_gaps;
        }
    }
    if (n_gaps > 0)
        throw ValidationError("site " + record.site_id + ": no value in " +
                              std::to_string(year_start) + ".." + std::to_string(year_end) +
                              " for " + std::to_string(n_gaps) + " day(s) of year: " + gaps +
                              (n_gaps > 5 ? ", ..." : ""));
    AnnualCurve curve;
    curve.site_id = record.site_id;
    curve.times.resize(365);
    curve.values.resize(365);
    for (int d = 1; d <= 365; ++d) {
        curve.times[d - 1] = (d - 0.5) / 365.0;
        curve.values[d - 1] = sum[static_cast<std::size_t>(d)] / count[static_cast<std::size_t>(d)];
    }
    curve.years_used = static_cast<int>(years.size());
    return curve;
}

MissingStats missing_stats(const RecordMap& records) {
    MissingStats stats;
    for (const auto& [id, rec] : records) {
        if (rec.observations.empty()) continue;
        const auto present = present_days_per_year(rec);
        const long long span = rec.last_year() - rec.first_year() + 1;
        long long observed = 0;
        for (const auto& [year, days] : present) observed += days;
        stats.expected_days += 365 * span;
        stats.missing_days += 365 * span - observed;
    }
    return stats;
}

std::vector<RawObservation> read_observations_csv(std::istream& in, const std::string& name,
                                                  bool allow_negative) {
    const auto rows = csv::read_table(in, name);
    if (rows.empty()) throw ParseError(name + ": empty file (header required)");
    csv::require_header(rows[0], {"site_id", "date", "value"}, name);
    std::vector<RawObservation> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = name + ": line " + std::to_string(row.line_no);
        if (row.fields.size() != 3) throw ParseError(where + ": expected 3 fields");
        RawObservation obs;
        obs.site_id = row.fields[0];
        if (obs.site_id.empty()) throw ParseError(where + ": empty site_id");
        const auto date = parse_iso_date(row.fields[1]);
        if (!date) throw ParseError(where + ": bad date '" + row.fields[1] + "'");
        obs.date = *date;
        if (row.fields[2].empty()) {
            obs.missing = true;
        } else {
            try {
                std::size_t used = 0;
                obs.value = std::stod(row.fields[2], &used);
                if (used != row.fields[2].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError(where + ": bad value '" + row.fields[2] + "'");
            }
            if (!std::isfinite(obs.value)) throw ParseError(where + ": non-finite value");
            if (obs.value < 0.0 && !allow_negative)
                throw ParseError(where + ": negative value '" + row.fields[2] + "'");
        }
        out.push_back(std::move(obs));
    }
    return out;
}

std::vector<SiteGeometry> read_geometry_csv(std::istream& in, const std::string& name) {
    const auto rows = csv::read_table(in, name);
    if (rows.empty()) throw ParseError(name + ": empty file (header required)");
    csv::require_header(rows[0], {"site_id", "lat", "lon", "elev_m"}, name);
    std::vector<SiteGeometry> out;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = name + ": line " + std::to_string(row.line_no);
        if (row.fields.size() != 4) throw ParseError(where + ": expected 4 fields");
        SiteGeometry g;
        g.site_id = row.fields[0];
        try {
            g.latitude_deg = std::stod(row.fields[1]);
            g.longitude_deg = std::stod(row.fields[2]);
            g.elevation_m = std::stod(row.fields[3]);
        } catch (const std::exception&) {
            throw ParseError(where + ": bad numeric field");
        }
        if (!seen.insert(g.site_id).second)
            throw ValidationError(where + ": duplicate site_id " + g.site_id);
        g.validate();
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(),
              [](const SiteGeometry& a, const SiteGeometry& b) { return a.site_id < b.site_id; });
    return out;
}

}  // namespace sfclust
