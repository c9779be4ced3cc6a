#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfclust/types.hpp"

namespace sfclust {

/// Calendar date. Feb 29 is valid input but is dropped before aggregation so
/// every annual curve lives on the fixed 365-day grid.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    bool valid() const;

    /// Day-of-year on the 365-day grid: Mar 1 is day 60 in leap and non-leap
    /// years alike. Returns 0 for Feb 29.
    int day_of_year365() const;

    /// Sort/dedup key.
    long key() const { return year * 10000L + month * 100L + day; }

    std::string iso() const;

    static bool is_leap(int year);
};

/// Parses "YYYY-MM-DD". Returns nullopt on malformed input.
std::optional<Date> parse_iso_date(const std::string& text);

/// One raw daily record.
struct RawObservation {
    std::string site_id;
    Date date;
    double value = 0.0;  // mm/day, finite and >= 0 when not missing
    bool missing = false;
};

/// All records of one site, sorted by date (unique dates).
struct SiteRecord {
    struct Obs {
        Date date;
        double value;
        bool missing;
    };
    std::string site_id;
    std::vector<Obs> observations;

    int first_year() const;
    int last_year() const;
};

/// Sites keyed (and therefore ordered) by site_id.
using RecordMap = std::map<std::string, SiteRecord>;

/// Groups raw rows by site and sorts each site by date.
/// Throws ValidationError on a duplicated (site, date) pair, naming both.
RecordMap ingest_records(const std::vector<RawObservation>& rows);

struct FilterReport {
    std::size_t n_input = 0;
    std::size_t n_retained = 0;
    std::vector<std::string> dropped;
};

/// Keeps only sites with at least `min_complete_years` calendar years whose
/// missing-day count does not exceed `max_missing_days_per_year`. A day is
/// missing if it has no record or a record flagged missing; Feb 29 never
/// counts. Raising `min_complete_years` can only shrink the result.
RecordMap filter_complete_sites(const RecordMap& records, int min_complete_years = 50,
                                int max_missing_days_per_year = 0,
                                FilterReport* report = nullptr);

/// Mean annual curve over calendar years [year_start, year_end]: for each
/// day-of-year d in 1..365 the mean of the non-missing values observed at d.
/// Throws ValidationError when some day has no value in the whole range.
AnnualCurve aggregate_mean_daily(const SiteRecord& record, int year_start, int year_end);

struct MissingStats {
    long long missing_days = 0;
    long long expected_days = 0;  // 365 x (years spanned), summed over sites

    double fraction() const {
        return expected_days > 0 ? static_cast<double>(missing_days) / static_cast<double>(expected_days)
                                 : 0.0;
    }
};

/// Missing-day statistics over each site's spanned years (Feb 29 excluded).
MissingStats missing_stats(const RecordMap& records);

/// Reads the raw observation CSV `site_id,date,value` (ISO dates; empty value
/// field = missing). Negative values are rejected unless `allow_negative`.
std::vector<RawObservation> read_observations_csv(std::istream& in, const std::string& name,
                                                  bool allow_negative = false);

/// Reads the geometry CSV `site_id,lat,lon,elev_m`.
std::vector<SiteGeometry> read_geometry_csv(std::istream& in, const std::string& name);

}  // namespace sfclust
