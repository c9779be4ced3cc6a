#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfclust/basis.hpp"
#include "sfclust/fit.hpp"
#include "sfclust/graph.hpp"
#include "sfclust/mrf.hpp"
#include "sfclust/simulate.hpp"

namespace sfclust {

/// Flat `key = value` run configuration. Every key must be in the built-in
/// registry (unknown keys are rejected); unset keys fall back to registered
/// defaults. Values are kept as strings and parsed by the typed getters.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_stream(std::istream& in, const std::string& name);

    /// Sets one key, rejecting unknown names. Used for CLI overrides.
    void set(const std::string& key, const std::string& value);

    /// True if the key was explicitly set (not just defaulted).
    bool is_set(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t get_uint64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::pair<double, double> get_pair(const std::string& key) const;

    /// FNV-1a hash of the effective configuration (defaults merged with
    /// explicit settings), for output provenance headers.
    std::uint64_t hash() const;

    BasisSpec basis_spec() const;
    WeightScheme weight_scheme() const;
    FitConfig fit_config() const;
    SimSpec sim_spec() const;

    /// All registry keys with their effective values, sorted by key.
    std::vector<std::pair<std::string, std::string>> effective() const;

private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace sfclust
