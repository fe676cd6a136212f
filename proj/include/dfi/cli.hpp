#pragma once

/// \file cli.hpp
/// \brief Run configuration, the domain registry and the command implementations behind the
/// `dfindex` executable.  Every command returns a Report; nothing here writes to disk.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfi/dfindex.hpp"
#include "dfi/expr.hpp"

namespace dfi::cli {

inline constexpr const char* kSchema = "dfindex/1";

struct RunConfig {
    nlohmann::json domain = {{"key", "worm"}, {"gamma", 3.141592653589793}};
    nlohmann::json metric = "euclidean";  ///< "euclidean" | "worm_kahler" | {"key": "user", "entries": ...}
    nlohmann::json basis = {{"kind", "auto"}};
    std::uint64_t seed = 1;
    int samples = 200;
    int special_points = 64;
    std::string sampling = "boundary";  ///< "boundary" or "special"
    double eta = 0.4;
    double eps_null = kEpsNull;
    double tol_eta = 0.01;
    double c_floor = kCFloor;
    double site_cutoff = kSiteCutoff;
    std::vector<double> collar_depths = {1e-4, 1e-3, 1e-2};

    /// Full echo, including values filled in while resolving the problem.
    nlohmann::json to_json() const;
};

/// Unknown fields, wrong types and non-positive tolerances raise ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; JSON syntax errors report line and column.
RunConfig load_config(const std::string& path);

std::vector<std::string> registry_keys();

struct Problem {
    DomainSpec domain;
    std::optional<WormParams> worm;
    HBasis basis;
};

/// Builds domain, metric and basis; writes resolved parameters (worm t, lambda, metric s,
/// basis kind) back into cfg so reports echo them.
Problem build_problem(RunConfig& cfg);

struct Report {
    std::string command;
    nlohmann::json config;
    nlohmann::json records = nlohmann::json::array();
    nlohmann::json summary = nlohmann::json::object();
    int exit_code = 0;

    nlohmann::json to_json() const;
    /// Records flattened to columns: arrays expand to name_1.., objects to name_key, so a complex
    /// number {re, im} becomes name_re, name_im.  Null cells stay empty.
    std::string to_csv() const;
};

Report cmd_forms(RunConfig cfg);
Report cmd_levi(RunConfig cfg);
Report cmd_check(RunConfig cfg);
Report cmd_estimate(RunConfig cfg);
Report cmd_worm_bench(RunConfig cfg);
Report cmd_selftest(RunConfig cfg);

/// Engine values against the closed forms on the annulus for Z = d/dz2 under the adapted metric.
struct ClosedFormErrors {
    double x = 0.0;
    double alpha = 0.0, curvature = 0.0, sff_jnu_sq = 0.0, margin = 0.0;  ///< relative
    double sff_zz = 0.0;                                                   ///< absolute, the closed form is 0
    double max() const;
};
/// `domain` must carry the adapted metric of `params`.
ClosedFormErrors closed_form_errors(const DomainSpec& domain, const WormParams& params, const CVec& z, double eta);

}  // namespace dfi::cli
