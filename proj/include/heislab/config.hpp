/**
 * @file config.hpp
 * @brief INI-style run configuration shared by the command-line tools.
 *
 * Sections and keys (all optional, defaults in brackets):
 *
 *     [group]        n [1]
 *     [hamiltonian]  expr ["0"]   cutoff = box | none [box]
 *     [support]      center [0,...]   half_widths [1,...]
 *     [flow]         T [1]   dt [0.01]   levels [3]
 *     [seeds]        per_axis [5]   scale [0.8]   xbar [0]   points [""]
 *     [measure]      eps_max [0.2]   eps_min [0.01]   eps_count [8]
 *                    curve = lifted | horizontal [lifted]   point [first seed]
 *     [hofer]        a_scale [1.2]   cells [0 = 64, 16 or 8 by n]   fault_scale [1]
 *     [output]       dir ["out"]
 *     [run]          seed [1]   threads [0 = HEISLAB_THREADS or all cores]
 *                    dt_scale [1]
 *
 * Vectors are comma separated; `points` separates points with ';'. String
 * values may be wrapped in double quotes. Overrides use "section.key=value".
 */
#pragma once

#include "heislab/box.hpp"
#include "heislab/errors.hpp"
#include "heislab/flows.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace heis {

/// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : Error(field + ": " + message), field(field) {}
    std::string field;
};

struct RunConfig {
    int n = 1;
    std::string hamiltonian = "0";
    Cutoff cutoff = Cutoff::Box;
    Box support = Box::cube(2, 0.0, 1.0);

    double T = 1.0;
    double dt = 0.01;
    int dt_levels = 3;

    int seeds_per_axis = 5;
    double seeds_scale = 0.8;
    double seeds_xbar = 0.0;
    std::vector<Vec> seed_points;

    double eps_max = 0.2;
    double eps_min = 0.01;
    int eps_count = 8;
    std::string measure_curve = "lifted";
    Vec measure_point;

    double a_scale = 1.2;
    int hofer_cells = 0;
    double fault_scale = 1.0;

    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;
    double dt_scale = 1.0;

    std::vector<double> eps_range() const;
    std::vector<HeisPoint> seeds() const;
    Box hofer_box() const;
    GridSpec hofer_grid() const;
    /// Parses and compiles the Hamiltonian (dsl::ParseError on bad input).
    HamiltonianField field() const;
};

/// "section.key=value" pairs applied on top of the file.
using Overrides = std::vector<std::string>;

/// Parses, applies overrides and validates. Throws ConfigError.
RunConfig parse_config(std::istream& in, const Overrides& overrides = {});
RunConfig load_config(const std::string& path, const Overrides& overrides = {});
/// Defaults plus overrides, for runs without a file.
RunConfig default_config(const Overrides& overrides = {});

/// Checks every invariant; throws ConfigError naming the field.
void validate(const RunConfig& cfg);

/// Writes the effective configuration back in the same format.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace heis
