#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsspec/inverse.hpp"
#include "tsspec/propagation.hpp"
#include "tsspec/spectral.hpp"
#include "tsspec/timescale.hpp"

namespace tss::cli {

using nlohmann::json;

struct ProblemOptions {
    std::optional<double> lambda_max;
    std::optional<std::size_t> n_max;
    std::optional<double> tolerance;
    std::optional<Backend> backend;
};

struct Problem {
    TimeScale ts;
    Potential q;
    ProblemOptions options;
};

/// Problem file:
///   { "intervals": [[a, b], ...],
///     "potential": { "isolated": { "<l>": "p/q", ... },
///                    "segments": [ { "kind": "constant|polynomial|samples", "data": ... } ] },
///     "options": { "lambda_max", "n_max", "tolerance", "backend" } }
/// Unknown keys are rejected.  Throws ParseError and the validation errors.
Problem parse_problem(const json& doc);
Problem parse_problem_text(const std::string& text);

/// Spectral data for `inverse`: either a bare data object
///   { "intervals", "kind", "strict", "spectrum0", "spectrum1", "weights", "weyl" }
/// or a forward report whose result carries such an object under "spectral_data".
/// `geometry` is used when the data carry no intervals.
struct SpectralFile {
    TimeScale ts;
    SpectralInput input;
};
SpectralFile parse_spectral_data(const json& doc, const std::optional<TimeScale>& geometry);

/// Exact value from a JSON string or integer; decimals are parsed from their
/// shortest round-trip text.
Rational json_rational(const json& v, const std::string& where);

json poly_json(const PolyRat& p);
PolyRat poly_from_json(const json& v, const std::string& where);
/// Rationals as "p/q" strings.
json rational_json(const Rational& r);
/// 17 significant digits.
json number_json(double x);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

struct CommandOptions {
    std::optional<int> j;
    std::optional<std::size_t> n_max;
    std::optional<double> lambda_max;
    std::optional<Backend> backend;
    unsigned jobs = 1;
    double tolerance = 1e-12;
    std::optional<std::string> grid;  ///< "lo:hi:count"
    std::vector<std::string> at;      ///< "x" or "x,y"
    std::string n_range = "1:30";
    std::optional<std::string> kind;
    bool strict = false;
};

json cmd_forward(const Problem& p, const CommandOptions& o);
json cmd_spectrum(const Problem& p, const CommandOptions& o);
json cmd_weights(const Problem& p, const CommandOptions& o);
json cmd_weyl(const Problem& p, const CommandOptions& o);
json cmd_inverse(const SpectralFile& data, const CommandOptions& o);
/// Fills `csv` with the residual table.
json cmd_asymptotics(const Problem& p, const CommandOptions& o, std::string* csv);
json cmd_roundtrip(const Problem& p, const CommandOptions& o);

/// Full command line (args[0] is the program name).  Writes the report to
/// `out` (or --out), errors as JSON to `err`.  Returns 0, 2 (validation)
/// or 3 (computation).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tss::cli
