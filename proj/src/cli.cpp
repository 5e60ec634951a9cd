#include "tsspec/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "tsspec/asymptotics.hpp"
#include "tsspec/errors.hpp"

namespace tss::cli {

namespace {

const Rational kRootWidth(1, 1000000000000000LL);

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object())
        throw ParseError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!ok.count(item.key()))
            throw ParseError("unknown field '" + item.key() + "' in " + where);
}

json parse_json_text(const std::string& text, const std::string& name)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Backend parse_backend(const std::string& s)
{
    if (s == "exact")
        return Backend::Exact;
    if (s == "numeric")
        return Backend::Numeric;
    throw ParseError("backend must be 'exact' or 'numeric', got '" + s + "'");
}

const char* backend_name(Backend b) { return b == Backend::Exact ? "exact" : "numeric"; }

/// Spectral numbers: exact for "p/q" strings and integers, otherwise a double.
struct DataNumber {
    std::optional<Rational> exact;
    double value = 0.0;
};

DataNumber data_number(const json& v, const std::string& where)
{
    DataNumber out;
    if (v.is_number_integer() || (v.is_string() && v.get<std::string>().find_first_of(".eE") == std::string::npos)) {
        out.exact = json_rational(v, where);
        out.value = to_double(*out.exact);
    } else if (v.is_number() || v.is_string()) {
        out.value = to_double(json_rational(v, where));
    } else {
        throw ParseError(where + " must be a number or a rational string");
    }
    return out;
}

Spectrum spectrum_from_json(const json& v, int j, bool strict, const std::string& where)
{
    Spectrum s;
    s.j = j;
    const json* values = &v;
    if (v.is_object()) {
        reject_unknown(v, {"j", "values", "defining", "exact", "complete", "lambda_max", "labels"}, where);
        if (v.contains("defining")) {
            PolyRat p = poly_from_json(v["defining"], where + ".defining");
            s.roots = isolate_real_roots(p, kRootWidth);
            for (const auto& r : s.roots)
                s.values.push_back(r.value);
            s.defining = p;
            if (v.contains("values") && v["values"].size() != s.values.size())
                throw LengthMismatch(where + ": " + std::to_string(v["values"].size()) + " values but the defining "
                                     "polynomial has " + std::to_string(s.values.size()) + " real roots");
            s.labels.assign(s.values.size(), BranchLabel{});
            return s;
        }
        if (!v.contains("values"))
            throw ParseError(where + " needs 'values' or 'defining'");
        values = &v["values"];
    }
    if (!values->is_array())
        throw ParseError(where + " must be an array");
    bool all_exact = true;
    std::vector<Rational> exact;
    for (std::size_t i = 0; i < values->size(); ++i) {
        DataNumber n = data_number((*values)[i], where + "[" + std::to_string(i) + "]");
        s.values.push_back(n.value);
        if (n.exact)
            exact.push_back(*n.exact);
        else
            all_exact = false;
    }
    if (strict && !all_exact)
        throw NotExact(where + " contains decimal values");
    if (all_exact) {
        PolyRat p{Rational(1)};
        for (const auto& r : exact) {
            s.roots.push_back(IsolatedRoot{r, r, to_double(r)});
            p *= PolyRat{Rational(-r), Rational(1)};
        }
        s.defining = p;
    }
    s.labels.assign(s.values.size(), BranchLabel{});
    return s;
}

WeightNumbers weights_from_json(const json& v, bool strict, const std::string& where)
{
    WeightNumbers w;
    const json* values = &v;
    if (v.is_object()) {
        reject_unknown(v, {"values", "residue"}, where);
        if (v.contains("residue"))
            w.residue = poly_from_json(v["residue"], where + ".residue");
        if (!v.contains("values"))
            throw ParseError(where + " needs 'values'");
        values = &v["values"];
    }
    if (!values->is_array())
        throw ParseError(where + " must be an array");
    for (std::size_t i = 0; i < values->size(); ++i) {
        DataNumber n = data_number((*values)[i], where + "[" + std::to_string(i) + "]");
        if (strict && !n.exact && !w.residue)
            throw NotExact(where + " contains decimal values");
        w.values.push_back(n.value);
        w.exact.push_back(n.exact);
    }
    w.labels.assign(w.values.size(), BranchLabel{});
    return w;
}

std::vector<Interval> intervals_from_json(const json& v)
{
    if (!v.is_array())
        throw ParseError("'intervals' must be an array of [a, b] pairs");
    std::vector<Interval> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const json& pair = v[i];
        std::string where = "intervals[" + std::to_string(i) + "]";
        if (!pair.is_array() || pair.size() != 2)
            throw ParseError(where + " must be a pair [a, b]");
        out.push_back(Interval{json_rational(pair[0], where), json_rational(pair[1], where)});
    }
    return out;
}

json intervals_json(const TimeScale& ts)
{
    json out = json::array();
    for (const auto& iv : ts.intervals())
        out.push_back(json::array({rational_json(iv.a), rational_json(iv.b)}));
    return out;
}

json complex_json(Complex z)
{
    if (z.imag() == 0.0)
        return number_json(z.real());
    return json::array({number_json(z.real()), number_json(z.imag())});
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':'))
        parts.push_back(item);
    if (parts.size() != 3)
        throw ParseError("grid must be lo:hi:count, got '" + text + "'");
    double lo = to_double(parse_rational(parts[0])), hi = to_double(parse_rational(parts[1]));
    long count = std::strtol(parts[2].c_str(), nullptr, 10);
    if (count < 1 || hi < lo)
        throw ParseError("grid needs lo <= hi and count >= 1");
    std::vector<double> out;
    for (long i = 0; i < count; ++i)
        out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

std::pair<std::size_t, std::size_t> parse_n_range(const std::string& text)
{
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ParseError("n-range must be lo:hi");
    long lo = std::strtol(text.substr(0, colon).c_str(), nullptr, 10);
    long hi = std::strtol(text.substr(colon + 1).c_str(), nullptr, 10);
    if (lo < 1 || hi < lo)
        throw ParseError("n-range needs 1 <= lo <= hi");
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

Complex parse_point(const std::string& text)
{
    auto comma = text.find(',');
    if (comma == std::string::npos)
        return Complex(to_double(parse_rational(text)), 0.0);
    return Complex(to_double(parse_rational(text.substr(0, comma))), to_double(parse_rational(text.substr(comma + 1))));
}

std::vector<Complex> sample_points(const CommandOptions& o)
{
    std::vector<Complex> pts;
    if (o.grid)
        for (double x : parse_grid(*o.grid))
            pts.emplace_back(x, 0.0);
    for (const auto& a : o.at)
        pts.push_back(parse_point(a));
    return pts;
}

Backend resolve_backend(const Problem& p, const CommandOptions& o)
{
    Backend b = o.backend.value_or(p.options.backend.value_or(p.ts.n_segments() == 0 ? Backend::Exact
                                                                                     : Backend::Numeric));
    if (b == Backend::Exact && p.ts.n_segments() > 0)
        throw BackendMismatch("the exact backend needs a purely discrete scale (N = 0)");
    return b;
}

SearchOptions search_options(const Problem& p, const CommandOptions& o)
{
    SearchOptions s;
    if (auto lm = o.lambda_max ? o.lambda_max : p.options.lambda_max)
        s.lambda_max = *lm;
    s.n_max = o.n_max.value_or(p.options.n_max.value_or(0));
    s.jobs = o.jobs;
    s.tolerance = p.options.tolerance.value_or(o.tolerance);
    return s;
}

json options_json(const Problem& p, const CommandOptions& o)
{
    json out;
    SearchOptions s = search_options(p, o);
    out["backend"] = backend_name(resolve_backend(p, o));
    out["lambda_max"] = number_json(s.lambda_max);
    out["n_max"] = s.n_max;
    out["tolerance"] = number_json(s.tolerance);
    if (o.j)
        out["j"] = *o.j;
    return out;
}

json scale_json(const TimeScale& ts)
{
    json out;
    out["intervals"] = intervals_json(ts);
    out["N"] = ts.n_segments();
    out["M"] = ts.n_isolated();
    out["mu0"] = ts.mu0() ? 1 : 0;
    out["mu1"] = ts.mu1() ? 1 : 0;
    json gaps = json::array();
    for (std::size_t l = 1; l < ts.size(); ++l)
        gaps.push_back(rational_json(ts.gap(l)));
    out["gaps"] = gaps;
    json d = json::array();
    for (const auto& x : ts.segment_lengths())
        d.push_back(rational_json(x));
    out["segment_lengths"] = d;
    json core = json::array();
    for (const auto& iv : core_domain(ts))
        core.push_back(json::array({rational_json(iv.a), rational_json(iv.b)}));
    out["core_domain"] = core;
    return out;
}

json label_json(const BranchLabel& l)
{
    if (l.bounded)
        return json{{"part", "bounded"}};
    return json{{"k", l.k}, {"n", l.n}};
}

json spectrum_json(const Spectrum& s, bool with_labels)
{
    json out;
    out["j"] = s.j;
    json values = json::array();
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (i < s.roots.size() && s.roots[i].is_exact())
            values.push_back(rational_json(s.roots[i].lo));
        else
            values.push_back(number_json(s.values[i]));
    }
    out["values"] = values;
    if (s.defining) {
        out["defining"] = poly_json(*s.defining);
        json brackets = json::array();
        for (const auto& r : s.roots)
            brackets.push_back(json::array({rational_json(r.lo), rational_json(r.hi)}));
        out["exact"] = brackets;
    } else {
        out["complete"] = s.complete;
        out["lambda_max"] = number_json(s.lambda_max);
    }
    if (with_labels) {
        json labels = json::array();
        for (const auto& l : s.labels)
            labels.push_back(label_json(l));
        out["labels"] = labels;
    }
    return out;
}

json weights_json(const WeightNumbers& w)
{
    json out;
    json values = json::array();
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (i < w.exact.size() && w.exact[i])
            values.push_back(rational_json(*w.exact[i]));
        else
            values.push_back(number_json(w.values[i]));
    }
    out["values"] = values;
    if (w.residue)
        out["residue"] = poly_json(*w.residue);
    return out;
}

json check_json(const CheckReport& r)
{
    json out;
    out["pass"] = r.pass;
    out["measure"] = number_json(r.measure);
    json values = json::array();
    for (double v : r.values)
        values.push_back(number_json(v));
    out["values"] = values;
    out["violations"] = r.violations;
    return out;
}

Spectrum compute_spectrum(const Problem& p, const CommandOptions& o, int j)
{
    Backend b = resolve_backend(p, o);
    SearchOptions s = search_options(p, o);
    Spectrum sp = b == Backend::Numeric ? find_spectrum_numeric(p.ts, p.q, j, s) : find_spectrum(p.ts, p.q, j, s);
    if (p.ts.n_segments() > 0)
        label_branches(sp, p.ts, p.q);
    return sp;
}

json label_report_json(const LabelReport& r)
{
    json out;
    out["bounded"] = r.bounded;
    json counts = json::array();
    for (std::size_t k = 0; k < r.counts.size(); ++k)
        counts.push_back(json{{"k", k + 1}, {"assigned", r.counts[k].first}, {"predicted", r.counts[k].second}});
    out["branches"] = counts;
    out["mismatches"] = r.mismatches;
    return out;
}

int exit_code_for(const Error& e) { return e.is_validation() ? 2 : 3; }

void write_error(std::ostream& err, const std::string& kind, const std::string& message, int code)
{
    json e;
    e["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    err << e.dump() << '\n';
}

} // namespace

// ---------------------------------------------------------------------------
// JSON helpers

Rational json_rational(const json& v, const std::string& where)
{
    try {
        if (v.is_string())
            return parse_rational(v.get<std::string>());
        if (v.is_number())
            return parse_rational(v.dump());
    } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
    }
    throw ParseError(where + " must be a number or a rational string");
}

json poly_json(const PolyRat& p)
{
    json out = json::array();
    for (const auto& c : p.coefficients())
        out.push_back(rational_json(c));
    return out;
}

PolyRat poly_from_json(const json& v, const std::string& where)
{
    if (!v.is_array())
        throw ParseError(where + " must be an array of ascending coefficients");
    std::vector<Rational> c;
    for (std::size_t i = 0; i < v.size(); ++i)
        c.push_back(json_rational(v[i], where + "[" + std::to_string(i) + "]"));
    return PolyRat(c);
}

json rational_json(const Rational& r) { return to_string(r); }

json number_json(double x)
{
    if (!std::isfinite(x))
        return nullptr;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return json::parse(buf);
}

std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// input files

Problem parse_problem(const json& doc)
{
    reject_unknown(doc, {"intervals", "potential", "options"}, "problem");
    if (!doc.contains("intervals"))
        throw ParseError("problem needs 'intervals'");
    TimeScale ts = validate_timescale(intervals_from_json(doc["intervals"]));

    Potential q;
    if (doc.contains("potential"))
        reject_unknown(doc["potential"], {"isolated", "segments"}, "potential");
    const json pot = doc.value("potential", json::object());
    if (pot.contains("isolated")) {
        const json& iso = pot["isolated"];
        if (!iso.is_object())
            throw ParseError("potential.isolated must map interval indices to values");
        for (const auto& item : iso.items()) {
            char* end = nullptr;
            long l = std::strtol(item.key().c_str(), &end, 10);
            if (*end != '\0' || l < 1)
                throw ParseError("potential.isolated key '" + item.key() + "' is not an interval index");
            q.isolated[static_cast<std::size_t>(l)] = json_rational(item.value(), "potential.isolated." + item.key());
        }
    }
    if (pot.contains("segments")) {
        const json& segs = pot["segments"];
        if (!segs.is_array())
            throw ParseError("potential.segments must be an array");
        for (std::size_t k = 0; k < segs.size(); ++k) {
            std::string where = "potential.segments[" + std::to_string(k) + "]";
            reject_unknown(segs[k], {"kind", "data"}, where);
            std::string kind = segs[k].value("kind", "");
            const json data = segs[k].value("data", json());
            auto list = [&]() {
                if (!data.is_array())
                    throw ParseError(where + ".data must be an array");
                std::vector<Rational> v;
                for (std::size_t i = 0; i < data.size(); ++i)
                    v.push_back(json_rational(data[i], where + ".data[" + std::to_string(i) + "]"));
                return v;
            };
            if (kind == "constant")
                q.segments.push_back(
                    SegmentProfile::constant(json_rational(data.is_array() && data.size() == 1 ? data[0] : data,
                                                           where + ".data")));
            else if (kind == "polynomial")
                q.segments.push_back(SegmentProfile::polynomial(list()));
            else if (kind == "samples")
                q.segments.push_back(SegmentProfile::samples(list()));
            else
                throw ParseError(where + ".kind must be constant, polynomial or samples");
        }
    }
    validate_potential(ts, q);

    ProblemOptions opts;
    if (doc.contains("options")) {
        const json& o = doc["options"];
        reject_unknown(o, {"lambda_max", "n_max", "tolerance", "backend"}, "options");
        if (o.contains("lambda_max"))
            opts.lambda_max = to_double(json_rational(o["lambda_max"], "options.lambda_max"));
        if (o.contains("n_max")) {
            if (!o["n_max"].is_number_unsigned())
                throw ParseError("options.n_max must be a non-negative integer");
            opts.n_max = o["n_max"].get<std::size_t>();
        }
        if (o.contains("tolerance"))
            opts.tolerance = to_double(json_rational(o["tolerance"], "options.tolerance"));
        if (o.contains("backend")) {
            if (!o["backend"].is_string())
                throw ParseError("options.backend must be a string");
            opts.backend = parse_backend(o["backend"].get<std::string>());
        }
    }
    return Problem{std::move(ts), std::move(q), opts};
}

Problem parse_problem_text(const std::string& text) { return parse_problem(parse_json_text(text, "problem")); }

SpectralFile parse_spectral_data(const json& doc, const std::optional<TimeScale>& geometry)
{
    const json* data = &doc;
    if (doc.is_object() && doc.contains("result")) {
        const json& result = doc["result"];
        if (!result.is_object() || !result.contains("spectral_data"))
            throw ParseError("report carries no spectral_data (only forward reports of discrete problems do)");
        data = &result["spectral_data"];
    }
    reject_unknown(*data, {"intervals", "kind", "strict", "spectrum0", "spectrum1", "weights", "weyl"}, "data");
    std::optional<TimeScale> ts = geometry;
    if (data->contains("intervals"))
        ts = validate_timescale(intervals_from_json((*data)["intervals"]));
    if (!ts)
        throw ParseError("spectral data need 'intervals' or a --problem geometry");

    SpectralInput in;
    in.strict = data->value("strict", false);
    in.kind = parse_input_kind(data->value("kind", std::string("two-spectra")));
    if (data->contains("spectrum0"))
        in.spectrum0 = spectrum_from_json((*data)["spectrum0"], 0, in.strict, "spectrum0");
    if (data->contains("spectrum1"))
        in.spectrum1 = spectrum_from_json((*data)["spectrum1"], 1, in.strict, "spectrum1");
    else
        in.spectrum1.j = 1;
    if (data->contains("weights"))
        in.weights = weights_from_json((*data)["weights"], in.strict, "weights");
    if (data->contains("weyl")) {
        const json& w = (*data)["weyl"];
        reject_unknown(w, {"numerator", "denominator"}, "weyl");
        if (!w.contains("numerator") || !w.contains("denominator"))
            throw ParseError("weyl needs 'numerator' and 'denominator'");
        in.weyl = WeylFunction::from_ratio(poly_from_json(w["numerator"], "weyl.numerator"),
                                           poly_from_json(w["denominator"], "weyl.denominator"));
    }
    return SpectralFile{std::move(*ts), std::move(in)};
}

// ---------------------------------------------------------------------------
// commands

json cmd_forward(const Problem& p, const CommandOptions& o)
{
    json out;
    Backend b = resolve_backend(p, o);
    out["scale"] = scale_json(p.ts);
    out["backend"] = backend_name(b);
    std::vector<Complex> pts = sample_points(o);

    if (b == Backend::Exact) {
        ExactPair pair = *characteristic_pair(p.ts, p.q).exact;
        out["theta0"] = poly_json(pair.theta0);
        out["theta1"] = poly_json(pair.theta1);
        out["theta0_text"] = pair.theta0.to_string();
        out["theta1_text"] = pair.theta1.to_string();

        auto [s0, s1] = find_spectra(p.ts, p.q);
        WeightNumbers w = weight_numbers(p.ts, p.q, s1);
        json data;
        data["intervals"] = intervals_json(p.ts);
        data["kind"] = "two-spectra";
        data["spectrum0"] = spectrum_json(s0, false);
        data["spectrum1"] = spectrum_json(s1, false);
        data["weights"] = weights_json(w);
        data["weyl"] = json{{"numerator", poly_json(Rational(-1) * pair.theta0)}, {"denominator", poly_json(pair.theta1)}};
        out["spectral_data"] = data;

        json samples = json::array();
        for (Complex z : pts)
            samples.push_back(json{{"lambda", complex_json(z)},
                                   {"theta0", complex_json(pair.theta0(z))},
                                   {"theta1", complex_json(pair.theta1(z))}});
        if (!pts.empty())
            out["samples"] = samples;
        return out;
    }

    if (pts.empty())
        for (double x : parse_grid("0:100:11"))
            pts.emplace_back(x, 0.0);
    EntireEval eval(p.ts, p.q);
    json samples = json::array();
    for (Complex z : pts) {
        auto v = eval(z);
        samples.push_back(json{{"lambda", complex_json(z)},
                               {"theta0", complex_json(z.imag() == 0.0 ? Complex(v.theta0.real()) : v.theta0)},
                               {"theta1", complex_json(z.imag() == 0.0 ? Complex(v.theta1.real()) : v.theta1)},
                               {"error", number_json(v.error)}});
    }
    out["samples"] = samples;
    return out;
}

json cmd_spectrum(const Problem& p, const CommandOptions& o)
{
    const int j = o.j.value_or(1);
    if (j != 0 && j != 1)
        throw IndexOutOfRange("j must be 0 or 1");
    json out;
    Spectrum s = compute_spectrum(p, o, j);
    out["spectrum"] = spectrum_json(s, p.ts.n_segments() > 0);
    if (p.ts.n_segments() > 0) {
        Spectrum copy = s;
        out["labeling"] = label_report_json(label_branches(copy, p.ts, p.q));
        out["bounded_part_expected"] = bounded_part_size(p.ts, j);
    }
    if (j == 1)
        out["weights"] = weights_json(weight_numbers(p.ts, p.q, s));
    return out;
}

json cmd_weights(const Problem& p, const CommandOptions& o)
{
    json out;
    Spectrum s = compute_spectrum(p, o, 1);
    WeightNumbers w = weight_numbers(p.ts, p.q, s);
    out["spectrum"] = spectrum_json(s, p.ts.n_segments() > 0);
    out["weights"] = weights_json(w);
    json norm = check_json(weight_norm_identity_check(p.ts, p.q, s, w));
    out["norm_identity"] = norm;
    return out;
}

json cmd_weyl(const Problem& p, const CommandOptions& o)
{
    json out;
    Backend b = resolve_backend(p, o);
    out["constant"] = rational_json(weyl_constant(p.ts));
    if (b == Backend::Exact) {
        ExactPair pair = *characteristic_pair(p.ts, p.q).exact;
        out["numerator"] = poly_json(Rational(-1) * pair.theta0);
        out["denominator"] = poly_json(pair.theta1);
        Spectrum s1 = find_spectrum(p.ts, p.q, 1);
        out["poles"] = spectrum_json(s1, false)["values"];
        out["residues"] = weights_json(weight_numbers(p.ts, p.q, s1));
    }
    json values = json::array();
    for (const auto& text : o.at) {
        json row;
        Complex z = parse_point(text);
        row["lambda"] = complex_json(z);
        if (b == Backend::Exact && text.find_first_of(".eE,") == std::string::npos)
            row["exact"] = rational_json(weyl_eval_exact(p.ts, p.q, parse_rational(text)));
        row["value"] = complex_json(weyl_eval(p.ts, p.q, z, search_options(p, o).tolerance));
        values.push_back(row);
    }
    if (o.grid)
        for (double x : parse_grid(*o.grid))
            values.push_back(json{{"lambda", number_json(x)},
                                  {"value", complex_json(weyl_eval(p.ts, p.q, x, search_options(p, o).tolerance))}});
    out["values"] = values;
    return out;
}

json cmd_inverse(const SpectralFile& data, const CommandOptions& o)
{
    SpectralInput in = data.input;
    if (o.kind)
        in.kind = parse_input_kind(*o.kind);
    in.strict = in.strict || o.strict;
    ExactPair pair = normalize_input(in, data.ts);
    Recovery rec = algorithm1(pair.theta0, pair.theta1, data.ts);

    json out;
    out["kind"] = to_string(in.kind);
    out["intervals"] = intervals_json(data.ts);
    out["theta0"] = poly_json(pair.theta0);
    out["theta1"] = poly_json(pair.theta1);
    json q = json::array();
    for (std::size_t m = 1; m <= rec.q.size(); ++m)
        q.push_back(json{{"index", m}, {"point", rational_json(data.ts.interval(m).a)}, {"value", rational_json(rec.q[m - 1])}});
    out["potential"] = q;
    json trace = json::array();
    for (const auto& s : rec.trace.steps)
        trace.push_back(json{{"m", s.m},
                             {"d0", poly_json(s.d0)},
                             {"d1", poly_json(s.d1)},
                             {"d0_next", poly_json(s.d0_next)},
                             {"quotient", poly_json(s.quotient)},
                             {"remainder", poly_json(s.remainder)},
                             {"d1_next", poly_json(s.d1_next)},
                             {"q", rational_json(s.q)}});
    out["trace"] = trace;
    out["verified"] = true;
    return out;
}

json cmd_asymptotics(const Problem& p, const CommandOptions& o, std::string* csv)
{
    if (p.ts.n_segments() == 0)
        throw NotSupported("asymptotics need at least one segment");
    const int j = o.j.value_or(1);
    if (j != 0 && j != 1)
        throw IndexOutOfRange("j must be 0 or 1");
    auto [n_lo, n_hi] = parse_n_range(o.n_range);

    Problem prob = p;
    CommandOptions opts = o;
    if (!opts.lambda_max && !p.options.lambda_max) {
        double top = 0.0;
        for (const auto& d : p.ts.segment_lengths())
            top = std::max(top, M_PI * static_cast<double>(n_hi + 2) / to_double(d));
        double qmax = std::abs(potential_minimum(p.ts, p.q));
        opts.lambda_max = top * top + qmax + 10.0;
    }
    Spectrum s = compute_spectrum(prob, opts, j);
    LabelReport labels = label_branches(s, p.ts, p.q);
    std::optional<WeightNumbers> w;
    if (j == 1)
        w = weight_numbers(p.ts, p.q, s);
    AsymptoticsReport rep = verify_asymptotics(s, p.ts, p.q, n_lo, n_hi, w ? &*w : nullptr);
    if (csv)
        *csv = residuals_csv(rep);

    json out;
    out["j"] = j;
    out["n_range"] = json::array({n_lo, n_hi});
    std::vector<double> d;
    for (const auto& x : p.ts.segment_lengths())
        d.push_back(to_double(x));
    try {
        Commensurability c = commensurability_check(d);
        json x = json::array();
        for (const auto& v : c.x)
            x.push_back(v.str());
        out["commensurability"] = json{{"commensurable", true}, {"r", number_json(to_double(c.r))}, {"x", x}};
    } catch (const NotCommensurable& e) {
        out["commensurability"] = json{{"commensurable", false}, {"reason", e.what()}};
    }
    out["distinct_z_over_d"] = rep.distinct;

    StructuralConstants sc(p.ts, p.q);
    json branches = json::array();
    for (const auto& b : sc.branches())
        branches.push_back(json{{"k", b.k},
                                {"l", b.l},
                                {"d", number_json(b.d)},
                                {"delta", b.delta ? 1 : 0},
                                {"shift", number_json(branch_shift(b.delta, j, b.l == 1))},
                                {"omega", number_json(b.omega)},
                                {"c", number_json(b.c)},
                                {"z", number_json(b.z)},
                                {"gamma", number_json(b.gamma)},
                                {"A", json::array({number_json(b.a[0]), number_json(b.a[1])})}});
    out["constants"] = branches;
    out["bounded_part_expected"] = bounded_part_size(p.ts, j);
    out["labeling"] = label_report_json(labels);

    json summary = json::array();
    for (const auto& b : rep.branches)
        summary.push_back(json{{"k", b.k},
                               {"count", b.count},
                               {"bottom_max", number_json(b.bottom_max)},
                               {"top_max", number_json(b.top_max)},
                               {"bounded", b.bounded},
                               {"scaled_max", number_json(b.scaled_max)},
                               {"corrected_max", number_json(b.corrected_max)},
                               {"improvement", number_json(b.improvement)}});
    out["branches"] = summary;
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back(json{{"k", r.k},
                            {"n", r.n},
                            {"computed", number_json(r.computed)},
                            {"main", number_json(r.main)},
                            {"corrected", number_json(r.corrected)},
                            {"e", number_json(r.e)},
                            {"n_e", number_json(r.scaled)},
                            {"n_e_corrected", number_json(r.scaled_corrected)}});
    out["rows"] = rows;
    if (!rep.weights.empty()) {
        json wrows = json::array();
        for (const auto& r : rep.weights)
            wrows.push_back(json{{"n", r.n},
                                 {"alpha", number_json(r.computed)},
                                 {"limit", number_json(r.limit)},
                                 {"n_diff", number_json(r.scaled)}});
        out["weights"] = json{{"rows", wrows},
                              {"bottom_max", number_json(rep.weight_bottom_max)},
                              {"top_max", number_json(rep.weight_top_max)},
                              {"bounded", rep.weights_bounded}};
    }
    out["notes"] = rep.notes;
    return out;
}

json cmd_roundtrip(const Problem& p, const CommandOptions& o)
{
    std::vector<InputKind> kinds;
    if (o.kind)
        kinds.push_back(parse_input_kind(*o.kind));
    else
        kinds = {InputKind::WeylFunction, InputKind::TwoSpectra, InputKind::SpectrumPlusWeights};
    json out;
    json cases = json::array();
    bool all = true;
    for (InputKind k : kinds) {
        RoundtripReport r = roundtrip_check(p.ts, p.q, k);
        json rec = json::array(), orig = json::array();
        for (const auto& v : r.recovered)
            rec.push_back(rational_json(v));
        for (const auto& v : r.original)
            orig.push_back(rational_json(v));
        json c{{"kind", to_string(k)}, {"pass", r.pass}, {"original", orig}, {"recovered", rec}};
        if (!r.error.empty())
            c["error"] = r.error;
        cases.push_back(c);
        all = all && r.pass;
    }
    out["cases"] = cases;
    out["pass"] = all;
    return out;
}

// ---------------------------------------------------------------------------
// driver

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Spectral toolkit for Sturm-Liouville operators on time scales"};
    app.require_subcommand(1, 1);

    std::string problem_path, data_path, out_path, csv_path, backend, j_text, n_max_text, lambda_max_text;
    CommandOptions o;
    auto add_common = [&](CLI::App* sub, bool needs_problem) {
        auto* opt = sub->add_option("--problem", problem_path, "problem file (JSON)");
        if (needs_problem)
            opt->required();
        sub->add_option("--j", j_text, "boundary condition index 0|1");
        sub->add_option("--n-max", n_max_text, "number of eigenvalues to compute");
        sub->add_option("--lambda-max", lambda_max_text, "upper end of the search window");
        sub->add_option("--backend", backend, "exact|numeric");
        sub->add_option("--jobs", o.jobs, "worker threads");
        sub->add_option("--out", out_path, "write the report here instead of stdout");
        sub->add_option("--csv", csv_path, "write a CSV table here");
        sub->add_option("--grid", o.grid, "lambda samples lo:hi:count");
        sub->add_option("--at", o.at, "evaluation point x or x,y (repeatable)");
    };
    auto* forward = app.add_subcommand("forward", "characteristic functions");
    add_common(forward, true);
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues (and weights for j = 1)");
    add_common(spectrum, true);
    auto* weights = app.add_subcommand("weights", "weight numbers and the norm identity");
    add_common(weights, true);
    auto* weyl = app.add_subcommand("weyl", "Weyl function");
    add_common(weyl, true);
    auto* inverse = app.add_subcommand("inverse", "recover q from spectral data");
    add_common(inverse, false);
    inverse->add_option("--data", data_path, "spectral data or a forward report")->required();
    inverse->add_option("--kind", o.kind, "weyl|two-spectra|spectrum-weights");
    inverse->add_flag("--strict", o.strict, "reject inexact data");
    auto* asym = app.add_subcommand("asymptotics", "branch asymptotics check");
    add_common(asym, true);
    asym->add_option("--n-range", o.n_range, "lo:hi (default 1:30)");
    auto* roundtrip = app.add_subcommand("roundtrip", "forward -> spectral data -> inverse");
    add_common(roundtrip, true);
    roundtrip->add_option("--kind", o.kind, "weyl|two-spectra|spectrum-weights");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    if (!argv_rev.empty())
        argv_rev.pop_back();
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        write_error(err, "UsageError", e.what(), 2);
        return 2;
    }

    try {
        if (const char* env = std::getenv("TSSPEC_TOLERANCE")) {
            char* end = nullptr;
            double t = std::strtod(env, &end);
            if (*end != '\0' || !(t > 0))
                throw ParseError("TSSPEC_TOLERANCE must be a positive number");
            o.tolerance = t;
        }
        if (!j_text.empty()) {
            if (j_text != "0" && j_text != "1")
                throw ParseError("--j must be 0 or 1");
            o.j = j_text == "1" ? 1 : 0;
        }
        if (!n_max_text.empty())
            o.n_max = static_cast<std::size_t>(std::stoul(n_max_text));
        if (!lambda_max_text.empty())
            o.lambda_max = to_double(parse_rational(lambda_max_text));
        if (!backend.empty())
            o.backend = parse_backend(backend);
        if (o.jobs == 0)
            o.jobs = 1;

        std::string digest_input;
        std::optional<Problem> problem;
        if (!problem_path.empty()) {
            std::string text = read_file(problem_path);
            digest_input += text;
            problem = parse_problem(parse_json_text(text, problem_path));
        }

        json report;
        json result;
        std::string csv;
        auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "inverse") {
            std::string text = read_file(data_path);
            digest_input += '\0';
            digest_input += text;
            std::optional<TimeScale> geometry;
            if (problem)
                geometry = problem->ts;
            SpectralFile data = parse_spectral_data(parse_json_text(text, data_path), geometry);
            result = cmd_inverse(data, o);
            json opts{{"strict", o.strict}};
            if (o.kind)
                opts["kind"] = *o.kind;
            report["options"] = opts;
            std::ostringstream trace;
            trace << "m,d0,d1,d0_next,quotient,remainder,d1_next,q\n";
            for (const auto& s : result["trace"])
                trace << s["m"] << ',' << s["d0"].dump() << ',' << s["d1"].dump() << ',' << s["d0_next"].dump() << ','
                      << s["quotient"].dump() << ',' << s["remainder"].dump() << ',' << s["d1_next"].dump() << ','
                      << s["q"].get<std::string>() << '\n';
            csv = trace.str();
        } else {
            if (name == "forward")
                result = cmd_forward(*problem, o);
            else if (name == "spectrum")
                result = cmd_spectrum(*problem, o);
            else if (name == "weights")
                result = cmd_weights(*problem, o);
            else if (name == "weyl")
                result = cmd_weyl(*problem, o);
            else if (name == "asymptotics")
                result = cmd_asymptotics(*problem, o, &csv);
            else if (name == "roundtrip")
                result = cmd_roundtrip(*problem, o);
            report["options"] = options_json(*problem, o);
        }
        report["command"] = name;
        report["input_digest"] = fnv1a_hex(digest_input);
        report["result"] = result;

        const std::string text = report.dump(2) + "\n";
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            if (!f)
                throw ParseError("cannot write '" + out_path + "'");
            f << text;
        } else {
            out << text;
        }
        if (!csv_path.empty() && !csv.empty()) {
            std::ofstream f(csv_path, std::ios::binary);
            if (!f)
                throw ParseError("cannot write '" + csv_path + "'");
            f << csv;
        }
        if (name == "roundtrip" && !result["pass"].get<bool>())
            return 3;
        return 0;
    } catch (const Error& e) {
        write_error(err, e.kind(), e.what(), exit_code_for(e));
        return exit_code_for(e);
    } catch (const std::exception& e) {
        write_error(err, "InternalError", e.what(), 3);
        return 3;
    }
}

} // namespace tss::cli
