#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsspec/cli.hpp"
#include "tsspec/errors.hpp"

using namespace tss;
using namespace tss::cli;
namespace fs = std::filesystem;

namespace {

std::string data_dir() { return std::getenv("TSSPEC_DATA") ? std::getenv("TSSPEC_DATA") : "data/problems"; }
std::string test_data_dir() { return std::getenv("TSSPEC_TEST_DATA") ? std::getenv("TSSPEC_TEST_DATA") : "tests/data"; }
std::string problem(const std::string& name) { return data_dir() + "/" + name; }

struct Outcome {
    int code;
    std::string out;
    std::string err;
    json report() const { return json::parse(out); }
    json error() const { return json::parse(err); }
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "tsspec");
    std::ostringstream out, err;
    int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

Problem load(const std::string& name)
{
    std::ifstream f(problem(name));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_problem_text(ss.str());
}

double rel_err(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::complex<double> complex_from(const json& v)
{
    if (v.is_array())
        return {v[0].get<double>(), v[1].get<double>()};
    return {v.get<double>(), 0.0};
}

// [0,1] u [2,3], q = 0, lambda = rho^2
std::complex<double> twin_theta0(std::complex<double> rho)
{
    auto s = std::sin(rho), c = std::cos(rho), l = rho * rho;
    auto sinc = std::abs(rho) == 0.0 ? std::complex<double>(1.0) : s / rho;
    return c * c + (2.0 - l) * c * sinc - s * s;
}
std::complex<double> twin_theta1(std::complex<double> rho)
{
    auto s = std::sin(rho), c = std::cos(rho), l = rho * rho;
    return (l - 1.0) * s * s + c * c - 2.0 * rho * s * c;
}

struct EnvGuard {
    explicit EnvGuard(const char* value) { ::setenv("TSSPEC_TOLERANCE", value, 1); }
    ~EnvGuard() { ::unsetenv("TSSPEC_TOLERANCE"); }
};

} // namespace

TEST_CASE("problem parsing")
{
    Problem p = parse_problem(json::parse(R"({"intervals": [[0,0],[1,1],[2,2],[3,3]],
                                               "potential": {"isolated": {"1": "1/2", "2": -1}},
                                               "options": {"backend": "exact", "n_max": 2}})"));
    CHECK(p.ts.n_isolated() == 4);
    CHECK(p.q.isolated.at(1) == Rational(1, 2));
    CHECK(p.q.isolated.at(2) == -1);
    CHECK(p.options.backend == Backend::Exact);
    CHECK(p.options.n_max == 2u);

    CHECK_THROWS_AS(parse_problem_text("{not json"), ParseError);
    CHECK_THROWS_AS(parse_problem(json::parse(R"({"intervals": [[0,0],[1,1],[2,2]], "extra": 1})")), ParseError);
    CHECK_THROWS_AS(parse_problem(json::parse(R"({"intervals": [[0,0],[1,1],[2,2]],
                                                 "potential": {"isolated": {"1": "0"}}, "options": {"speed": 1}})")),
                    ParseError);
    CHECK_THROWS_AS(parse_problem(json::parse(R"({"intervals": [[0,0],[1,1],[2,2]],
                                                 "potential": {"isolated": {}}})")),
                    InvalidPotential);
    CHECK_THROWS_AS(parse_problem(json::parse(R"({"intervals": [[0,0],[1,1],[2,2]],
                                                 "potential": {"isolated": {"1": "x"}}})")),
                    ParseError);

    try {
        parse_problem(json::parse(R"({"intervals": [[0,0],[1,2],[2,3]], "potential": {}})"));
        FAIL("expected OverlapError");
    } catch (const OverlapError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("json helpers")
{
    CHECK(json_rational(json("3/4"), "x") == Rational(3, 4));
    CHECK(json_rational(json(-7), "x") == -7);
    CHECK(json_rational(json(0.1), "x") == Rational(1, 10));
    CHECK_THROWS_AS(json_rational(json::array(), "x"), ParseError);
    CHECK(poly_json(PolyRat{3, -4, 1}) == json::array({"3", "-4", "1"}));
    CHECK(poly_from_json(json::array({"1/2", 0, 2}), "p") == PolyRat{Rational(1, 2), 0, 2});
    CHECK(rational_json(Rational(-2, 6)) == "-1/3");
    CHECK(number_json(0.1).get<double>() == 0.1);
    CHECK(number_json(std::nan("")).is_null());
}

TEST_CASE("fnv1a digests")
{
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("forward on four points")
{
    json r = cmd_forward(load("four_points.json"), {});
    CHECK(r["backend"] == "exact");
    CHECK(r["theta0"] == json::array({"3", "-4", "1"}));
    CHECK(r["theta1"] == json::array({"1", "-3", "1"}));
    CHECK_FALSE(r["theta0_text"].get<std::string>().empty());
    CHECK(r["scale"]["M"] == 4);
    CHECK(r["scale"]["mu0"] == 1);
    const json& data = r["spectral_data"];
    CHECK(data["kind"] == "two-spectra");
    CHECK(data["spectrum0"]["values"] == json::array({"1", "3"}));
    CHECK(data["weyl"]["denominator"] == json::array({"1", "-3", "1"}));
}

TEST_CASE("forward samples two unit segments on a grid")
{
    CommandOptions o;
    o.grid = "-10:60:15";
    o.at = {"4,1"};
    json r = cmd_forward(load("two_unit_segments.json"), o);
    CHECK(r["backend"] == "numeric");
    REQUIRE(r["samples"].size() == 16);
    for (const auto& s : r["samples"]) {
        auto lambda = complex_from(s["lambda"]);
        auto rho = std::sqrt(lambda);
        CAPTURE(lambda.real(), lambda.imag());
        CHECK(rel_err(complex_from(s["theta0"]), twin_theta0(rho)) < 1e-8);
        CHECK(rel_err(complex_from(s["theta1"]), twin_theta1(rho)) < 1e-8);
    }
}

TEST_CASE("spectrum, weights and weyl on four points")
{
    Problem p = load("four_points.json");
    CommandOptions o;
    o.j = 0;
    json s0 = cmd_spectrum(p, o);
    CHECK(s0["spectrum"]["values"] == json::array({"1", "3"}));

    o.j = 1;
    json s1 = cmd_spectrum(p, o);
    const json& v = s1["spectrum"]["values"];
    REQUIRE(v.size() == 2);
    CHECK(v[0].get<double>() == Catch::Approx((3 - std::sqrt(5.0)) / 2).epsilon(1e-14));
    CHECK(v[1].get<double>() == Catch::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-14));
    CHECK(s1["spectrum"]["defining"] == json::array({"1", "-3", "1"}));

    json w = cmd_weights(p, {});
    REQUIRE(w["weights"]["values"].size() == 2);
    double total = 0;
    for (const auto& a : w["weights"]["values"])
        total += a.get<double>();
    CHECK(total == Catch::Approx(1.0));

    CommandOptions at;
    at.at = {"0", "1/2"};
    json wf = cmd_weyl(p, at);
    CHECK(wf["constant"] == "-1");
    CHECK(wf["numerator"] == json::array({"-3", "4", "-1"}));
    REQUIRE(wf["values"].size() == 2);
    CHECK(wf["values"][0]["exact"] == "-3");
    CHECK(wf["values"][0]["value"].get<double>() == Catch::Approx(-3.0));
    CHECK(wf["values"][1]["exact"] == "5");
}

TEST_CASE("spectrum on a segment scale reports labels")
{
    CommandOptions o;
    o.n_max = 6;
    json r = cmd_spectrum(load("two_unit_segments.json"), o);
    CHECK(r["spectrum"]["values"].size() == 6);
    CHECK(r["spectrum"]["labels"].size() == 6);
    CHECK(r.contains("labeling"));
    CHECK(r["bounded_part_expected"] == 2);
}

TEST_CASE("inverse from the four-point spectra file")
{
    Outcome o = invoke({"inverse", "--data", problem("four_points_spectra.json")});
    REQUIRE(o.code == 0);
    json r = o.report()["result"];
    CHECK(r["verified"] == true);
    CHECK(r["kind"] == "two-spectra");
    CHECK(r["theta0"] == json::array({"3", "-4", "1"}));
    CHECK(r["potential"] == json::array({json{{"index", 1}, {"point", "0"}, {"value", "0"}}, json{{"index", 2}, {"point", "1"}, {"value", "0"}}}));
    CHECK(r["trace"].size() == 2);
}

TEST_CASE("inverse reads a forward report")
{
    const fs::path dir = fs::temp_directory_path() / "tsspec_cli_test";
    fs::create_directories(dir);
    const std::string report = (dir / "forward.json").string();
    REQUIRE(invoke({"forward", "--problem", problem("four_points.json"), "--out", report}).code == 0);
    for (const char* kind : {"weyl", "two-spectra", "spectrum-weights"}) {
        Outcome o = invoke({"inverse", "--data", report, "--kind", kind});
        CAPTURE(kind, o.err);
        REQUIRE(o.code == 0);
        CHECK(o.report()["result"]["potential"] == json::array({json{{"index", 1}, {"point", "0"}, {"value", "0"}}, json{{"index", 2}, {"point", "1"}, {"value", "0"}}}));
    }
    fs::remove_all(dir);
}

TEST_CASE("bare spectra take geometry from a problem file")
{
    // both spectra contain 1, so no potential fits
    const std::string bare = test_data_dir() + "/bare_two_spectra.json";
    Outcome without = invoke({"inverse", "--data", bare});
    CHECK(without.code == 2);
    Outcome with = invoke({"inverse", "--data", bare, "--problem", problem("four_points.json")});
    CHECK(with.code == 3);
    CHECK(with.error()["error"]["kind"] == "InconsistentData");
}

TEST_CASE("asymptotics command")
{
    CommandOptions o;
    o.n_range = "1:12";
    std::string csv;
    json r = cmd_asymptotics(load("two_unit_segments.json"), o, &csv);
    CHECK(r["commensurability"]["commensurable"] == true);
    CHECK(r["distinct_z_over_d"] == false);
    CHECK(r["bounded_part_expected"] == 2);
    CHECK_FALSE(r["rows"].empty());
    CHECK(csv.find('\n') != std::string::npos);

    json irr = cmd_asymptotics(load("incommensurable.json"), o, &csv);
    CHECK(irr["commensurability"]["commensurable"] == false);
}

TEST_CASE("roundtrip command")
{
    json r = cmd_roundtrip(load("discrete5.json"), {});
    CHECK(r["pass"] == true);
    CHECK(invoke({"roundtrip", "--problem", problem("discrete5.json")}).code == 0);
}

TEST_CASE("reports are deterministic")
{
    for (const char* cmd : {"forward", "spectrum", "weights", "weyl"}) {
        Outcome a = invoke({cmd, "--problem", problem("two_segments.json"), "--n-max", "5"});
        Outcome b = invoke({cmd, "--problem", problem("two_segments.json"), "--n-max", "5"});
        CAPTURE(cmd, a.err);
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.report()["input_digest"].get<std::string>().size() == 16);
        CHECK(a.report()["command"] == cmd);
    }
    Outcome one = invoke({"forward", "--problem", problem("four_points.json")});
    Outcome other = invoke({"forward", "--problem", problem("two_segments.json")});
    CHECK(one.report()["input_digest"] != other.report()["input_digest"]);
}

TEST_CASE("exit codes")
{
    Outcome overlap = invoke({"forward", "--problem", test_data_dir() + "/overlap.json"});
    CHECK(overlap.code == 2);
    CHECK(overlap.error()["error"]["kind"] == "OverlapError");
    CHECK(overlap.error()["error"]["exit_code"] == 2);
    CHECK(overlap.out.empty());

    CHECK(invoke({"forward", "--problem", "/nonexistent/problem.json"}).code == 2);
    CHECK(invoke({"spectrum", "--problem", problem("four_points.json"), "--j", "2"}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"forward"}).code == 2);

    Outcome mismatch = invoke({"forward", "--problem", problem("two_unit_segments.json"), "--backend", "exact"});
    CHECK(mismatch.code == 2);
    CHECK(mismatch.error()["error"]["kind"] == "BackendMismatch");

    // a cubic numerator leaves a quadratic quotient
    const fs::path dir = fs::temp_directory_path() / "tsspec_cli_codes";
    fs::create_directories(dir);
    const std::string bad = (dir / "cubic.json").string();
    std::ofstream(bad) << R"({"intervals": [[0,0],[1,1],[2,2],[3,3]], "kind": "weyl",
                              "weyl": {"numerator": ["-1", "0", "0", "-1"], "denominator": ["1", "-3", "1"]}})";
    Outcome cubic = invoke({"inverse", "--data", bad});
    CHECK(cubic.code == 3);
    fs::remove_all(dir);
}

TEST_CASE("tolerance precedence")
{
    auto tolerance = [](const Outcome& o) { return o.report()["options"]["tolerance"].get<double>(); };
    CHECK(tolerance(invoke({"spectrum", "--problem", problem("four_points.json")})) == 1e-12);
    {
        EnvGuard env("1e-9");
        CHECK(tolerance(invoke({"spectrum", "--problem", problem("four_points.json")})) == 1e-9);
        CHECK(tolerance(invoke({"spectrum", "--problem", problem("mixed_smooth.json"), "--n-max", "3"})) ==
              load("mixed_smooth.json").options.tolerance.value_or(1e-9));
    }
    {
        EnvGuard env("nonsense");
        CHECK(invoke({"spectrum", "--problem", problem("four_points.json")}).code == 2);
    }
}

TEST_CASE("csv output")
{
    const fs::path dir = fs::temp_directory_path() / "tsspec_cli_csv";
    fs::create_directories(dir);
    const std::string csv = (dir / "trace.csv").string();
    REQUIRE(invoke({"inverse", "--data", problem("four_points_spectra.json"), "--csv", csv}).code == 0);
    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    CHECK(header == "m,d0,d1,d0_next,quotient,remainder,d1_next,q");
    int rows = 0;
    for (std::string line; std::getline(f, line);)
        ++rows;
    CHECK(rows == 2);
    fs::remove_all(dir);
}
