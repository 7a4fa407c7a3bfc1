#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bilop/catalog.hpp"
#include "bilop/common.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run invoke(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = bilop::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir()
{
    const fs::path dir = fs::temp_directory_path() / "bilop_cli_tests";
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

fs::path write_config(const std::string& name, const json& doc)
{
    const fs::path p = scratch_dir() / name;
    std::ofstream(p) << doc.dump();
    return p;
}

} // namespace

TEST_CASE("list-catalog is deterministic and shows class parameters")
{
    const Run a = invoke({"list-catalog"});
    const Run b = invoke({"list-catalog"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("sqrt1 (m=1, rho=1, delta=0)") != std::string::npos);
}

TEST_CASE("every catalog symbol resolves through a config document")
{
    for (const auto& entry : bilop::symbol_catalog()) {
        const json r = bilop::cli::resolve_config("seminorms", {{"symbol", entry.name}});
        CHECK(r.at("symbol") == entry.name);
        CHECK(r.at("n") == 64);
        CHECK(r.at("max_order") == 2);
    }
}

TEST_CASE("config errors name the offending JSON path")
{
    CHECK_THROWS_WITH_AS(bilop::cli::resolve_config("apply", {{"bogus", 1}}), doctest::Contains("/bogus"),
                         bilop::InvalidInput);
    CHECK_THROWS_WITH_AS(bilop::cli::resolve_config("apply", {{"n", "sixty"}}), doctest::Contains("/n"),
                         bilop::InvalidInput);
    CHECK_THROWS_WITH_AS(bilop::cli::resolve_config("wbp-scan", {{"t_divisors", json::array({16, "x"})}}),
                         doctest::Contains("/t_divisors/1"), bilop::InvalidInput);

    const fs::path cfg = write_config("unknown.json", {{"symbl", "sqrt1"}});
    const Run r = invoke({"verify-transpose", "--config", cfg.string(), "--out", (scratch_dir() / "u.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("/symbl") != std::string::npos);
}

TEST_CASE("malformed expressions report the parse offset")
{
    const Run r = invoke({"seminorms", "--symbol", "sqrt(1 + xi^2", "--out", (scratch_dir() / "m.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("parse error at offset") != std::string::npos);

    const fs::path cfg = write_config("malformed.json", {{"symbol", "sqrt1"}, {"a", "sin(x"}});
    const Run c = invoke({"verify-transpose", "--config", cfg.string(), "--out", (scratch_dir() / "m2.json").string()});
    CHECK(c.code == 1);
    CHECK(c.err.find("a: parse error at offset 6") != std::string::npos);
}

TEST_CASE("flags override config values and reals accept constant expressions")
{
    const fs::path cfg = write_config("override.json", {{"n", 16}, {"trials", 10}});
    const fs::path out = scratch_dir() / "override_report.json";
    fs::remove(out);
    const Run r = invoke({"verify-transpose", "--config", cfg.string(), "--n", "32", "--period", "2*pi", "--out",
                          out.string()});
    REQUIRE(r.code == 0);
    const json doc = read_json(out);
    CHECK(doc.at("operation") == "verify-transpose");
    CHECK(doc.at("config").at("n") == 32);
    CHECK(doc.at("config").at("trials") == 10);
    CHECK(doc.at("config").at("period").get<double>() == doctest::Approx(2.0 * bilop::pi).epsilon(1e-15));
    CHECK(doc.at("verdict") == "PASS");
    CHECK(doc.at("data").at("identities").size() == 4);
    CHECK(fs::exists(fs::path(out).replace_extension(".csv")));
}

TEST_CASE("commutator of the constant symbol scans flat")
{
    const fs::path out = scratch_dir() / "flat.json";
    const Run r = invoke({"norm-scan", "--symbol", "one", "--op", "commutator1", "--n", "64", "--k-max", "16", "--out",
                          out.string()});
    CHECK(r.code == 0);
    const json doc = read_json(out);
    CHECK(doc.at("data").at("slope").get<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(doc.at("verdict") == "BOUNDED");
}

TEST_CASE("reports are identical for identical settings")
{
    const fs::path a = scratch_dir() / "det_a.json";
    const fs::path b = scratch_dir() / "det_b.json";
    const std::vector<std::string> common{"norm-scan", "--family", "random-trig", "--n", "64", "--k-max", "8"};
    auto with_out = [&](const fs::path& p) {
        auto v = common;
        v.push_back("--out");
        v.push_back(p.string());
        return v;
    };
    REQUIRE(invoke(with_out(a)).code == 0);
    REQUIRE(invoke(with_out(b)).code == 0);
    CHECK(read_json(a) == read_json(b));
}

TEST_CASE("default report names are unique and append-only")
{
    const fs::path dir = scratch_dir() / "names";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path old = fs::current_path();
    fs::current_path(dir);
    const Run first = invoke({"converse-check"});
    const Run second = invoke({"converse-check"});
    fs::current_path(old);
    CHECK(invoke({"converse-check", "--out-dir", (dir / "sub").string()}).code == 0);
    CHECK(fs::exists(dir / "sub"));
    CHECK(first.code == 0);
    CHECK(second.code == 0);
    int reports = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") ++reports;
    CHECK(reports == 2);
}

TEST_CASE("failing verdicts map to exit code 2")
{
    CHECK(bilop::cli::is_failing_verdict("FAIL"));
    CHECK(bilop::cli::is_failing_verdict("UNSTABLE"));
    CHECK(bilop::cli::is_failing_verdict("INCONCLUSIVE"));
    CHECK(bilop::cli::is_failing_verdict("not consistent with compactness"));
    CHECK_FALSE(bilop::cli::is_failing_verdict("PASS"));
    CHECK_FALSE(bilop::cli::is_failing_verdict("GROWING"));
    CHECK_FALSE(bilop::cli::is_failing_verdict("PARTIAL"));
}

TEST_CASE("help is available for every subcommand")
{
    CHECK(invoke({"--help"}).code == 0);
    for (const auto& name : bilop::cli::subcommands()) {
        const Run r = invoke({name, "--help"});
        CHECK_MESSAGE(r.code == 0, name);
        CHECK_MESSAGE(r.out.find(name) != std::string::npos, name);
        if (name != "list-catalog")
            for (const char* flag : {"--n", "--seed", "--config", "--out", "--out-dir"})
                CHECK_MESSAGE(r.out.find(flag) != std::string::npos, name << " " << flag);
    }
    CHECK(invoke({"no-such-command"}).code == 1);
}
