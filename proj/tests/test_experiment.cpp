#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "microvol/error.hpp"
#include "microvol/experiment.hpp"

using namespace microvol;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json smoke_config(const std::string& out) {
    return json::parse(R"({
      "model": {
        "phi1": {"family": "exponential-mixture", "weight": 0.4, "params": {"rate": 1.0}},
        "phi2": {"family": "exponential-mixture", "weight": 0.2, "params": {"rate": 1.0}},
        "beta": 3.0,
        "sequence": {"regime": "light", "params": {"lambda": 1.0, "mu": 1.0}}
      },
      "horizons": [20, 40],
      "paths": 4,
      "master_seed": 11,
      "output_dir": ")" + out + R"(",
      "limit": {"paths": 100, "steps": 100}
    })");
}

std::string error_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("microvol_test_" + name);
    fs::remove_all(p);
    return p;
}

// Reference FNV-1a, byte at a time.
std::string fnv1a_hex(const std::string& s) {
    unsigned long long h = 14695981039346656037ULL;
    for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ULL;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
    const auto c = config_from_json(smoke_config("x"));
    CHECK(c.horizons == std::vector<double>{20, 40});
    CHECK(c.paths_at(0) == 4);
    CHECK(c.paths_at(1) == 4);
    CHECK(c.master_seed == 11);
    CHECK(c.workers == 1);
    CHECK(c.output_dir == "x");
    CHECK(c.limit.paths == 100);
    CHECK_FALSE(c.limit.rough_form.has_value());
    CHECK(c.tolerances.ks_level == 0.01);
    CHECK(c.leverage_window == kDefaultLeverageWindowFraction);
}

TEST_CASE("config round trip") {
    auto j = smoke_config("x");
    j["paths"] = {3, 5};
    j["workers"] = 3;
    const auto c = config_from_json(j);
    CHECK(c.paths_at(1) == 5);
    const json back = to_json(c);
    CHECK(to_json(config_from_json(back)) == back);
}

TEST_CASE("config errors name the field") {
    auto j = smoke_config("x");
    j.erase("master_seed");
    CHECK(error_of(j).find("master_seed") != std::string::npos);

    j = smoke_config("x");
    j["horizons"] = {40, 20};
    CHECK(error_of(j).find("increasing") != std::string::npos);

    j = smoke_config("x");
    j["paths"] = {1, 2, 3};
    CHECK(error_of(j).find("paths") != std::string::npos);

    j = smoke_config("x");
    j["limit"]["rough_form"] = "fractional";
    CHECK(error_of(j).find("rough_form") != std::string::npos);

    j = smoke_config("x");
    j["limit"]["steps"] = 50;
    CHECK(error_of(j).find("limit.steps") != std::string::npos);

    j = smoke_config("x");
    j["master_seed"] = -1;
    CHECK(error_of(j).find("master_seed") != std::string::npos);

    j = smoke_config("x");
    j["horizons"] = {1.0};
    CHECK(error_of(j).find("a_T") != std::string::npos);

    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("config hash is FNV-1a of the canonical dump") {
    const json j = smoke_config("x");
    CHECK(config_hash(j) == fnv1a_hex(j.dump()));
    CHECK(config_hash(json::object()) == fnv1a_hex("{}"));
    CHECK(config_hash(json(nullptr)) == "5b9bc4ba528108e4");  // FNV-1a of "null"
    auto k = j;
    k["master_seed"] = 12;
    CHECK(config_hash(k) != config_hash(j));
}

TEST_CASE("simulate is deterministic across worker counts") {
    const auto d1 = scratch("sim1"), d2 = scratch("sim2");
    auto j = smoke_config(d1.string());
    const auto a = cmd_simulate(config_from_json(j));
    j["output_dir"] = d2.string();
    j["workers"] = 3;
    const auto b = cmd_simulate(config_from_json(j));
    REQUIRE(a.summaries.size() == 8);
    REQUIRE(b.summaries.size() == 8);
    for (std::size_t i = 0; i < a.summaries.size(); ++i) {
        CHECK(a.summaries[i].seed == b.summaries[i].seed);
        CHECK(a.summaries[i].n_plus == b.summaries[i].n_plus);
        CHECK(a.summaries[i].price_t1 == b.summaries[i].price_t1);
    }
    CHECK(a.manifest["config_hash"] == b.manifest["config_hash"]);
    CHECK(fs::exists(d1 / "manifest.json"));
    CHECK(fs::exists(d1 / "paths" / "summary_T20.csv"));
    CHECK(fs::exists(d1 / "paths" / "price_T40.csv"));

    // Seeds differ across paths and horizons.
    CHECK(a.summaries[0].seed != a.summaries[1].seed);
    CHECK(a.summaries[0].seed != a.summaries[4].seed);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("limit run maps the parameters") {
    const auto d = scratch("limit");
    const auto run = cmd_limit(config_from_json(smoke_config(d.string())));
    CHECK(run.params["model"] == "heston");
    CHECK(run.params["theta"].get<double>() == doctest::Approx(4.0));
    CHECK(run.price_t1.size() == 100);
    CHECK(run.variance_t1.size() == 100);
    for (double v : run.variance_t1) CHECK(v >= 0.0);
    CHECK(fs::exists(d / "params.json"));
    CHECK(fs::exists(d / "paths" / "limit_terminal.csv"));
    fs::remove_all(d);
}

TEST_CASE("verify report rows") {
    const auto d = scratch("verify");
    const auto rep = cmd_verify(config_from_json(smoke_config(d.string())));
    REQUIRE_FALSE(rep.rows.empty());
    bool saw_identity = false;
    for (const auto& r : rep.rows) {
        CHECK_FALSE(r.name.empty());
        CHECK((r.kind == "statistical" || r.kind == "identity" || r.kind == "info"));
        if (r.kind == "identity") {
            saw_identity = true;
            INFO(r.name << ": " << r.value);
            CHECK(r.passed);
        }
    }
    CHECK(saw_identity);
    const json j = rep.to_json();
    CHECK(j["rows"].size() == rep.rows.size());
    CHECK(j["all_passed"] == rep.all_passed());
    CHECK(rep.table().find(rep.rows.front().name) != std::string::npos);
    CHECK(fs::exists(d / "report.json"));
    CHECK(fs::exists(d / "report.txt"));
    fs::remove_all(d);
}

TEST_CASE("identity residuals") {
    CHECK(ml_laplace_residual(0.6, 1.0, {0.1, 1.0, 10.0}) < 1e-6);
    CHECK(fractional_identity_residual(0.6, 1.0, 1e-3) < 1e-4);
    const auto spec = build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), 3.0);
    const auto err = resolvent_closed_form_error(spec, 0.998, 1e-3, 2001);
    REQUIRE(err.has_value());
    CHECK(*err < 1e-6);
}
