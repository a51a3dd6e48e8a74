#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmark/io.hpp"
#include "qmark/runner.hpp"

#include <filesystem>
#include <fstream>

using namespace qmark;
namespace fs = std::filesystem;

namespace {
std::string tmpdir(const char* name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}
}  // namespace

TEST_CASE("operator files round-trip with metadata") {
    const std::string dir = tmpdir("qmark_test_io");
    const ChainWindow w(-2, 3);
    Rng rng(1);
    ChainOperator x = random_op(w, rng);
    x.parity_tag = Parity::Mixed;
    x.localization = Region(w, {-1, 0});
    save_operator(dir + "/x.op", x, {{"note", "test"}});
    std::map<std::string, std::string> extra;
    const ChainOperator y = load_operator(dir + "/x.op", &extra);
    CHECK(y.window == w);
    CHECK(max_abs(Matrix(x.mat - y.mat)) == 0.0);
    CHECK(y.parity_tag == Parity::Mixed);
    REQUIRE(y.localization.has_value());
    CHECK(y.localization->sites == std::set<int>{-1, 0});
    CHECK(extra.at("note") == "test");
    fs::remove_all(dir);
}

TEST_CASE("density files keep the declared normalization") {
    const std::string dir = tmpdir("qmark_test_density");
    const ChainWindow w(0, 2);
    StateDensity rho(w, Matrix::Identity(4, 4), TraceNormalization::UnitNormalizedTrace);
    save_density(dir + "/rho.op", rho);
    const StateDensity back = load_density(dir + "/rho.op");
    CHECK(back.normalization == TraceNormalization::UnitNormalizedTrace);
    CHECK(max_abs(Matrix(back.rho - rho.rho)) == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("keyvalue files reject malformed lines") {
    const std::string dir = tmpdir("qmark_test_kv");
    {
        std::ofstream f(dir + "/bad.meta");
        f << "this line has no separator\n";
    }
    CHECK_THROWS_AS(read_keyvalue(dir + "/bad.meta"), ConfigError);
    CHECK_THROWS_AS(read_keyvalue(dir + "/missing.meta"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("run configuration validation") {
    RunConfig c;
    c.window_length = 3;
    c.family = "trivial";
    c.validate();
    c.family = "unknown";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.family = "two_block";
    c.window_length = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.window_length = 4;
    c.validate();
    c.family = "ising";
    c.alpha = 1.0;
    c.beta = 1.0;
    c.gamma = 0.0;
    c.delta = 0.0;
    c.h = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.window_length = 99;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.suites = {"nonsense"};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config keys parse and reject unknown names") {
    const RunConfig c = config_from_keyvalues(
        {{"L", "5"}, {"family", "hopping"}, {"h", "0.7"}, {"seed", "42"}, {"tol.kms", "1e-6"}});
    CHECK(c.window_length == 5);
    CHECK(c.family == "hopping");
    CHECK(c.h == 0.7);
    CHECK(c.seed == 42);
    CHECK(c.tol_for("kms", 1e-7) == 1e-6);
    CHECK(c.tol_for("other", 1e-7) == 1e-7);
    CHECK_THROWS_AS(config_from_keyvalues({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(config_from_keyvalues({{"L", "abc"}}), ConfigError);
}

TEST_CASE("demo round trip: files rebuild the in-memory family") {
    const std::string dir = tmpdir("qmark_test_demo");
    RunConfig c;
    c.window_length = 3;
    c.family = "ising";
    c.alpha = 2.0;
    c.beta = 1.0;
    c.gamma = 1.0;
    c.delta = 2.0;
    c.h = 0.3;
    write_demo(c, dir);
    RunConfig v = c;
    v.files_dir = dir;
    const Report rep = verify_files(v);
    CHECK(rep.all_pass());
    // byte-for-byte reproducibility of a second demo with identical parameters
    const std::string dir2 = tmpdir("qmark_test_demo2");
    write_demo(c, dir2);
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ifstream f1(entry.path(), std::ios::binary);
        std::ifstream f2(fs::path(dir2) / entry.path().filename(), std::ios::binary);
        std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(s1 == s2);
    }
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("report rendering is stable and carries property tags") {
    Report rep;
    rep.set_env("family", "trivial");
    rep.add("algebra", "car", "car-relations", 1e-15, 1e-12);
    rep.add_control("expectations", "transpose", "complete-positivity", 0.5, 1e-3);
    rep.add("markov", "broken", "markov-chain-identity", 1.0, 1e-9);
    CHECK(rep.total() == 3);
    CHECK(rep.failed() == 1);
    const std::string text = rep.to_text();
    CHECK(text.find("qmark-report") == 0);
    CHECK(text.find("env.family: trivial") != std::string::npos);
    CHECK(text.find("property=car-relations") != std::string::npos);
    CHECK(text.find("summary.failed: 1") != std::string::npos);
    // every record names a property
    for (const auto& c : rep.checks) CHECK(!c.property.empty());
}
