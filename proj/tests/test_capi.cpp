// Exercises the extern-C surface end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qmark/qmark.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace {
struct Session {
    qmk_session* s = qmk_create();
    ~Session() { qmk_destroy(s); }
};
}  // namespace

TEST_CASE("version string") {
    CHECK(std::strcmp(qmk_version(), "0.1.0") == 0);
}

TEST_CASE("run a small trivial family through the C API") {
    Session ses;
    REQUIRE(ses.s != nullptr);
    qmk_config_set(ses.s, "family", "trivial");
    qmk_config_set(ses.s, "L", "3");
    qmk_config_set(ses.s, "suites", "algebra,build,markov");
    qmk_config_set(ses.s, "seed", "7");
    CHECK(qmk_run(ses.s) == QMK_OK);
    const std::string text = qmk_report_text(ses.s);
    CHECK(text.find("qmark-report") == 0);
    CHECK(text.find("summary.failed: 0") != std::string::npos);
}

TEST_CASE("identical seeded runs produce identical reports") {
    auto run_once = []() {
        Session ses;
        qmk_config_set(ses.s, "family", "ising");
        qmk_config_set(ses.s, "L", "3");
        qmk_config_set(ses.s, "alpha", "1");
        qmk_config_set(ses.s, "beta", "0");
        qmk_config_set(ses.s, "gamma", "0");
        qmk_config_set(ses.s, "delta", "1");
        qmk_config_set(ses.s, "h", "0.5");
        qmk_config_set(ses.s, "suites", "build,markov,structure");
        qmk_config_set(ses.s, "seed", "12345");
        REQUIRE(qmk_run(ses.s) == QMK_OK);
        return std::string(qmk_report_text(ses.s));
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("config errors surface with a message and the right status") {
    Session ses;
    qmk_config_set(ses.s, "family", "nonsense");
    CHECK(qmk_run(ses.s) == QMK_E_CONFIG);
    CHECK(std::strlen(qmk_last_error(ses.s)) > 0);

    qmk_config_reset(ses.s);
    qmk_config_set(ses.s, "family", "two_block");
    qmk_config_set(ses.s, "L", "3");
    CHECK(qmk_run(ses.s) == QMK_E_CONFIG);
}

TEST_CASE("faithfulness violations map to their own status") {
    Session ses;
    qmk_config_set(ses.s, "family", "product");
    qmk_config_set(ses.s, "L", "3");
    qmk_config_set(ses.s, "empty_probability", "1e-13");
    qmk_config_set(ses.s, "suites", "hamiltonian");
    CHECK(qmk_run(ses.s) == QMK_E_FAITHFULNESS);
}

TEST_CASE("failing checks map to the dedicated status") {
    Session ses;
    qmk_config_set(ses.s, "family", "trivial");
    qmk_config_set(ses.s, "L", "2");
    qmk_config_set(ses.s, "suites", "algebra");
    qmk_config_set(ses.s, "tol.car", "1e-30");  // nothing satisfies this
    CHECK(qmk_run(ses.s) == QMK_E_CHECKS_FAILED);
    const std::string text = qmk_report_text(ses.s);
    CHECK(text.find("pass=0") != std::string::npos);
}

TEST_CASE("demo, verify and report writing through the C API") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "qmark_capi_demo").string();
    fs::remove_all(dir);

    Session ses;
    qmk_config_set(ses.s, "family", "hopping");
    qmk_config_set(ses.s, "L", "3");
    qmk_config_set(ses.s, "h", "0.7");
    REQUIRE(qmk_demo(ses.s, dir.c_str()) == QMK_OK);
    CHECK(fs::exists(dir + "/sequence.manifest"));

    Session ver;
    qmk_config_set(ver.s, "L", "3");
    CHECK(qmk_verify_files(ver.s, dir.c_str()) == QMK_OK);

    const std::string path = dir + "/report.txt";
    CHECK(qmk_report_write(ver.s, path.c_str()) == QMK_OK);
    std::ifstream f(path);
    std::string first;
    std::getline(f, first);
    CHECK(first == "qmark-report");
    fs::remove_all(dir);
}

TEST_CASE("correlations verb exposes the csv attachment") {
    Session ses;
    qmk_config_set(ses.s, "family", "diag_lift");
    qmk_config_set(ses.s, "pi_stay1", "0.9");
    qmk_config_set(ses.s, "pi_stay2", "0.9");
    CHECK(qmk_correlations(ses.s) == QMK_OK);
    const char* csv = qmk_report_csv(ses.s, "correlations");
    REQUIRE(csv != nullptr);
    CHECK(std::string(csv).find("r,quantum,classical") == 0);
    CHECK(qmk_report_csv(ses.s, "absent") == nullptr);
}

TEST_CASE("disintegrate verb classifies and reports") {
    Session ses;
    qmk_config_set(ses.s, "family", "two_block");
    qmk_config_set(ses.s, "L", "4");
    CHECK(qmk_disintegrate(ses.s) == QMK_OK);
    const std::string text = qmk_report_text(ses.s);
    CHECK(text.find("structure.pattern: scalar,full,scalar") != std::string::npos);
}
