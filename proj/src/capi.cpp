#include "qmark/qmark.h"

#include "qmark/algebra.hpp"
#include "qmark/io.hpp"
#include "qmark/report.hpp"
#include "qmark/runner.hpp"

#include <fstream>
#include <map>
#include <string>

struct qmk_session {
    std::map<std::string, std::string> config;
    qmark::Report report;
    std::string report_text;
    std::string csv_buffer;
    std::string error;
};

namespace {

int run_guarded(qmk_session* s, int (*body)(qmk_session*, const char*), const char* arg) {
    if (!s) return QMK_E_INTERNAL;
    s->error.clear();
    try {
        return body(s, arg);
    } catch (const qmark::ConfigError& e) {
        s->error = e.what();
        return QMK_E_CONFIG;
    } catch (const qmark::FaithfulnessError& e) {
        s->error = e.what();
        return QMK_E_FAITHFULNESS;
    } catch (const std::exception& e) {
        s->error = e.what();
        return QMK_E_INTERNAL;
    }
}

int finish(qmk_session* s, qmark::Report&& rep) {
    s->report = std::move(rep);
    s->report_text = s->report.to_text();
    const auto out = s->config.find("out");
    if (out != s->config.end() && !out->second.empty()) {
        std::ofstream f(out->second, std::ios::trunc);
        if (!f) throw qmark::ConfigError("cannot write report to " + out->second);
        f << s->report_text;
        for (const auto& [name, csv] : s->report.csv) {
            std::ofstream cf(out->second + "." + name + ".csv", std::ios::trunc);
            cf << csv;
        }
    }
    return s->report.all_pass() ? QMK_OK : QMK_E_CHECKS_FAILED;
}

}  // namespace

extern "C" {

qmk_session* qmk_create(void) {
    try {
        return new qmk_session();
    } catch (...) {
        return nullptr;
    }
}

void qmk_destroy(qmk_session* s) { delete s; }

const char* qmk_last_error(const qmk_session* s) { return s ? s->error.c_str() : "null session"; }

int qmk_config_set(qmk_session* s, const char* key, const char* value) {
    if (!s || !key || !value) return QMK_E_CONFIG;
    s->config[key] = value;
    return QMK_OK;
}

int qmk_config_load_file(qmk_session* s, const char* path) {
    return run_guarded(s, [](qmk_session* ss, const char* p) {
        for (const auto& [k, v] : qmark::read_keyvalue(p)) ss->config[k] = v;
        // validate eagerly so malformed files fail here
        qmark::config_from_keyvalues(ss->config).validate();
        return static_cast<int>(QMK_OK);
    }, path);
}

void qmk_config_reset(qmk_session* s) {
    if (s) s->config.clear();
}

int qmk_run(qmk_session* s) {
    return run_guarded(s, [](qmk_session* ss, const char*) {
        return finish(ss, qmark::run(qmark::config_from_keyvalues(ss->config)));
    }, nullptr);
}

int qmk_demo(qmk_session* s, const char* out_dir) {
    if (!out_dir) return QMK_E_CONFIG;
    return run_guarded(s, [](qmk_session* ss, const char* dir) {
        qmark::write_demo(qmark::config_from_keyvalues(ss->config), dir);
        return static_cast<int>(QMK_OK);
    }, out_dir);
}

int qmk_verify_files(qmk_session* s, const char* dir) {
    if (!dir) return QMK_E_CONFIG;
    return run_guarded(s, [](qmk_session* ss, const char* d) {
        qmark::RunConfig c = qmark::config_from_keyvalues(ss->config);
        c.files_dir = d;
        return finish(ss, qmark::verify_files(c));
    }, dir);
}

int qmk_hamiltonian(qmk_session* s) {
    return run_guarded(s, [](qmk_session* ss, const char*) {
        return finish(ss, qmark::run_hamiltonian(qmark::config_from_keyvalues(ss->config)));
    }, nullptr);
}

int qmk_correlations(qmk_session* s) {
    return run_guarded(s, [](qmk_session* ss, const char*) {
        return finish(ss, qmark::run_correlations(qmark::config_from_keyvalues(ss->config)));
    }, nullptr);
}

int qmk_disintegrate(qmk_session* s) {
    return run_guarded(s, [](qmk_session* ss, const char*) {
        return finish(ss, qmark::run_disintegration(qmark::config_from_keyvalues(ss->config)));
    }, nullptr);
}

const char* qmk_report_text(const qmk_session* s) {
    return s ? s->report_text.c_str() : "";
}

const char* qmk_report_csv(const qmk_session* s, const char* name) {
    if (!s || !name) return nullptr;
    const auto it = s->report.csv.find(name);
    if (it == s->report.csv.end()) return nullptr;
    const_cast<qmk_session*>(s)->csv_buffer = it->second;
    return s->csv_buffer.c_str();
}

int qmk_report_write(const qmk_session* s, const char* path) {
    if (!s || !path) return QMK_E_CONFIG;
    std::ofstream f(path, std::ios::trunc);
    if (!f) return QMK_E_CONFIG;
    f << s->report_text;
    return QMK_OK;
}

const char* qmk_version(void) { return "0.1.0"; }

}  // extern "C"
