// Command-line front end; talks to the core exclusively through the C API.

#include <qmark/qmark.h>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct SessionDeleter {
    void operator()(qmk_session* s) const { qmk_destroy(s); }
};
using Session = std::unique_ptr<qmk_session, SessionDeleter>;

struct CommonOpts {
    int L = 4;
    std::string family = "trivial";
    double alpha = 1.0, beta = 0.0, gamma = 0.0, delta = 1.0, h = 0.5;
    double empty_probability = 0.3;
    double t_hop = 0.6, t_vv = 0.4;
    double pi_stay1 = 0.9, pi_stay2 = 0.9;
    std::string files_dir;
    std::string suites = "all";
    std::string out;
    unsigned long long seed = 20240601ULL;
    std::vector<std::string> tol;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--L", o.L, "window length (1..8)");
    cmd->add_option("--family", o.family,
                    "trivial|ising|hopping|product|two_block|diag_lift|from_files");
    cmd->add_option("--alpha", o.alpha, "ising weight");
    cmd->add_option("--beta", o.beta, "ising weight");
    cmd->add_option("--gamma", o.gamma, "ising weight");
    cmd->add_option("--delta", o.delta, "ising weight");
    cmd->add_option("--h", o.h, "coupling strength");
    cmd->add_option("--empty-probability", o.empty_probability, "product family site weight");
    cmd->add_option("--t-hop", o.t_hop, "two_block pair hopping");
    cmd->add_option("--t-vv", o.t_vv, "two_block pair parity coupling");
    cmd->add_option("--pi-stay1", o.pi_stay1, "diag_lift stay probability (state 1)");
    cmd->add_option("--pi-stay2", o.pi_stay2, "diag_lift stay probability (state 2)");
    cmd->add_option("--files-dir", o.files_dir, "input directory for from_files");
    cmd->add_option("--suites", o.suites, "comma list of suites or 'all'");
    cmd->add_option("--out", o.out, "write the report here (CSV attachments alongside)");
    cmd->add_option("--seed", o.seed, "random sampling seed");
    cmd->add_option("--tol", o.tol, "tolerance override name=value (repeatable)")
        ->expected(-1);
    cmd->set_config("--config", "", "configuration file (key: value lines); flags override");
}

int apply_config(qmk_session* s, const CLI::App* cmd, const CommonOpts& o) {
    const std::string cfg = cmd->get_config_ptr() ? cmd->get_config_ptr()->as<std::string>() : "";
    if (!cfg.empty()) {
        const int rc = qmk_config_load_file(s, cfg.c_str());
        if (rc != QMK_OK) {
            std::fprintf(stderr, "error: %s\n", qmk_last_error(s));
            return rc;
        }
    }
    // flags override file values; untouched flags leave the file/defaults alone
    auto set_if = [&](const char* flag, const char* key, const std::string& v) {
        if (cmd->count(flag) > 0) qmk_config_set(s, key, v.c_str());
    };
    set_if("--L", "L", std::to_string(o.L));
    set_if("--family", "family", o.family);
    set_if("--alpha", "alpha", std::to_string(o.alpha));
    set_if("--beta", "beta", std::to_string(o.beta));
    set_if("--gamma", "gamma", std::to_string(o.gamma));
    set_if("--delta", "delta", std::to_string(o.delta));
    set_if("--h", "h", std::to_string(o.h));
    set_if("--empty-probability", "empty_probability", std::to_string(o.empty_probability));
    set_if("--t-hop", "t_hop", std::to_string(o.t_hop));
    set_if("--t-vv", "t_vv", std::to_string(o.t_vv));
    set_if("--pi-stay1", "pi_stay1", std::to_string(o.pi_stay1));
    set_if("--pi-stay2", "pi_stay2", std::to_string(o.pi_stay2));
    set_if("--files-dir", "files_dir", o.files_dir);
    set_if("--suites", "suites", o.suites);
    set_if("--out", "out", o.out);
    set_if("--seed", "seed", std::to_string(o.seed));
    for (const auto& t : o.tol) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --tol expects name=value, got '%s'\n", t.c_str());
            return QMK_E_CONFIG;
        }
        qmk_config_set(s, ("tol." + t.substr(0, eq)).c_str(), t.substr(eq + 1).c_str());
    }
    return QMK_OK;
}

int report_and_exit(qmk_session* s, int rc) {
    if (rc == QMK_E_CONFIG || rc == QMK_E_FAITHFULNESS || rc == QMK_E_INTERNAL) {
        std::fprintf(stderr, "error: %s\n", qmk_last_error(s));
        return rc;
    }
    std::fputs(qmk_report_text(s), stdout);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmark: quantum Markov states on the fermion chain, verified at desk scale"};
    app.require_subcommand(1);

    CommonOpts run_o, demo_o, verify_o, ham_o, corr_o, dis_o;
    std::string demo_dir, verify_dir;

    CLI::App* c_run = app.add_subcommand("run", "run verification suites against a family");
    add_common(c_run, run_o);
    CLI::App* c_demo = app.add_subcommand("demo", "write a family to operator files");
    add_common(c_demo, demo_o);
    c_demo->add_option("dir", demo_dir, "output directory")->required();
    CLI::App* c_verify = app.add_subcommand("verify", "verify a saved amplitude sequence");
    add_common(c_verify, verify_o);
    c_verify->add_option("dir", verify_dir, "input directory")->required();
    CLI::App* c_ham = app.add_subcommand("hamiltonian", "local potentials, terms and dynamics");
    add_common(c_ham, ham_o);
    CLI::App* c_corr = app.add_subcommand("correlations", "correlation decay of the lifted chain");
    add_common(c_corr, corr_o);
    CLI::App* c_dis = app.add_subcommand("disintegrate", "classify and disintegrate the state");
    add_common(c_dis, dis_o);

    CLI11_PARSE(app, argc, argv);

    Session session(qmk_create());
    if (!session) {
        std::fprintf(stderr, "error: cannot allocate session\n");
        return QMK_E_INTERNAL;
    }
    qmk_session* s = session.get();

    if (c_run->parsed()) {
        const int rc = apply_config(s, c_run, run_o);
        if (rc != QMK_OK) return rc;
        return report_and_exit(s, qmk_run(s));
    }
    if (c_demo->parsed()) {
        const int rc = apply_config(s, c_demo, demo_o);
        if (rc != QMK_OK) return rc;
        const int drc = qmk_demo(s, demo_dir.c_str());
        if (drc != QMK_OK) std::fprintf(stderr, "error: %s\n", qmk_last_error(s));
        else std::printf("wrote %s family to %s\n", demo_o.family.c_str(), demo_dir.c_str());
        return drc;
    }
    if (c_verify->parsed()) {
        const int rc = apply_config(s, c_verify, verify_o);
        if (rc != QMK_OK) return rc;
        return report_and_exit(s, qmk_verify_files(s, verify_dir.c_str()));
    }
    if (c_ham->parsed()) {
        const int rc = apply_config(s, c_ham, ham_o);
        if (rc != QMK_OK) return rc;
        return report_and_exit(s, qmk_hamiltonian(s));
    }
    if (c_corr->parsed()) {
        const int rc = apply_config(s, c_corr, corr_o);
        if (rc != QMK_OK) return rc;
        return report_and_exit(s, qmk_correlations(s));
    }
    if (c_dis->parsed()) {
        const int rc = apply_config(s, c_dis, dis_o);
        if (rc != QMK_OK) return rc;
        return report_and_exit(s, qmk_disintegrate(s));
    }
    return QMK_E_CONFIG;
}
