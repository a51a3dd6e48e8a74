#pragma once

#include <map>
#include <string>
#include <vector>

namespace qmark {

// One verification record: a stable property identifier (or "plumbing" for
// artifact-only checks), the measured residual and the pinned tolerance.
struct CheckRecord {
    std::string suite;
    std::string id;
    std::string property;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct Report {
    std::vector<std::pair<std::string, std::string>> env;  // insertion-ordered
    std::vector<CheckRecord> checks;
    std::map<std::string, std::string> csv;  // named CSV attachments

    void set_env(const std::string& key, const std::string& value);
    // Standard record: pass iff residual < tolerance.
    CheckRecord& add(const std::string& suite, const std::string& id, const std::string& property,
                     double residual, double tolerance);
    // Inverted record for negative controls: pass iff residual >= threshold.
    CheckRecord& add_control(const std::string& suite, const std::string& id,
                             const std::string& property, double residual, double threshold);

    int total() const { return static_cast<int>(checks.size()); }
    int failed() const;
    bool all_pass() const { return failed() == 0; }

    std::string to_text() const;
};

}  // namespace qmark
