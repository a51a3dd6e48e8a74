#include "qmark/report.hpp"

#include "qmark/io.hpp"

#include <sstream>

namespace qmark {

void Report::set_env(const std::string& key, const std::string& value) {
    for (auto& [k, v] : env)
        if (k == key) {
            v = value;
            return;
        }
    env.emplace_back(key, value);
}

CheckRecord& Report::add(const std::string& suite, const std::string& id,
                         const std::string& property, double residual, double tolerance) {
    CheckRecord rec;
    rec.suite = suite;
    rec.id = id;
    rec.property = property;
    rec.residual = residual;
    rec.tolerance = tolerance;
    rec.pass = residual < tolerance;
    checks.push_back(rec);
    return checks.back();
}

CheckRecord& Report::add_control(const std::string& suite, const std::string& id,
                                 const std::string& property, double residual, double threshold) {
    CheckRecord rec;
    rec.suite = suite;
    rec.id = id;
    rec.property = property;
    rec.residual = residual;
    rec.tolerance = threshold;
    rec.pass = residual >= threshold;  // controls must trip
    checks.push_back(rec);
    return checks.back();
}

int Report::failed() const {
    int n = 0;
    for (const auto& c : checks)
        if (!c.pass) ++n;
    return n;
}

std::string Report::to_text() const {
    std::ostringstream os;
    os << "qmark-report\n";
    for (const auto& [k, v] : env) os << "env." << k << ": " << v << "\n";
    for (const auto& c : checks)
        os << "check " << c.suite << "." << c.id << " property=" << c.property
           << " residual=" << format_double(c.residual) << " tol=" << format_double(c.tolerance)
           << " pass=" << (c.pass ? 1 : 0) << "\n";
    os << "summary.checks: " << total() << "\n";
    os << "summary.passed: " << (total() - failed()) << "\n";
    os << "summary.failed: " << failed() << "\n";
    return os.str();
}

}  // namespace qmark
