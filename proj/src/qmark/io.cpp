#include "qmark/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qmark {

namespace {
static_assert(std::endian::native == std::endian::little,
              "operator files are little-endian; byte swapping not implemented");

std::string parity_key(Parity p) { return to_string(p); }

Parity parity_from(const std::string& s) {
    if (s == "even") return Parity::Even;
    if (s == "odd") return Parity::Odd;
    if (s == "mixed") return Parity::Mixed;
    return Parity::Unknown;
}
}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_keyvalue(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    for (const auto& [k, v] : kv) out << k << ": " << v << "\n";
}

std::map<std::string, std::string> read_keyvalue(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto pos = line.find(':');
        if (pos == std::string::npos) throw ConfigError("malformed line in " + path + ": " + line);
        std::string key = line.substr(0, pos);
        std::string val = line.substr(pos + 1);
        while (!val.empty() && val.front() == ' ') val.erase(val.begin());
        while (!val.empty() && (val.back() == '\r' || val.back() == ' ')) val.pop_back();
        kv[key] = val;
    }
    return kv;
}

void save_operator(const std::string& path, const ChainOperator& op,
                   const std::map<std::string, std::string>& extra) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    const long d = op.dim();
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            const double re = op.mat(i, j).real();
            const double im = op.mat(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    if (!out) throw ConfigError("short write on " + path);

    std::map<std::string, std::string> kv = extra;
    kv["window.first"] = std::to_string(op.window.first);
    kv["window.size"] = std::to_string(op.window.size);
    kv["parity"] = parity_key(op.parity_tag);
    if (op.localization) {
        std::ostringstream os;
        bool sep = false;
        for (int s : op.localization->sites) {
            if (sep) os << ",";
            os << s;
            sep = true;
        }
        kv["localization"] = os.str();
    }
    write_keyvalue(path + ".meta", kv);
}

ChainOperator load_operator(const std::string& path, std::map<std::string, std::string>* extra) {
    auto kv = read_keyvalue(path + ".meta");
    if (!kv.count("window.first") || !kv.count("window.size"))
        throw ConfigError("missing window keys in " + path + ".meta");
    ChainWindow w(std::stoi(kv.at("window.first")), std::stoi(kv.at("window.size")));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    const long d = w.dim();
    Matrix m(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            double re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&re), sizeof(double));
            in.read(reinterpret_cast<char*>(&im), sizeof(double));
            if (!in) throw ConfigError("short read on " + path);
            m(i, j) = Complex(re, im);
        }
    ChainOperator op(w, std::move(m));
    op.parity_tag = parity_from(kv.count("parity") ? kv.at("parity") : "unknown");
    if (kv.count("localization") && !kv.at("localization").empty()) {
        std::set<int> sites;
        std::stringstream ss(kv.at("localization"));
        std::string tok;
        while (std::getline(ss, tok, ',')) sites.insert(std::stoi(tok));
        op.localization = Region(w, sites);
    }
    if (extra) *extra = kv;
    return op;
}

void save_density(const std::string& path, const StateDensity& rho) {
    ChainOperator op(rho.window, rho.rho);
    op.parity_tag = Parity::Unknown;
    save_operator(path, op,
                  {{"normalization", rho.normalization == TraceNormalization::UnitTrace
                                         ? "unit_trace"
                                         : "unit_normalized_trace"}});
}

StateDensity load_density(const std::string& path) {
    std::map<std::string, std::string> kv;
    ChainOperator op = load_operator(path, &kv);
    const auto it = kv.find("normalization");
    const TraceNormalization n = (it != kv.end() && it->second == "unit_trace")
                                     ? TraceNormalization::UnitTrace
                                     : TraceNormalization::UnitNormalizedTrace;
    return StateDensity(op.window, op.mat, n);
}

}  // namespace qmark
