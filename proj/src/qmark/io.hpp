#pragma once

#include "qmark/algebra.hpp"

#include <map>
#include <string>

namespace qmark {

// Operator file format: `<path>` holds 2*4^L little-endian doubles, row-major,
// interleaved re/im; `<path>.meta` is a key: value sidecar with the window,
// localization, parity tag and (for densities) the trace normalization.

void save_operator(const std::string& path, const ChainOperator& op,
                   const std::map<std::string, std::string>& extra = {});
ChainOperator load_operator(const std::string& path,
                            std::map<std::string, std::string>* extra = nullptr);

void save_density(const std::string& path, const StateDensity& rho);
StateDensity load_density(const std::string& path);

// Sidecar helpers shared with the sequence manifests.
void write_keyvalue(const std::string& path, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_keyvalue(const std::string& path);

std::string format_double(double v);

}  // namespace qmark
