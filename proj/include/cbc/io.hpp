#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbc/continuation.hpp"

namespace cbc {

// Shortest exact decimal form (17 significant digits) used by every CSV.
std::string format_number(double v);

void write_text_file(const std::string& path, const std::string& contents);

// Branch CSV: omega, a, b, F, R, e_rms, e_rel, stable, iterations,
// settle_cycles, then the flattened coefficients A0, A1, B1, ..., Am, Bm.
std::string branch_csv(const Branch& branch);

nlohmann::json branch_to_json(const Branch& branch);
nlohmann::json equilibrium_to_json(const EquilibriumBranch& branch);

}  // namespace cbc
