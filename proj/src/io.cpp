#include "cbc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbc {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path + " for writing");
    }
    out << contents;
    if (!out) {
        throw Error("write failed for " + path);
    }
}

std::string branch_csv(const Branch& branch) {
    std::ostringstream out;
    out << "omega,a,b,F,R,e_rms,e_rel,stable,iterations,settle_cycles";
    const std::size_t modes = branch.points.empty() ? 0 : branch.points.front().x.modes();
    out << ",A0";
    for (std::size_t j = 1; j <= modes; ++j) {
        out << ",A" << j << ",B" << j;
    }
    out << "\n";
    for (const auto& pt : branch.points) {
        out << format_number(pt.omega) << ',' << format_number(pt.a) << ','
            << format_number(pt.b) << ',' << format_number(pt.measures.forcing_amp) << ','
            << format_number(pt.measures.response_amp) << ','
            << format_number(pt.measures.error_rms) << ','
            << format_number(pt.measures.error_pct) << ','
            << (pt.stability == Stability::Unstable ? 0 : 1) << ',' << pt.iterations << ','
            << pt.settle_cycles;
        for (double c : pt.x.flat()) {
            out << ',' << format_number(c);
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json branch_to_json(const Branch& branch) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : branch.points) {
        points.push_back({
            {"omega", pt.omega},
            {"a", pt.a},
            {"b", pt.b},
            {"F", pt.measures.forcing_amp},
            {"R", pt.measures.response_amp},
            {"e_rms", pt.measures.error_rms},
            {"e_rel", pt.measures.error_pct},
            {"stable", pt.stability != Stability::Unstable},
            {"iterations", pt.iterations},
            {"settle_cycles", pt.settle_cycles},
            {"X", pt.x.flat()},
        });
    }
    return {
        {"omega", branch.omega},
        {"points", std::move(points)},
        {"diagnostic", branch.diagnostic},
        {"total_periods", branch.total_periods},
    };
}

nlohmann::json equilibrium_to_json(const EquilibriumBranch& branch) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : branch.points) {
        points.push_back({{"p", pt.p}, {"x", pt.x}});
    }
    return {{"points", std::move(points)}, {"diagnostic", branch.diagnostic}};
}

}  // namespace cbc
