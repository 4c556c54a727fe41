#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbc/continuation.hpp"
#include "cbc/control.hpp"
#include "cbc/filter.hpp"
#include "cbc/plant.hpp"

namespace cbc {

struct SweepSettings {
    double freq_min_hz = 18.0;
    double freq_max_hz = 23.0;
    double freq_step_hz = 0.25;
    double seed_amplitude = 0.02;  // response amplitude of the first seed
    std::size_t modes = 7;
    int threads = 0;  // 0 selects the hardware concurrency

    void validate() const;
    std::vector<double> frequencies_hz() const;
};

struct SurfaceSettings {
    double rho = 0.0;  // support radius; 0 selects the data-driven default
    std::vector<double> levels;  // forcing amplitudes for the constant-F slices

    void validate() const;
};

struct ContinuationSection {
    StepControl step;
    CorrectorSettings corrector;
    CorrectorKind corrector_kind = CorrectorKind::FixedPoint;
    EquilibriumSettings equilibrium;

    void validate() const;
};

// Everything one run needs, resolved to concrete values. Parsed from a single
// JSON file with strict unknown-key rejection so typos fail loudly.
struct RunConfig {
    int schema_version = 1;
    PlantConfig plant;
    PDGains gains{3500.0, 2.0};
    FilterSpec filter{4, 1500.0, 5000.0};
    LoopSettings loop;
    ContinuationSection continuation;
    SweepSettings sweep;
    SurfaceSettings surface;
    std::string output_dir = "out";

    void validate() const;
    // Full resolved configuration, embedded in every artifact.
    nlohmann::json to_json() const;
};

// Parses and validates; messages carry the offending key path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

}  // namespace cbc
