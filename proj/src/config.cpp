#include "cbc/config.hpp"

#include <cmath>
#include <fstream>

namespace cbc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError("config: " + path + ": " + what);
}

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        fail(path, "expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(path + "." + key, "unknown key");
        }
    }
}

template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path + "." + key, e.what());
    }
}

PlantModel parse_model(const json& j, const std::string& path) {
    std::string name = "duffing";
    read(j, path, "model", name);
    if (name == "duffing") {
        return PlantModel::Duffing;
    }
    if (name == "fold_normal_form") {
        return PlantModel::FoldNormalForm;
    }
    if (name == "degenerate_flat") {
        return PlantModel::DegenerateFlat;
    }
    fail(path + ".model", "expected duffing | fold_normal_form | degenerate_flat");
}

const char* model_name(PlantModel m) {
    switch (m) {
        case PlantModel::Duffing: return "duffing";
        case PlantModel::FoldNormalForm: return "fold_normal_form";
        case PlantModel::DegenerateFlat: return "degenerate_flat";
    }
    return "duffing";
}

PlantConfig parse_plant(const json& j, const std::string& path) {
    reject_unknown_keys(j, path,
                        {"model", "omega0", "zeta", "gamma", "sample_rate", "noise_std",
                         "rng_seed", "blowup_bound"});
    PlantConfig p;
    p.model = parse_model(j, path);
    read(j, path, "omega0", p.omega0);
    read(j, path, "zeta", p.zeta);
    read(j, path, "gamma", p.gamma);
    read(j, path, "sample_rate", p.sample_rate);
    read(j, path, "noise_std", p.noise_std);
    read(j, path, "rng_seed", p.rng_seed);
    read(j, path, "blowup_bound", p.blowup_bound);
    return p;
}

void parse_control(const json& j, const std::string& path, RunConfig& cfg) {
    reject_unknown_keys(j, path, {"gains", "filter", "loop"});
    if (j.contains("gains")) {
        const json& g = j.at("gains");
        reject_unknown_keys(g, path + ".gains", {"kp", "kd"});
        read(g, path + ".gains", "kp", cfg.gains.kp);
        read(g, path + ".gains", "kd", cfg.gains.kd);
    }
    if (j.contains("filter")) {
        const json& f = j.at("filter");
        reject_unknown_keys(f, path + ".filter", {"order", "cutoff_hz", "sample_rate_hz"});
        read(f, path + ".filter", "order", cfg.filter.order);
        read(f, path + ".filter", "cutoff_hz", cfg.filter.cutoff_hz);
        read(f, path + ".filter", "sample_rate_hz", cfg.filter.sample_rate_hz);
    }
    if (j.contains("loop")) {
        const json& l = j.at("loop");
        reject_unknown_keys(l, path + ".loop",
                            {"max_periods", "stationarity_count", "transient_skip_periods",
                             "stationarity_tol_rel", "amplitude_floor"});
        read(l, path + ".loop", "max_periods", cfg.loop.max_periods);
        read(l, path + ".loop", "stationarity_count", cfg.loop.stationarity_count);
        read(l, path + ".loop", "transient_skip_periods", cfg.loop.transient_skip_periods);
        read(l, path + ".loop", "stationarity_tol_rel", cfg.loop.stationarity_tol_rel);
        read(l, path + ".loop", "amplitude_floor", cfg.loop.amplitude_floor);
    }
}

void parse_continuation(const json& j, const std::string& path, ContinuationSection& c) {
    reject_unknown_keys(j, path, {"step", "corrector", "corrector_kind", "equilibrium"});
    if (j.contains("step")) {
        const json& s = j.at("step");
        reject_unknown_keys(s, path + ".step",
                            {"h", "h_min", "h_max", "shrink", "grow", "max_points", "param_min",
                             "param_max", "forcing_max", "response_max", "ds_min", "ds_max"});
        read(s, path + ".step", "h", c.step.h);
        read(s, path + ".step", "h_min", c.step.h_min);
        read(s, path + ".step", "h_max", c.step.h_max);
        read(s, path + ".step", "shrink", c.step.shrink);
        read(s, path + ".step", "grow", c.step.grow);
        read(s, path + ".step", "max_points", c.step.max_points);
        read(s, path + ".step", "param_min", c.step.param_min);
        read(s, path + ".step", "param_max", c.step.param_max);
        read(s, path + ".step", "forcing_max", c.step.forcing_max);
        read(s, path + ".step", "response_max", c.step.response_max);
        read(s, path + ".step", "ds_min", c.step.ds_min);
        read(s, path + ".step", "ds_max", c.step.ds_max);
    }
    if (j.contains("corrector")) {
        const json& s = j.at("corrector");
        reject_unknown_keys(s, path + ".corrector",
                            {"tol_rel", "amplitude_floor", "relax", "max_iter",
                             "input_residual_rel", "fd_perturbation_rel", "newton_max_iter"});
        read(s, path + ".corrector", "tol_rel", c.corrector.tol_rel);
        read(s, path + ".corrector", "amplitude_floor", c.corrector.amplitude_floor);
        read(s, path + ".corrector", "relax", c.corrector.relax);
        read(s, path + ".corrector", "max_iter", c.corrector.max_iter);
        read(s, path + ".corrector", "input_residual_rel", c.corrector.input_residual_rel);
        read(s, path + ".corrector", "fd_perturbation_rel", c.corrector.fd_perturbation_rel);
        read(s, path + ".corrector", "newton_max_iter", c.corrector.newton_max_iter);
    }
    if (j.contains("corrector_kind")) {
        std::string kind;
        read(j, path, "corrector_kind", kind);
        if (kind == "fixed_point") {
            c.corrector_kind = CorrectorKind::FixedPoint;
        } else if (kind == "pseudo_arclength") {
            c.corrector_kind = CorrectorKind::PseudoArclength;
        } else {
            fail(path + ".corrector_kind", "expected fixed_point | pseudo_arclength");
        }
    }
    if (j.contains("equilibrium")) {
        const json& s = j.at("equilibrium");
        reject_unknown_keys(s, path + ".equilibrium",
                            {"gain", "settle_tol", "settle_window", "max_settle_time",
                             "authority_probe", "authority_tol", "divergence_bound"});
        read(s, path + ".equilibrium", "gain", c.equilibrium.gain);
        read(s, path + ".equilibrium", "settle_tol", c.equilibrium.settle_tol);
        read(s, path + ".equilibrium", "settle_window", c.equilibrium.settle_window);
        read(s, path + ".equilibrium", "max_settle_time", c.equilibrium.max_settle_time);
        read(s, path + ".equilibrium", "authority_probe", c.equilibrium.authority_probe);
        read(s, path + ".equilibrium", "authority_tol", c.equilibrium.authority_tol);
        read(s, path + ".equilibrium", "divergence_bound", c.equilibrium.divergence_bound);
    }
}

void parse_sweep(const json& j, const std::string& path, SweepSettings& s) {
    reject_unknown_keys(j, path,
                        {"freq_min_hz", "freq_max_hz", "freq_step_hz", "seed_amplitude", "modes",
                         "threads"});
    read(j, path, "freq_min_hz", s.freq_min_hz);
    read(j, path, "freq_max_hz", s.freq_max_hz);
    read(j, path, "freq_step_hz", s.freq_step_hz);
    read(j, path, "seed_amplitude", s.seed_amplitude);
    read(j, path, "modes", s.modes);
    read(j, path, "threads", s.threads);
}

void parse_surface(const json& j, const std::string& path, SurfaceSettings& s) {
    reject_unknown_keys(j, path, {"rho", "levels"});
    read(j, path, "rho", s.rho);
    read(j, path, "levels", s.levels);
}

}  // namespace

void SweepSettings::validate() const {
    if (!(freq_min_hz > 0.0) || !(freq_max_hz >= freq_min_hz)) {
        throw ValidationError("sweep frequency range is empty or non-positive");
    }
    if (!(freq_step_hz > 0.0)) {
        throw ValidationError("sweep.freq_step_hz must be positive");
    }
    if (!(seed_amplitude > 0.0)) {
        throw ValidationError("sweep.seed_amplitude must be positive");
    }
    if (modes < 1) {
        throw ValidationError("sweep.modes must be at least 1");
    }
    if (threads < 0) {
        throw ValidationError("sweep.threads must be non-negative");
    }
}

std::vector<double> SweepSettings::frequencies_hz() const {
    std::vector<double> out;
    const auto count = static_cast<int>(
        std::floor((freq_max_hz - freq_min_hz) / freq_step_hz + 1e-9));
    for (int i = 0; i <= count; ++i) {
        out.push_back(freq_min_hz + i * freq_step_hz);
    }
    return out;
}

void SurfaceSettings::validate() const {
    for (double level : levels) {
        if (!(level >= 0.0) || !std::isfinite(level)) {
            throw ValidationError("surface.levels must be finite and non-negative");
        }
    }
}

void ContinuationSection::validate() const {
    step.validate();
    corrector.validate();
}

void RunConfig::validate() const {
    if (schema_version != 1) {
        throw ValidationError("unsupported schema_version (expected 1)");
    }
    plant.validate();
    filter.validate();
    loop.validate();
    continuation.validate();
    sweep.validate();
    surface.validate();
    if (filter.sample_rate_hz != plant.sample_rate) {
        throw ValidationError("control.filter.sample_rate_hz must match plant.sample_rate");
    }
    if (output_dir.empty()) {
        throw ValidationError("output_dir must not be empty");
    }
}

nlohmann::json RunConfig::to_json() const {
    return json{
        {"schema_version", schema_version},
        {"plant",
         {{"model", model_name(plant.model)},
          {"omega0", plant.omega0},
          {"zeta", plant.zeta},
          {"gamma", plant.gamma},
          {"sample_rate", plant.sample_rate},
          {"noise_std", plant.noise_std},
          {"rng_seed", plant.rng_seed},
          {"blowup_bound", plant.blowup_bound}}},
        {"control",
         {{"gains", {{"kp", gains.kp}, {"kd", gains.kd}}},
          {"filter",
           {{"order", filter.order},
            {"cutoff_hz", filter.cutoff_hz},
            {"sample_rate_hz", filter.sample_rate_hz}}},
          {"loop",
           {{"max_periods", loop.max_periods},
            {"stationarity_count", loop.stationarity_count},
            {"transient_skip_periods", loop.transient_skip_periods},
            {"stationarity_tol_rel", loop.stationarity_tol_rel},
            {"amplitude_floor", loop.amplitude_floor}}}}},
        {"continuation",
         {{"step",
           {{"h", continuation.step.h},
            {"h_min", continuation.step.h_min},
            {"h_max", continuation.step.h_max},
            {"shrink", continuation.step.shrink},
            {"grow", continuation.step.grow},
            {"max_points", continuation.step.max_points},
            {"param_min", continuation.step.param_min},
            {"param_max", continuation.step.param_max},
            {"forcing_max", continuation.step.forcing_max},
            {"response_max", continuation.step.response_max},
            {"ds_min", continuation.step.ds_min},
            {"ds_max", continuation.step.ds_max}}},
          {"corrector",
           {{"tol_rel", continuation.corrector.tol_rel},
            {"amplitude_floor", continuation.corrector.amplitude_floor},
            {"relax", continuation.corrector.relax},
            {"max_iter", continuation.corrector.max_iter},
            {"input_residual_rel", continuation.corrector.input_residual_rel},
            {"fd_perturbation_rel", continuation.corrector.fd_perturbation_rel},
            {"newton_max_iter", continuation.corrector.newton_max_iter}}},
          {"corrector_kind", continuation.corrector_kind == CorrectorKind::FixedPoint
                                 ? "fixed_point"
                                 : "pseudo_arclength"},
          {"equilibrium",
           {{"gain", continuation.equilibrium.gain},
            {"settle_tol", continuation.equilibrium.settle_tol},
            {"settle_window", continuation.equilibrium.settle_window},
            {"max_settle_time", continuation.equilibrium.max_settle_time},
            {"authority_probe", continuation.equilibrium.authority_probe},
            {"authority_tol", continuation.equilibrium.authority_tol},
            {"divergence_bound", continuation.equilibrium.divergence_bound}}}}},
        {"sweep",
         {{"freq_min_hz", sweep.freq_min_hz},
          {"freq_max_hz", sweep.freq_max_hz},
          {"freq_step_hz", sweep.freq_step_hz},
          {"seed_amplitude", sweep.seed_amplitude},
          {"modes", sweep.modes},
          {"threads", sweep.threads}}},
        {"surface", {{"rho", surface.rho}, {"levels", surface.levels}}},
        {"output_dir", output_dir},
    };
}

RunConfig parse_config(const json& j) {
    reject_unknown_keys(j, "config",
                        {"schema_version", "plant", "control", "continuation", "sweep", "surface",
                         "output_dir"});
    RunConfig cfg;
    read(j, "config", "schema_version", cfg.schema_version);
    if (j.contains("plant")) {
        cfg.plant = parse_plant(j.at("plant"), "config.plant");
    }
    if (j.contains("control")) {
        parse_control(j.at("control"), "config.control", cfg);
    }
    if (j.contains("continuation")) {
        parse_continuation(j.at("continuation"), "config.continuation", cfg.continuation);
    }
    if (j.contains("sweep")) {
        parse_sweep(j.at("sweep"), "config.sweep", cfg.sweep);
    }
    if (j.contains("surface")) {
        parse_surface(j.at("surface"), "config.surface", cfg.surface);
    }
    read(j, "config", "output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("config: cannot open " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace cbc
