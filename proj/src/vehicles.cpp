#include "evsoh/vehicles.hpp"

#include "evsoh/errors.hpp"

namespace evsoh::vehicles {
namespace {

PackSpec base(std::string vehicle, Chemistry chem, int ns, int np, CellModel cell, double q_n,
              double e_n, double u_n, VoltageWindow window, BmsSpec bms) {
    PackSpec s;
    s.vehicle = std::move(vehicle);
    s.chemistry = chem;
    s.n_series = ns;
    s.n_parallel = np;
    s.cell = std::move(cell);
    s.nominal_capacity_ah = q_n;
    s.nominal_energy_kwh = e_n;
    s.nominal_voltage_v = u_n;
    s.window = window;
    s.bms = bms;
    return s;
}

}  // namespace

PackSpec id3() {
    return base("VW ID.3 Pro Performance", Chemistry::nmc_graphite, 108, 2,
                make_cell(Chemistry::nmc_graphite, 87.699, 103.640, -2.073, 1.1e-3, 4.22), 145.0, 58.0,
                400.0, {360.0, 450.0}, {355.0, 453.0, 96.0, 0.0});
}

PackSpec cupra_born() {
    PackSpec s = id3();
    s.vehicle = "Cupra Born";
    s.cell_variation = 0.01;
    s.bms.anchor_sigma_v = 2.0;
    s.window = {370.0, 445.0};  // fits every fleet member
    return s;
}

PackSpec taycan() {
    return base("Porsche Taycan", Chemistry::nmc_graphite, 198, 2,
                make_cell(Chemistry::nmc_graphite, 65.244, 77.105, -1.542, 1.0e-3, 4.22), 112.0, 82.3,
                735.0, {650.0, 830.0}, {641.0, 835.0, 100.0, 0.0});
}

PackSpec model3_lfp() {
    return base("Tesla Model 3 SR+ LFP", Chemistry::lfp_graphite, 106, 1,
                make_cell(Chemistry::lfp_graphite, 186.19, 212.788, -4.256, 0.5e-3, 3.65), 161.5, 52.5,
                350.0, {335.0, 365.0}, {330.0, 368.0, 100.0, 0.0});
}

PackSpec model_y() {
    return base("Tesla Model Y LR", Chemistry::nmc_graphite, 96, 46,
                make_cell(Chemistry::nmc_graphite, 5.214, 6.162, -0.123, 20e-3, 4.20), 211.6, 75.0,
                354.4, {300.0, 400.0}, {296.0, 402.0, 100.0, 0.0});
}

SensorSpec vw_sensor() {
    SensorSpec s;
    s.voltage_resolution = 0.25;
    s.current_resolution = 0.1;
    s.soc_resolution = 0.4;
    s.min_rate_hz = 0.1;
    s.max_rate_hz = 1.0;
    return s;
}

SensorSpec tesla_sensor() {
    SensorSpec s;
    s.voltage_resolution = 0.1;
    s.current_resolution = 0.1;
    s.soc_resolution = 0.1;
    s.min_rate_hz = 100.0;
    s.max_rate_hz = 100.0;
    return s;
}

PackSpec by_name(std::string_view name) {
    if (name == "id3") return id3();
    if (name == "cupra_born") return cupra_born();
    if (name == "taycan") return taycan();
    if (name == "model3_lfp") return model3_lfp();
    if (name == "model_y") return model_y();
    throw DomainError("unknown vehicle preset '" + std::string(name) + "'");
}

std::vector<std::string> names() { return {"id3", "cupra_born", "taycan", "model3_lfp", "model_y"}; }

}  // namespace evsoh::vehicles
