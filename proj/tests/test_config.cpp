#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "evsoh/config.hpp"
#include "evsoh/errors.hpp"
#include "evsoh/vehicles.hpp"

using namespace evsoh;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = EVSOH_TEST_CONFIG_DIR;

void check_same(const PackSpec& a, const PackSpec& b) {
    CHECK(a.vehicle == b.vehicle);
    CHECK(a.chemistry == b.chemistry);
    CHECK(a.n_series == b.n_series);
    CHECK(a.n_parallel == b.n_parallel);
    CHECK(a.cell.q_pe_ah == doctest::Approx(b.cell.q_pe_ah).epsilon(1e-12));
    CHECK(a.cell.q_ne_ah == doctest::Approx(b.cell.q_ne_ah).epsilon(1e-12));
    CHECK(a.cell.q_b_ah == doctest::Approx(b.cell.q_b_ah).epsilon(1e-12));
    CHECK(a.cell.r_internal_ohm == doctest::Approx(b.cell.r_internal_ohm).epsilon(1e-12));
    CHECK(a.cell.v_max == b.cell.v_max);
    CHECK(a.cell_variation == b.cell_variation);
    CHECK(a.defective_cells.size() == b.defective_cells.size());
    CHECK(a.nominal_capacity_ah == b.nominal_capacity_ah);
    CHECK(a.nominal_energy_kwh == b.nominal_energy_kwh);
    CHECK(a.nominal_voltage_v == b.nominal_voltage_v);
    CHECK(a.window == b.window);
    CHECK(a.bms.low_v == b.bms.low_v);
    CHECK(a.bms.high_v == b.bms.high_v);
    CHECK(a.bms.soc_max_percent == b.bms.soc_max_percent);
    CHECK(a.bms.anchor_sigma_v == b.bms.anchor_sigma_v);
}

const char* kMinimal = R"(vehicle: Test
chemistry: nmc_graphite
n_series: 108
n_parallel: 2
nominal_capacity_ah: 145
nominal_energy_kwh: 58
nominal_voltage_v: 400
window: [360, 450]
cell: {q_pe_ah: 87.699, q_ne_ah: 103.64, q_b_ah: -2.073, r_internal_ohm: 0.0011, v_max: 4.22}
bms: {low_v: 355, high_v: 453}
)";

}  // namespace

TEST_CASE("shipped vehicle configs equal the built-in presets") {
    for (const auto& name : vehicles::names()) {
        CAPTURE(name);
        const auto cfg = load_vehicle_config(kConfigs / "vehicles" / (name + ".yaml"));
        CHECK(cfg.id == name);
        check_same(cfg.pack, vehicles::by_name(name));
        CHECK(cfg.hash.size() == 16);
    }
}

TEST_CASE("shipped sensor sections match the gateway presets") {
    const auto vw = load_vehicle_config(kConfigs / "vehicles" / "id3.yaml").sensor;
    CHECK(vw.voltage_resolution == vehicles::vw_sensor().voltage_resolution);
    CHECK(vw.min_rate_hz == vehicles::vw_sensor().min_rate_hz);
    const auto tesla = load_vehicle_config(kConfigs / "vehicles" / "model3_lfp.yaml").sensor;
    CHECK(tesla.voltage_resolution == vehicles::tesla_sensor().voltage_resolution);
}

TEST_CASE("shipped templates equal the built-in templates") {
    for (const auto& t : {ChemistryTemplate::nmc_graphite(), ChemistryTemplate::lfp_graphite()}) {
        CAPTURE(t.name);
        const auto loaded = load_template(kConfigs / "templates" / (t.name + ".yaml"));
        CHECK(loaded.chemistry == t.chemistry);
        CHECK(loaded.balancing == t.balancing);
        REQUIRE(loaded.features.size() == t.features.size());
        for (std::size_t k = 0; k < t.features.size(); ++k) {
            CHECK(loaded.features[k].name == t.features[k].name);
            CHECK(loaded.features[k].stoichiometry == t.features[k].stoichiometry);
            CHECK(loaded.features[k].band_low == t.features[k].band_low);
            CHECK(loaded.features[k].band_high == t.features[k].band_high);
        }
    }
}

TEST_CASE("standard protocol config") {
    const auto p = load_protocol_config(kConfigs / "protocol" / "standard.yaml");
    CHECK(p.spec.min_duration_h == 15.0);
    CHECK(p.spec.temp_center_c == 20.0);
    CHECK(p.spec.temp_tolerance_c == 5.0);
    CHECK(p.spec.rest_min_minutes == 30.0);
    CHECK_FALSE(p.has_window);
    CHECK(p.disabled.empty());
}

TEST_CASE("protocol config with window and disabled checks") {
    const auto p = parse_protocol_config("window: [370, 445]\ndisabled_checks: [temperature, rest_settled]\n", "p.yaml");
    CHECK(p.has_window);
    CHECK(p.spec.window == VoltageWindow{370, 445});
    CHECK(p.disabled == std::set<CheckId>{CheckId::temperature, CheckId::rest_settled});
    CHECK_THROWS_AS(parse_protocol_config("disabled_checks: [speed]\n", "p.yaml"), ConfigError);
}

TEST_CASE("a minimal vehicle file defaults its optional sections") {
    const auto v = parse_vehicle_config(kMinimal, "test.yaml");
    CHECK(v.pack.cell_variation == 0.0);
    CHECK(v.pack.bms.soc_max_percent == 100.0);
    CHECK(v.dva_template.name == "nmc_graphite");
    CHECK(v.id == "test");
    CHECK_NOTHROW(v.pack.validate());
}

TEST_CASE("config errors carry file and line") {
    const std::string bad = std::string(kMinimal) + "colour: red\n";
    try {
        parse_vehicle_config(bad, "car.yaml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.file() == "car.yaml");
        CHECK(e.line() == 11);
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
    try {
        parse_vehicle_config("n_series: 108\nn_parallel: [1, 2\n", "broken.yaml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() > 0);
    }
    std::string type_error = kMinimal;
    type_error.replace(type_error.find("108"), 3, "many");
    try {
        parse_vehicle_config(type_error, "car.yaml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(load_vehicle_config("/nonexistent/car.yaml"), ConfigError);
}

TEST_CASE("invalid pack values are config errors") {
    std::string text = kMinimal;
    text.replace(text.find("[360, 450]"), 10, "[450, 360]");
    CHECK_THROWS_AS(parse_vehicle_config(text, "car.yaml"), ConfigError);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("name resolution and the config directory override") {
    setenv("EVSOH_CONFIG_DIR", kConfigs.c_str(), 1);
    CHECK(resolve_config("id3", "vehicles") == kConfigs / "vehicles" / "id3.yaml");
    const auto explicit_path = (kConfigs / "protocol" / "standard.yaml").string();
    CHECK(resolve_config(explicit_path, "protocol") == explicit_path);
    setenv("EVSOH_CONFIG_DIR", "/nonexistent", 1);
    CHECK(config_dir() == fs::path("/nonexistent"));
    CHECK_THROWS_AS(load_vehicle_config(resolve_config("id3", "vehicles")), ConfigError);
    unsetenv("EVSOH_CONFIG_DIR");
}
