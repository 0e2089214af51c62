#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "evsoh/dva.hpp"
#include "evsoh/pack_model.hpp"
#include "evsoh/protocol.hpp"

namespace evsoh {

// Simulator settings a vehicle file may carry.
struct ChargeSettings {
    std::optional<double> power_w;  // default: net energy / 30 h
    double ambient_c = 20.0;
    double rest_s = 2400.0;
};

struct VehicleConfig {
    std::string id;  // file stem, also the fleet grouping key
    PackSpec pack;
    SensorSpec sensor;
    ChemistryTemplate dva_template;
    ChargeSettings charge;
    std::string source;  // file the config was read from
    std::string hash;    // FNV-1a of the file bytes
};

struct ProtocolConfig {
    ProtocolSpec spec;
    bool has_window = false;  // otherwise the vehicle window applies
    std::set<CheckId> disabled;
    std::string source;
    std::string hash;
};

// Every loader raises ConfigError naming the file and line of the offending
// entry. Unknown keys are errors.
VehicleConfig parse_vehicle_config(std::string_view text, const std::string& source);
VehicleConfig load_vehicle_config(const std::filesystem::path& path);
ProtocolConfig parse_protocol_config(std::string_view text, const std::string& source);
ProtocolConfig load_protocol_config(const std::filesystem::path& path);
ChemistryTemplate parse_template(std::string_view text, const std::string& source);
ChemistryTemplate load_template(const std::filesystem::path& path);

// Directory holding vehicles/, protocol/ and templates/: $EVSOH_CONFIG_DIR if
// set, else the configs/ directory of the source tree.
std::filesystem::path config_dir();

// An existing path is returned as is; a bare name resolves to
// <config_dir>/<kind>/<name>.yaml.
std::filesystem::path resolve_config(const std::string& name_or_path, std::string_view kind);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace evsoh
