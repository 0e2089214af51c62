#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "evsoh/pack_model.hpp"

namespace evsoh {

// Built-in vehicle presets. The topology, window and nominal values are the
// published pack specifications; electrode capacities, balancing and internal
// resistance are synthetic values calibrated so that the simulated pack
// reproduces the published figures. The shipped YAML configs carry the same
// numbers.
namespace vehicles {

PackSpec id3();
PackSpec cupra_born();  // ID.3 pack with fleet variation
PackSpec taycan();
PackSpec model3_lfp();
PackSpec model_y();

SensorSpec vw_sensor();     // 0.25 V / 0.1 A / 0.4 %, 0.1 to 1 Hz
SensorSpec tesla_sensor();  // 0.1 V / 0.1 A / 0.1 %, 100 Hz

// Preset by name: "id3", "cupra_born", "taycan", "model3_lfp", "model_y".
PackSpec by_name(std::string_view name);
std::vector<std::string> names();

}  // namespace vehicles
}  // namespace evsoh
