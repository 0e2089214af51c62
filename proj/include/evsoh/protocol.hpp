#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evsoh/pack_model.hpp"
#include "evsoh/session.hpp"

namespace evsoh {

struct ProtocolSpec {
    double min_duration_h = 15.0;
    double temp_center_c = 20.0;
    double temp_tolerance_c = 5.0;
    double settle_rate_per_cell = 0.001;  // V/s per series cell
    VoltageWindow window;
    double rest_min_minutes = 30.0;
    double settle_confirmation_s = 60.0;
    double cp_tolerance = 0.05;         // relative band around the median power
    double current_threshold_a = 0.5;   // |I| below this counts as rest

    void validate() const;
};

// Upper bound on the charging power for a full charge lasting `t_hours`.
double max_charge_power(double e_n_kwh, double t_hours);

struct SettleResult {
    bool settled = false;
    double settle_time_s = 0.0;  // relative to the first sample
};

// Settled at the first sample from which, for the whole confirmation span,
// either |dU/dt| < rate_per_cell * n_series or the voltage varies by less
// than one sensor resolution step.
SettleResult check_rest_settled(const Signal& voltage, int n_series, double voltage_resolution,
                                double rate_per_cell = 0.001, double confirmation_s = 60.0);

enum class CheckId { power_cap, temperature, window_coverage, rest_duration, rest_settled, constant_power };
enum class CheckStatus { pass, fail, unverifiable };
enum class Verdict { compliant, non_compliant };

std::string_view to_string(CheckId id);
std::string_view to_string(CheckStatus s);
std::string_view to_string(Verdict v);
CheckId check_id_from_string(std::string_view s);

struct Finding {
    CheckId check;
    CheckStatus status;
    std::optional<double> measured;
    std::optional<double> limit;
    std::string detail;
};

struct ValidationReport {
    Verdict verdict = Verdict::non_compliant;
    std::vector<Finding> findings;

    const Finding* find(CheckId id) const;
    bool compliant() const { return verdict == Verdict::compliant; }
};

struct ValidationOptions {
    std::set<CheckId> disabled;
    double voltage_resolution = 0.25;
    double smoothing_fraction = 0.01;
};

// Checks a synchronized, uncropped session against the standard measurement
// conditions. Disabled checks produce no finding.
ValidationReport validate_session(const ChargingSession& session, const ProtocolSpec& protocol,
                                  const PackSpec& spec, const ValidationOptions& options = {});

}  // namespace evsoh
