#include "evsoh/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"

namespace evsoh {
namespace {

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

Finding make(CheckId id, bool ok, std::optional<double> measured, std::optional<double> limit,
             std::string detail) {
    return {id, ok ? CheckStatus::pass : CheckStatus::fail, measured, limit, std::move(detail)};
}

Finding unverifiable(CheckId id, std::string detail) {
    return {id, CheckStatus::unverifiable, std::nullopt, std::nullopt, std::move(detail)};
}

// Leading zero-current samples form the pre-charge rest.
std::size_t charge_start(const ChargingSession& s, double threshold) {
    std::size_t k = 0;
    while (k < s.size() && s.current[k] <= threshold) ++k;
    return k;
}

std::size_t charge_end(const ChargingSession& s, std::size_t start, double threshold) {
    std::size_t k = s.size();
    while (k > start && s.current[k - 1] <= threshold) --k;
    return k;  // one past the last charging sample
}

}  // namespace

void ProtocolSpec::validate() const {
    std::vector<std::string> violated;
    if (!(min_duration_h > 0.0)) violated.push_back("min_duration > 0");
    if (!(temp_tolerance_c > 0.0)) violated.push_back("temp_tolerance > 0");
    if (!window.valid()) violated.push_back("U_low < U_high");
    if (!(settle_rate_per_cell > 0.0)) violated.push_back("settle_rate_per_cell > 0");
    if (rest_min_minutes < 0.0) violated.push_back("rest_min >= 0");
    if (!(settle_confirmation_s > 0.0)) violated.push_back("settle_confirmation > 0");
    if (!(cp_tolerance > 0.0)) violated.push_back("cp_tolerance > 0");
    if (!violated.empty()) {
        std::string msg = "invalid protocol spec: violated ";
        for (std::size_t k = 0; k < violated.size(); ++k) msg += (k ? "; " : "") + violated[k];
        throw ValidationError(msg);
    }
}

double max_charge_power(double e_n_kwh, double t_hours) {
    if (!(e_n_kwh > 0.0)) throw DomainError("net energy must be > 0");
    if (!(t_hours > 0.0)) throw DomainError("charging duration must be > 0");
    return e_n_kwh / t_hours * 1000.0;
}

SettleResult check_rest_settled(const Signal& voltage, int n_series, double voltage_resolution,
                                double rate_per_cell, double confirmation_s) {
    if (n_series < 1) throw DomainError("n_series must be >= 1");
    if (!(voltage_resolution > 0.0)) throw DomainError("voltage resolution must be > 0");
    if (!(confirmation_s > 0.0)) throw DomainError("confirmation span must be > 0");
    const auto& t = voltage.t;
    const auto& v = voltage.v;
    if (t.size() < 2 || t.back() - t.front() < confirmation_s)
        throw InsufficientDataError("rest trace spans " + fmt(t.empty() ? 0.0 : t.back() - t.front()) +
                                    " s, shorter than the " + fmt(confirmation_s) + " s confirmation span");
    const double rate_limit = rate_per_cell * n_series;
    const std::size_t n = t.size();

    // fast[k]: forward difference from sample k is below the rate limit.
    std::vector<char> fast(n, 0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = t[k + 1] - t[k];
        const double rate = dt > 0.0 ? std::abs(v[k + 1] - v[k]) / dt : 0.0;
        fast[k] = rate >= rate_limit;
    }
    // Count of too-fast steps in [0, k) for O(1) span queries.
    std::vector<std::size_t> fast_prefix(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) fast_prefix[k + 1] = fast_prefix[k] + static_cast<std::size_t>(fast[k]);

    std::size_t end = 0;
    for (std::size_t k = 0; k < n; ++k) {
        end = std::max(end, k);
        while (end + 1 < n && t[end + 1] <= t[k] + confirmation_s) ++end;
        if (t[end] - t[k] < confirmation_s) break;  // span no longer fits in the trace
        // steps k..end-1 cover [t_k, t_end]
        const bool slow = fast_prefix[end] - fast_prefix[k] == 0;
        bool flat = false;
        if (!slow) {
            const auto [mn, mx] = std::minmax_element(v.begin() + static_cast<std::ptrdiff_t>(k),
                                                      v.begin() + static_cast<std::ptrdiff_t>(end) + 1);
            flat = *mx - *mn < voltage_resolution;
        }
        if (slow || flat) return {true, t[k] - t.front()};
    }
    return {false, 0.0};
}

std::string_view to_string(CheckId id) {
    switch (id) {
        case CheckId::power_cap: return "power_cap";
        case CheckId::temperature: return "temperature";
        case CheckId::window_coverage: return "window_coverage";
        case CheckId::rest_duration: return "rest_duration";
        case CheckId::rest_settled: return "rest_settled";
        case CheckId::constant_power: return "constant_power";
    }
    return "unknown";
}

std::string_view to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::unverifiable: return "unverifiable";
    }
    return "unknown";
}

std::string_view to_string(Verdict v) { return v == Verdict::compliant ? "compliant" : "non_compliant"; }

CheckId check_id_from_string(std::string_view s) {
    for (auto id : {CheckId::power_cap, CheckId::temperature, CheckId::window_coverage, CheckId::rest_duration,
                    CheckId::rest_settled, CheckId::constant_power})
        if (to_string(id) == s) return id;
    throw DomainError("unknown check '" + std::string(s) + "'");
}

const Finding* ValidationReport::find(CheckId id) const {
    for (const auto& f : findings)
        if (f.check == id) return &f;
    return nullptr;
}

ValidationReport validate_session(const ChargingSession& session, const ProtocolSpec& protocol,
                                  const PackSpec& spec, const ValidationOptions& options) {
    protocol.validate();
    if (session.size() < 2) throw InsufficientDataError("session has fewer than two samples");
    const auto enabled = [&](CheckId id) { return !options.disabled.contains(id); };
    const double thr = protocol.current_threshold_a;
    const std::size_t c0 = charge_start(session, thr);
    const std::size_t c1 = charge_end(session, c0, thr);
    const ChargingSession smoothed = smooth_session(session, options.smoothing_fraction);

    std::optional<ChargingSession> cropped;
    std::string crop_error;
    try {
        cropped = crop_to_window(smoothed, protocol.window.low, protocol.window.high);
    } catch (const WindowNotCoveredError& e) {
        crop_error = e.what();
    }

    ValidationReport report;
    auto& out = report.findings;

    if (enabled(CheckId::power_cap)) {
        const double limit = max_charge_power(spec.nominal_energy_kwh, protocol.min_duration_h);
        const ChargingSession* span = cropped ? &*cropped : nullptr;
        ChargingSession charge;
        if (!span && c1 > c0 + 1) {
            charge = smoothed.slice(c0, c1);
            span = &charge;
        }
        if (!span || span->size() < 2) {
            out.push_back(unverifiable(CheckId::power_cap, "no charging segment"));
        } else {
            double energy = 0.0;
            for (std::size_t k = 1; k < span->size(); ++k)
                energy += 0.5 * (span->power[k] + span->power[k - 1]) * (span->time[k] - span->time[k - 1]);
            const double mean = energy / span->duration();
            out.push_back(make(CheckId::power_cap, mean <= limit, mean, limit,
                               "mean power " + fmt(mean) + " W over the " +
                                   (cropped ? std::string("window") : std::string("charge")) + ", limit " +
                                   fmt(limit) + " W (E_N / " + fmt(protocol.min_duration_h) + " h)"));
        }
    }

    if (enabled(CheckId::temperature)) {
        if (!session.has_temperature()) {
            out.push_back(unverifiable(CheckId::temperature, "no temperature channel"));
        } else {
            const std::size_t n_pre = std::max<std::size_t>(1, c0);
            double lo = 1e300, hi = -1e300;
            for (const auto& ch : session.temperatures)
                for (std::size_t k = 0; k < n_pre && k < ch.size(); ++k) {
                    lo = std::min(lo, ch[k]);
                    hi = std::max(hi, ch[k]);
                }
            const double dev = std::max(std::abs(lo - protocol.temp_center_c), std::abs(hi - protocol.temp_center_c));
            out.push_back(make(CheckId::temperature, dev <= protocol.temp_tolerance_c, dev,
                               protocol.temp_tolerance_c,
                               "pre-charge temperatures " + fmt(lo) + " to " + fmt(hi) + " C, allowed " +
                                   fmt(protocol.temp_center_c) + " +- " + fmt(protocol.temp_tolerance_c) + " C"));
        }
    }

    if (enabled(CheckId::window_coverage)) {
        const auto [mn, mx] = std::minmax_element(smoothed.voltage.begin(), smoothed.voltage.end());
        const bool below = *mn <= protocol.window.low;
        const bool above = cropped.has_value();
        std::string detail = "smoothed voltage spans " + fmt(*mn, 6) + " to " + fmt(*mx, 6) + " V, window " +
                             fmt(protocol.window.low, 6) + " to " + fmt(protocol.window.high, 6) + " V";
        if (!below) detail += "; relaxed pack did not start below U_low";
        if (!above) detail += "; " + crop_error;
        out.push_back(make(CheckId::window_coverage, below && above, *mx, protocol.window.high, detail));
    }

    const double rest_s = c0 > 0 ? session.time[c0 - 1] - session.time.front() +
                                       (c0 < session.size() ? session.time[c0] - session.time[c0 - 1] : 0.0)
                                 : 0.0;
    if (enabled(CheckId::rest_duration)) {
        const double need = protocol.rest_min_minutes * 60.0;
        out.push_back(make(CheckId::rest_duration, rest_s >= need, rest_s, need,
                           "pre-charge rest " + fmt(rest_s / 60.0) + " min, required " +
                               fmt(protocol.rest_min_minutes) + " min"));
    }

    if (enabled(CheckId::rest_settled)) {
        Signal rest;
        for (std::size_t k = 0; k < c0; ++k) rest.push(session.time[k], session.voltage[k]);
        try {
            const auto r = check_rest_settled(rest, spec.n_series, options.voltage_resolution,
                                              protocol.settle_rate_per_cell, protocol.settle_confirmation_s);
            out.push_back(make(CheckId::rest_settled, r.settled,
                               r.settled ? std::optional<double>(r.settle_time_s) : std::nullopt, std::nullopt,
                               r.settled ? "rest voltage settled after " + fmt(r.settle_time_s) + " s"
                                         : "rest voltage still moving at charge start"));
        } catch (const InsufficientDataError& e) {
            out.push_back(unverifiable(CheckId::rest_settled, e.what()));
        }
    }

    if (enabled(CheckId::constant_power)) {
        if (!cropped || cropped->size() < 2) {
            out.push_back(unverifiable(CheckId::constant_power, "window not covered; " + crop_error));
        } else {
            std::vector<double> p = cropped->power;
            std::nth_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(p.size() / 2), p.end());
            const double median = p[p.size() / 2];
            double dev = 0.0;
            for (double v : cropped->power) dev = std::max(dev, std::abs(v - median) / median);
            out.push_back(make(CheckId::constant_power, dev <= protocol.cp_tolerance, dev, protocol.cp_tolerance,
                               "smoothed power within " + fmt(100.0 * dev) + " % of its median " + fmt(median) +
                                   " W, band +- " + fmt(100.0 * protocol.cp_tolerance) + " %"));
        }
    }

    const bool all_pass = std::all_of(out.begin(), out.end(), [](const Finding& f) { return f.status == CheckStatus::pass; });
    report.verdict = all_pass ? Verdict::compliant : Verdict::non_compliant;
    return report;
}

}  // namespace evsoh
