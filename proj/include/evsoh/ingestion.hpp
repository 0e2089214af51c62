#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "evsoh/session.hpp"

namespace evsoh {

enum class TraceFormat { csv, jsonl };

TraceFormat trace_format_from_string(std::string_view s);
// ".jsonl" / ".json" select JSONL, everything else CSV.
TraceFormat trace_format_for(const std::filesystem::path& path);

// Mandatory columns t, u, i; optional soc, temp0..tempK, cell0..cellN.
// Malformed rows are skipped and recorded in RawTraces::malformed.
RawTraces parse_trace(std::istream& in, TraceFormat format);
RawTraces read_trace(const std::filesystem::path& path);

// Shortest round-trip formatting: parse(write(x)) == x.
void write_trace(std::ostream& out, const RawTraces& traces, TraceFormat format);
void write_trace(const std::filesystem::path& path, const RawTraces& traces);

// Linear interpolation of every channel onto a uniform grid covering the
// intersection of all channel spans.
ChargingSession synchronize(const RawTraces& raw, double grid_step = 1.0);

// Samples from the first voltage >= u_low through the first voltage >= u_high
// (inclusive). Crossings are taken on the voltage channel as given, so smooth
// first.
ChargingSession crop_to_window(const ChargingSession& session, double u_low, double u_high);

// Same on the BMS-SOC channel. Without a sample >= soc_high the crop runs to
// the end of the charge.
ChargingSession crop_to_soc_window(const ChargingSession& session, double soc_low, double soc_high);

// Forward (trailing) mean filter; window = ceil(fraction * n). The first
// window-1 outputs average the available prefix.
std::vector<double> smooth(std::span<const double> values, double fraction = 0.01);
std::size_t smoothing_window(std::size_t length, double fraction);

// Smooths voltage, current and power with one window so that they share the
// same lag.
ChargingSession smooth_session(const ChargingSession& session, double fraction = 0.01);

}  // namespace evsoh
