// CSV and JSON persistence for telemetry, cycle reports and optimizer output.
// Numbers are written with 9 significant digits.
#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kitepower/optimizer.hpp"
#include "kitepower/simulation.hpp"

namespace kitepower::io {

/// "%.9g"
std::string format_number(double value);

inline constexpr const char* kTelemetryHeader =
    "t,phi,theta,psi,l,delta,v_winch_cmd,v_winch_actual,v_a,gamma_s,psi_s,psi_c,phase,F,P_mech";
inline constexpr const char* kCycleHeader = "t,theta,l,psi,l_dot,v_a,F,P";

/// One CSV row; phi, psi, gamma_s, psi_s and psi_c are wrapped to (-pi, pi].
std::string telemetry_row(const TelemetryRecord& r);

/// Streams telemetry rows and flushes whenever simulated time passes a
/// whole second.
class TelemetryWriter {
public:
    explicit TelemetryWriter(const std::filesystem::path& path);
    void write(const TelemetryRecord& r);
    void flush();

private:
    std::ofstream out_;
    long last_second_ = -1;
};

void write_telemetry(std::ostream& out, std::span<const TelemetryRecord> records);
std::vector<TelemetryRecord> read_telemetry(std::istream& in);

std::string cycle_reports_json(std::span<const CycleReport> reports);

void write_cycle(std::ostream& out, const optimizer::OptimalCycle& cycle);
std::vector<optimizer::CycleSample> read_cycle(std::istream& in);

/// Summary of an optimizer run.
std::string optimizer_summary_json(const optimizer::OptimalCycle& cycle, double p_loyd);

/// Reads a whole file; throws Error(Io).
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace kitepower::io
