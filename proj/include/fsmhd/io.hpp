#pragma once

#include "fsmhd/invlimit.hpp"
#include "fsmhd/layer.hpp"
#include "fsmhd/stepper.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <string>

namespace fsmhd {

// ---- checkpoints: raw little-endian doubles plus a JSON sidecar ----

// Writes <stem>.bin and <stem>.json; returns the path of the binary file.
std::string write_checkpoint(const std::string& stem, const MhdState& st, std::uint64_t seed, int step);
// Reads a .bin written by write_checkpoint and rebuilds the surface data.
MhdState read_checkpoint(const std::string& bin_path);

// ---- scalar step logs ----

class StepLog {
public:
    StepLog(const std::string& path, std::uint64_t seed);
    void row(int step, double t, double dt, const StepStats& s);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

// shortest round-trip decimal form, identical across runs
std::string format_double(double x);

// ---- reports ----

nlohmann::json to_json(const FitResult& f);
nlohmann::json to_json(const RateReport& r);
nlohmann::json to_json(const ScanTable& s);
// CSV with one row per ladder entry and one error column per norm
std::string rate_csv(const RateReport& r, std::uint64_t seed);

// Compact JSON dump with a trailing newline; throws ConfigError when the file cannot be written.
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace fsmhd
