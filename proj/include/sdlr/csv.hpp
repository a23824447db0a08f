#pragma once

#include "sdlr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdlr {

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// One recovery trial. Rate columns are empty outside rate-distortion runs.
struct TrialRecord {
    int r = 1;
    Index m = 0;
    Index ell = 0;
    double lambda = 0.0;
    Index trial_index = 0;
    std::uint64_t seed = 0;
    double err_frobenius = 0.0;
    double err_relative = 0.0;
    double objective = 0.0;
    double sigma_k_tail = 0.0;
    double eps = 0.0;
    std::optional<std::int64_t> rate_bits;
    std::optional<std::int64_t> rate_bits_ln;
    bool overflow = false;
    int iterations = 0;
    bool converged = false;
    double truth_nuclear = 0.0;
    bool truth_feasible = true;
    double scale = 1.0;  // factor applied to X before measuring
    std::optional<std::int64_t> encoder_dim;
    std::optional<std::uint64_t> encoder_seed;

    bool operator==(const TrialRecord&) const = default;
};

/// Column names in file order.
const std::vector<std::string>& csv_columns();

/// First line of every CSV: `# sdlr-trials schema=<v> tool=<version>`.
std::string csv_version_line();

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);

/// Everything after the version comment; the part that must be reproducible.
std::string csv_body(const std::vector<TrialRecord>& records);

std::vector<TrialRecord> read_csv(std::istream& in);
std::vector<TrialRecord> read_csv(const std::filesystem::path& path);

}  // namespace sdlr
