#pragma once

#include "sdlr/config.hpp"
#include "sdlr/csv.hpp"
#include "sdlr/recovery.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sdlr {

/// X = Σ_{i≤k} α_i u_i v_iᵀ with standard normal α, u, v; deterministic in seed.
Matrix make_low_rank(Index n1, Index n2, Index k, std::uint64_t seed);

struct ScaledMatrix {
    Matrix matrix;
    double scale = 1.0;
    std::string note;
};

/// Shrinks X so that ‖M(X)‖∞ ≤ μ. Matrices already inside the bound, and the
/// zero matrix, come back unchanged with scale 1.
ScaledMatrix measurement_scaling(const Matrix& x, const DenseMatrixMap& op, double mu = 0.9);

/// r = max(1, ⌊√⌊λ/(2 C₁ e)⌋⌋)
int select_order(double lambda, double c1);

enum class FitMode { loglog, semilog };

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

/// Least-squares line through (x, y) after taking natural logs of both
/// coordinates (loglog) or of y only (semilog). Needs two distinct abscissae.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points, FitMode mode);

struct SweepResult {
    SweepKind kind = SweepKind::oversampling;
    std::vector<TrialRecord> records;
    std::vector<std::string> failures;
    std::string summary;
};

SweepResult run_oversampling_sweep(const ExperimentConfig& cfg);
SweepResult run_noise_sweep(const ExperimentConfig& cfg);
SweepResult run_rate_distortion(const ExperimentConfig& cfg);
SweepResult run_sweep(SweepKind kind, const ExperimentConfig& cfg);

/// Writes <dir>/<kind>.csv, <dir>/<kind>_summary.txt and <dir>/plot_<kind>.py.
void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir);

/// Trial-mean of a column grouped by (r, λ, ε), in record order.
struct GroupMean {
    int r = 1;
    double lambda = 0.0;
    double eps = 0.0;
    Index m = 0;
    double err_frobenius = 0.0;
    double err_relative = 0.0;
    double rate_bits = 0.0;
    double rate_bits_ln = 0.0;
    Index count = 0;
};

std::vector<GroupMean> group_means(const std::vector<TrialRecord>& records);

/// Everything needed to rerun one pipeline instance outside a sweep.
struct TrialOutcome {
    TrialRecord record;
    Matrix truth;
    Vector noise;
    RecoveryProblem problem;
    RecoverySolution solution;
};

/// Runs trial `trial_index` of the given sweep cell exactly as the sweep would.
TrialOutcome run_single_trial(SweepKind kind, const ExperimentConfig& cfg, int order,
                              double lambda, double eps, Index trial_index);

}  // namespace sdlr
