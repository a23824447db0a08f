#pragma once

#include "sdlr/recovery.hpp"
#include "sdlr/sensing.hpp"
#include "sdlr/sigma_delta.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdlr {

enum class SweepKind { oversampling, noise, rate_distortion };

std::string to_string(SweepKind k);

/// fixed: one operator per (experiment, λ), X redrawn per trial.
/// fresh: operator redrawn for every trial.
enum class OperatorMode { fixed, fresh };

/// Experiment definition, read from a flat `key = value` text file
/// (see docs/config_format.md). Lists are comma separated.
struct ExperimentConfig {
    Index n1 = 10;
    Index n2 = 10;
    Index rank = 2;
    Index ell = 80;
    std::vector<double> oversampling{2, 4, 8, 16};  // λ = m/ℓ (m/L_enc for rate sweeps)
    std::vector<int> orders{1, 2, 3};
    double beta = 0.5;
    std::vector<int> levels;  // empty: required_levels from the observed ‖y‖∞
    std::vector<double> epsilon{0.0};
    Index trials = 10;
    std::uint64_t master_seed = 20190607;
    ConstraintForm constraint_form = ConstraintForm::projected;
    Index encoder_dim = 0;
    std::string output_path = "results";

    Distribution distribution = Distribution::gaussian;
    std::optional<double> mu;  // rescale so that ‖M(X)‖∞ ≤ μ; unset keeps X as drawn
    OperatorMode operator_mode = OperatorMode::fixed;
    int workers = 1;
    SolverParams solver;
    Index svd_budget = kDefaultSvdBudget;
    std::string cache_dir;  // empty: <output_path>/basis_cache
    std::optional<double> gamma;  // override of the scheme's stability constant
    StabilityModel stability_model = StabilityModel::exact_half_step;
    double stability_growth = 1.0;
    std::optional<double> order_selection_c1;

    /// m for a given λ: λ·ℓ, or λ·L_enc for the encoded form.
    Index rows_for(double lambda) const;
    std::filesystem::path basis_cache_dir() const;
    void validate(SweepKind kind) const;
};

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string to_text(const ExperimentConfig& cfg);

/// Desk-scale presets for each sweep.
ExperimentConfig desk_config(SweepKind kind);
/// Full-size parameters (long-running; needs a
/// raised SVD budget).
ExperimentConfig paper_scale_config(SweepKind kind);

}  // namespace sdlr
