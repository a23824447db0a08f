#include "sdlr/experiments.hpp"

#include "sdlr/encoding.hpp"
#include "sdlr/noise_shaping.hpp"
#include "sdlr/random.hpp"
#include "sdlr/sigma_delta.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sdlr {

Matrix make_low_rank(Index n1, Index n2, Index k, std::uint64_t seed) {
    if (k < 0 || k > std::min(n1, n2))
        throw std::invalid_argument("make_low_rank: k must lie in [0, min(n1, n2)]");
    Rng rng(seed);
    return sample_low_rank(n1, n2, k, rng);
}

ScaledMatrix measurement_scaling(const Matrix& x, const DenseMatrixMap& op, double mu) {
    if (!(mu > 0)) throw std::invalid_argument("measurement_scaling: mu must be positive");
    ScaledMatrix out{x, 1.0, {}};
    if (x.size() == 0 || x.isZero(0.0)) {
        out.note = "zero matrix left unchanged";
        return out;
    }
    const double peak = op.apply(x).cwiseAbs().maxCoeff();
    if (peak <= mu) {
        out.note = "already within bound";
        return out;
    }
    out.scale = mu / peak;
    out.matrix = x * out.scale;
    // Rounding in the product can land a hair above μ.
    while (op.apply(out.matrix).cwiseAbs().maxCoeff() > mu) {
        out.scale = std::nextafter(out.scale, 0.0);
        out.matrix = x * out.scale;
    }
    std::ostringstream note;
    note.precision(17);
    note << "scaled by " << out.scale;
    out.note = note.str();
    return out;
}

int select_order(double lambda, double c1) {
    if (!(lambda > 0) || !(c1 > 0)) throw std::invalid_argument("select_order: lambda and C1 must be positive");
    const double inner = std::floor(lambda / (2.0 * c1 * std::numbers::e));
    const int r = static_cast<int>(std::floor(std::sqrt(inner)));
    return std::max(1, r);
}

namespace {

SlopeFit least_squares(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) throw std::invalid_argument("fit_slope: need at least two points");
    double mx = 0, my = 0;
    for (auto [x, y] : pts) mx += x, my += y;
    mx /= pts.size();
    my /= pts.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 1e-300)) throw std::invalid_argument("fit_slope: abscissae are degenerate");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points, FitMode mode) {
    std::vector<std::pair<double, double>> t;
    t.reserve(points.size());
    for (auto [x, y] : points) {
        if (!(y > 0) || (mode == FitMode::loglog && !(x > 0)))
            throw std::invalid_argument("fit_slope: logarithmic coordinates need positive values");
        t.emplace_back(mode == FitMode::loglog ? std::log(x) : x, std::log(y));
    }
    return least_squares(t);
}

std::vector<GroupMean> group_means(const std::vector<TrialRecord>& records) {
    std::vector<GroupMean> out;
    for (const auto& t : records) {
        auto it = std::find_if(out.begin(), out.end(), [&](const GroupMean& g) {
            return g.r == t.r && g.lambda == t.lambda && g.eps == t.eps;
        });
        if (it == out.end()) {
            out.push_back(GroupMean{t.r, t.lambda, t.eps, t.m});
            it = std::prev(out.end());
        }
        it->err_frobenius += t.err_frobenius;
        it->err_relative += t.err_relative;
        it->rate_bits += static_cast<double>(t.rate_bits.value_or(0));
        it->rate_bits_ln += static_cast<double>(t.rate_bits_ln.value_or(0));
        ++it->count;
    }
    for (auto& g : out) {
        const double n = static_cast<double>(g.count);
        g.err_frobenius /= n;
        g.err_relative /= n;
        g.rate_bits /= n;
        g.rate_bits_ln /= n;
    }
    return out;
}

namespace {

constexpr std::uint64_t kOperatorStream = 1ull << 32;
constexpr std::uint64_t kFreshStream = 2ull << 32;
constexpr std::uint64_t kEncoderStream = 3ull << 32;

std::uint64_t experiment_id(SweepKind k) {
    switch (k) {
        case SweepKind::oversampling: return 1;
        case SweepKind::noise: return 2;
        case SweepKind::rate_distortion: return 3;
    }
    return 0;
}

struct Job {
    int order;
    double lambda;
    double eps;
    Index trial;
};

/// Operators, bases and encoders shared by the trials of one sweep. Filled
/// serially before workers start; read-only afterwards.
class SweepContext {
public:
    SweepContext(SweepKind kind, const ExperimentConfig& cfg)
        : kind_(kind), cfg_(cfg), id_(experiment_id(kind)),
          cache_(cfg.basis_cache_dir(), cfg.svd_budget) {}

    void prepare(const std::vector<Job>& jobs) {
        for (const auto& j : jobs) {
            const Index m = cfg_.rows_for(j.lambda);
            if (cfg_.operator_mode == OperatorMode::fixed && !operators_.count(m)) operators_[m] = draw_fixed(m);
            if (cfg_.constraint_form != ConstraintForm::encoded) basis(m, j.order);
            if (cfg_.constraint_form == ConstraintForm::encoded && !encoders_.count(m))
                encoders_[m] = std::make_shared<const EncoderMatrix>(
                    draw_encoder(cfg_.encoder_dim, m, derive_seed(cfg_.master_seed, id_, kEncoderStream + m)));
        }
    }

    std::shared_ptr<const MeasurementOperator> op(Index m, Index trial) const {
        if (cfg_.operator_mode == OperatorMode::fixed) {
            if (auto it = operators_.find(m); it != operators_.end()) return it->second;
            return draw_fixed(m);
        }
        const std::uint64_t idx = kFreshStream + (static_cast<std::uint64_t>(m) << 20) + static_cast<std::uint64_t>(trial);
        return std::make_shared<const MeasurementOperator>(
            draw_operator(m, cfg_.n1, cfg_.n2, cfg_.distribution, derive_seed(cfg_.master_seed, id_, idx)));
    }

    std::shared_ptr<const NoiseShapingBasis> basis(Index m, int order) {
        return cache_.get(m, order, cfg_.ell);
    }

    std::shared_ptr<const EncoderMatrix> encoder(Index m) const {
        if (auto it = encoders_.find(m); it != encoders_.end()) return it->second;
        return std::make_shared<const EncoderMatrix>(
            draw_encoder(cfg_.encoder_dim, m, derive_seed(cfg_.master_seed, id_, kEncoderStream + m)));
    }

    std::uint64_t id() const { return id_; }
    SweepKind kind() const { return kind_; }

private:
    std::shared_ptr<const MeasurementOperator> draw_fixed(Index m) const {
        return std::make_shared<const MeasurementOperator>(draw_operator(
            m, cfg_.n1, cfg_.n2, cfg_.distribution, derive_seed(cfg_.master_seed, id_, kOperatorStream + m)));
    }

    SweepKind kind_;
    const ExperimentConfig& cfg_;
    std::uint64_t id_;
    BasisCache cache_;
    std::map<Index, std::shared_ptr<const MeasurementOperator>> operators_;
    std::map<Index, std::shared_ptr<const EncoderMatrix>> encoders_;
};

int levels_for(const ExperimentConfig& cfg, int order, double observed_peak) {
    if (!cfg.levels.empty()) {
        auto it = std::find(cfg.orders.begin(), cfg.orders.end(), order);
        if (it != cfg.orders.end()) return cfg.levels[static_cast<std::size_t>(it - cfg.orders.begin())];
    }
    return required_levels(observed_peak, cfg.beta, order);
}

TrialOutcome execute(SweepContext& ctx, const ExperimentConfig& cfg, const Job& job) {
    TrialOutcome out;
    const Index m = cfg.rows_for(job.lambda);
    const std::uint64_t seed = derive_seed(cfg.master_seed, ctx.id(), static_cast<std::uint64_t>(job.trial));
    Rng rng(seed);
    auto op = ctx.op(m, job.trial);

    Matrix x = sample_low_rank(cfg.n1, cfg.n2, cfg.rank, rng);
    double scale = 1.0;
    if (cfg.mu) {
        auto scaled = measurement_scaling(x, *op, *cfg.mu);
        x = std::move(scaled.matrix);
        scale = scaled.scale;
    }

    Vector noise = Vector::Zero(m);
    if (job.eps > 0) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Index i = 0; i < m; ++i) noise[i] = unif(rng);
        const double peak = noise.cwiseAbs().maxCoeff();
        noise *= job.eps / peak;
    }
    const Vector y = op->apply(x) + noise;

    const int levels = levels_for(cfg, job.order, y.cwiseAbs().maxCoeff());
    Alphabet alphabet = build_alphabet(levels, cfg.beta);
    SigmaDeltaScheme scheme = cfg.stability_model == StabilityModel::parametric
                                  ? SigmaDeltaScheme::parametric(job.order, alphabet, cfg.stability_growth)
                                  : SigmaDeltaScheme::greedy(job.order, alphabet);
    if (cfg.gamma) scheme.stability_constant = *cfg.gamma;
    const QuantizationRun run = quantize(y, scheme);

    RecoveryProblem& p = out.problem;
    p.op = op;
    p.quantized = run.output;
    p.order = job.order;
    p.gamma = scheme.stability_constant;
    p.step = cfg.beta;
    p.noise_bound = job.eps;
    p.constraint_form = cfg.constraint_form;
    if (p.constraint_form != ConstraintForm::encoded) p.basis = ctx.basis(m, job.order);
    if (p.constraint_form == ConstraintForm::encoded) p.encoder = ctx.encoder(m);

    out.solution = p.constraint_form == ConstraintForm::encoded ? recover_encoded(p, cfg.solver)
                                                                 : recover(p, cfg.solver);

    TrialRecord& t = out.record;
    t.r = job.order;
    t.m = m;
    t.ell = cfg.ell;
    t.lambda = job.lambda;
    t.trial_index = job.trial;
    t.seed = seed;
    const double truth_norm = x.norm();
    t.err_frobenius = (out.solution.estimate - x).norm();
    t.err_relative = truth_norm > 0 ? t.err_frobenius / truth_norm : t.err_frobenius;
    t.objective = out.solution.objective;
    t.sigma_k_tail = best_rank_k_error(x, cfg.rank);
    t.eps = job.eps;
    if (p.constraint_form == ConstraintForm::encoded) {
        const auto enc = encode(run.output, job.order, *p.encoder, alphabet.max_value());
        t.rate_bits = enc.rate_bits;
        t.rate_bits_ln = enc.rate_bits_ln;
        t.encoder_dim = p.encoder->out_dim;
        t.encoder_seed = p.encoder->seed;
    }
    t.overflow = run.overflow;
    t.iterations = out.solution.iterations;
    t.converged = out.solution.converged;
    t.truth_nuclear = nuclear_norm(x);
    t.truth_feasible = check_feasibility(p, x, noise).feasible();
    t.scale = scale;

    out.truth = std::move(x);
    out.noise = std::move(noise);
    return out;
}

std::vector<Job> build_jobs(SweepKind kind, const ExperimentConfig& cfg) {
    std::vector<Job> jobs;
    const std::vector<double> eps_grid = kind == SweepKind::noise ? cfg.epsilon : std::vector<double>{0.0};
    auto push_cell = [&](int r, double lam) {
        for (double e : eps_grid)
            for (Index t = 0; t < cfg.trials; ++t) jobs.push_back({r, lam, e, t});
    };
    if (cfg.order_selection_c1) {
        for (double lam : cfg.oversampling) push_cell(select_order(lam, *cfg.order_selection_c1), lam);
        std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.order < b.order; });
    } else {
        for (int r : cfg.orders)
            for (double lam : cfg.oversampling) push_cell(r, lam);
    }
    return jobs;
}

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

std::string summary_header(SweepKind kind, const ExperimentConfig& cfg, const SweepResult& res) {
    std::ostringstream o;
    o << "sdlr " << kToolVersion << " sweep: " << to_string(kind) << '\n'
      << "n1=" << cfg.n1 << " n2=" << cfg.n2 << " rank=" << cfg.rank << " ell=" << cfg.ell
      << " beta=" << cfg.beta << " trials=" << cfg.trials << " master_seed=" << cfg.master_seed
      << " constraint=" << to_string(cfg.constraint_form)
      << " mu=" << (cfg.mu ? fmt(*cfg.mu) : std::string("none"))
      << " operator_mode=" << (cfg.operator_mode == OperatorMode::fixed ? "fixed" : "fresh");
    if (cfg.constraint_form == ConstraintForm::encoded) o << " encoder_dim=" << cfg.encoder_dim;
    o << "\nrecords=" << res.records.size() << " failures=" << res.failures.size();
    Index nonconv = 0, overflow = 0, infeasible = 0;
    for (const auto& t : res.records) {
        nonconv += !t.converged;
        overflow += t.overflow;
        infeasible += !t.truth_feasible;
    }
    o << " not_converged=" << nonconv << " overflow=" << overflow << " truth_infeasible=" << infeasible << "\n";
    for (const auto& f : res.failures) o << "failure: " << f << '\n';
    return o.str();
}

std::string oversampling_summary(const std::vector<GroupMean>& groups) {
    std::ostringstream o;
    std::map<int, std::vector<const GroupMean*>> by_r;
    for (const auto& g : groups) by_r[g.r].push_back(&g);
    for (const auto& [r, gs] : by_r) {
        o << "\nr=" << r << "\n  lambda        m  mean_err_frobenius  mean_err_relative\n";
        std::vector<std::pair<double, double>> pts;
        for (const auto* g : gs) {
            char line[160];
            std::snprintf(line, sizeof line, "  %6g %8lld  %18.6g  %17.6g\n", g->lambda,
                          static_cast<long long>(g->m), g->err_frobenius, g->err_relative);
            o << line;
            if (g->err_frobenius > 0) pts.emplace_back(g->lambda, g->err_frobenius);
        }
        if (pts.size() >= 2) {
            const auto f = fit_slope(pts, FitMode::loglog);
            o << "  loglog slope of mean error vs lambda: " << fmt(f.slope) << " (R^2 " << fmt(f.r_squared)
              << ", intercept " << fmt(f.intercept) << "); predicted exponent " << fmt(-r + 0.5) << '\n';
        }
    }
    return o.str();
}

std::string noise_summary(const std::vector<GroupMean>& groups) {
    std::ostringstream o;
    std::map<int, std::vector<const GroupMean*>> by_r;
    for (const auto& g : groups) by_r[g.r].push_back(&g);
    for (const auto& [r, gs] : by_r) {
        o << "\nr=" << r << " lambda=" << gs.front()->lambda << "\n  eps  mean_err_frobenius  mean_err_relative\n";
        std::vector<std::pair<double, double>> pts;
        for (const auto* g : gs) {
            char line[160];
            std::snprintf(line, sizeof line, "  %5g  %18.6g  %17.6g\n", g->eps, g->err_frobenius, g->err_relative);
            o << line;
            pts.emplace_back(g->eps, g->err_frobenius);
        }
        if (pts.size() >= 2) {
            const auto f = least_squares(pts);
            o << "  linear slope of mean error vs eps: " << fmt(f.slope) << " (R^2 " << fmt(f.r_squared) << ")\n";
        }
    }
    return o.str();
}

std::string rate_summary(const std::vector<GroupMean>& groups) {
    std::ostringstream o;
    std::map<int, std::vector<const GroupMean*>> by_r;
    for (const auto& g : groups) by_r[g.r].push_back(&g);
    for (const auto& [r, gs] : by_r) {
        o << "\nr=" << r << "\n  lambda        m  rate_bits  rate_bits_ln  mean_err_frobenius\n";
        std::vector<std::pair<double, double>> log2_pts, ln_pts;
        for (const auto* g : gs) {
            char line[200];
            std::snprintf(line, sizeof line, "  %6g %8lld  %9.0f  %12.0f  %18.6g\n", g->lambda,
                          static_cast<long long>(g->m), g->rate_bits, g->rate_bits_ln, g->err_frobenius);
            o << line;
            if (g->err_frobenius > 0) {
                log2_pts.emplace_back(g->rate_bits, g->err_frobenius);
                ln_pts.emplace_back(g->rate_bits_ln, g->err_frobenius);
            }
        }
        auto report = [&](const char* name, const std::vector<std::pair<double, double>>& pts) {
            if (pts.size() < 2) return;
            const auto f = fit_slope(pts, FitMode::semilog);
            o << "  semilog slope vs " << name << ": ln " << fmt(f.slope) << ", log10 "
              << fmt(f.slope / std::numbers::ln10) << " (R^2 " << fmt(f.r_squared) << ")\n";
        };
        report("rate_bits", log2_pts);
        report("rate_bits_ln", ln_pts);
    }
    return o.str();
}

}  // namespace

TrialOutcome run_single_trial(SweepKind kind, const ExperimentConfig& cfg, int order, double lambda,
                              double eps, Index trial_index) {
    cfg.validate(kind);
    SweepContext ctx(kind, cfg);
    return execute(ctx, cfg, Job{order, lambda, eps, trial_index});
}

SweepResult run_sweep(SweepKind kind, const ExperimentConfig& cfg) {
    cfg.validate(kind);
    if (cfg.order_selection_c1 && !cfg.levels.empty())
        throw std::invalid_argument("config: order selection requires levels = auto");
    const auto jobs = build_jobs(kind, cfg);
    SweepContext ctx(kind, cfg);
    ctx.prepare(jobs);

    std::vector<std::optional<TrialRecord>> slots(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            try {
                slots[i] = execute(ctx, cfg, jobs[i]).record;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepResult res;
    res.kind = kind;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (slots[i]) {
            res.records.push_back(*slots[i]);
        } else {
            std::ostringstream f;
            f << "r=" << jobs[i].order << " lambda=" << jobs[i].lambda << " eps=" << jobs[i].eps
              << " trial=" << jobs[i].trial << ": " << errors[i];
            res.failures.push_back(f.str());
        }
    }
    if (res.failures.size() * 5 > jobs.size())
        throw std::runtime_error("sweep aborted: " + std::to_string(res.failures.size()) + " of " +
                                 std::to_string(jobs.size()) + " trials failed; first: " + res.failures.front());

    const auto groups = group_means(res.records);
    res.summary = summary_header(kind, cfg, res);
    switch (kind) {
        case SweepKind::oversampling: res.summary += oversampling_summary(groups); break;
        case SweepKind::noise: res.summary += noise_summary(groups); break;
        case SweepKind::rate_distortion: res.summary += rate_summary(groups); break;
    }
    return res;
}

SweepResult run_oversampling_sweep(const ExperimentConfig& cfg) { return run_sweep(SweepKind::oversampling, cfg); }
SweepResult run_noise_sweep(const ExperimentConfig& cfg) { return run_sweep(SweepKind::noise, cfg); }
SweepResult run_rate_distortion(const ExperimentConfig& cfg) { return run_sweep(SweepKind::rate_distortion, cfg); }

namespace {

const char* kPlotPrologue = R"py(import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = []
with open(here / "{csv}") as fh:
    lines = [line for line in fh if not line.startswith("#")]
for row in csv.DictReader(lines):
    rows.append(row)

groups = defaultdict(list)
)py";

std::string plot_script(SweepKind kind) {
    const std::string name = to_string(kind);
    std::string s = kPlotPrologue;
    s.replace(s.find("{csv}"), 5, name + ".csv");
    switch (kind) {
        case SweepKind::oversampling:
            s += R"py(for row in rows:
    groups[(int(row["r"]), float(row["lambda"]))].append(float(row["err_frobenius"]))

fig, ax = plt.subplots()
for r in sorted({key[0] for key in groups}):
    lams = sorted(lam for (rr, lam) in groups if rr == r)
    means = [sum(groups[(r, lam)]) / len(groups[(r, lam)]) for lam in lams]
    ax.loglog(lams, means, "o-", label=f"r = {r}")
ax.set_xlabel("oversampling factor m / ell")
ax.set_ylabel("mean Frobenius error")
)py";
            break;
        case SweepKind::noise:
            s += R"py(for row in rows:
    groups[(int(row["r"]), float(row["eps"]))].append(float(row["err_frobenius"]))

fig, ax = plt.subplots()
for r in sorted({key[0] for key in groups}):
    eps = sorted(e for (rr, e) in groups if rr == r)
    means = [sum(groups[(r, e)]) / len(groups[(r, e)]) for e in eps]
    ax.plot(eps, means, "o-", label=f"r = {r}")
ax.set_xlabel("noise level eps")
ax.set_ylabel("mean Frobenius error")
)py";
            break;
        case SweepKind::rate_distortion:
            s += R"py(column = sys.argv[1] if len(sys.argv) > 1 else "rate_bits_ln"
for row in rows:
    groups[(int(row["r"]), float(row["lambda"]))].append((float(row[column]), float(row["err_frobenius"])))

fig, ax = plt.subplots()
for r in sorted({key[0] for key in groups}):
    lams = sorted(lam for (rr, lam) in groups if rr == r)
    rates = [sum(p[0] for p in groups[(r, lam)]) / len(groups[(r, lam)]) for lam in lams]
    means = [sum(p[1] for p in groups[(r, lam)]) / len(groups[(r, lam)]) for lam in lams]
    ax.semilogy(rates, means, "o-", label=f"r = {r}")
ax.set_xlabel(f"rate in bits ({column})")
ax.set_ylabel("mean Frobenius error")
)py";
            break;
    }
    s += "ax.legend()\nax.grid(True, which=\"both\", alpha=0.3)\nfig.savefig(here / \"" + name +
         ".png\", dpi=150, bbox_inches=\"tight\")\n";
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string name = to_string(result.kind);
    write_csv(dir / (name + ".csv"), result.records);
    write_text(dir / (name + "_summary.txt"), result.summary);
    write_text(dir / ("plot_" + name + ".py"), plot_script(result.kind));
}

}  // namespace sdlr
