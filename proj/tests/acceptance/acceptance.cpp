// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [work_dir]

#include "sdlr/config.hpp"
#include "sdlr/csv.hpp"
#include "sdlr/experiments.hpp"
#include "sdlr/noise_shaping.hpp"
#include "sdlr/recovery.hpp"
#include "sdlr/sensing.hpp"
#include "sdlr/sigma_delta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

using namespace sdlr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, std::string detail) {
    verdicts.push_back({id, pass, detail});
    std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

void note(const std::string& s) {
    std::printf("  info: %s\n", s.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int worker_count() {
    return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
}

Vector uniform_vector(Index m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> d(-bound, bound);
    Vector y(m);
    for (auto& v : y) v = d(rng);
    return y;
}

// Loglog slopes of trial-mean Frobenius error against λ, one per order.
std::map<int, SlopeFit> oversampling_slopes(const std::vector<TrialRecord>& records) {
    std::map<int, std::vector<std::pair<double, double>>> pts;
    for (const auto& g : group_means(records)) pts[g.r].emplace_back(g.lambda, g.err_frobenius);
    std::map<int, SlopeFit> out;
    for (const auto& [r, p] : pts) out[r] = fit_slope(p, FitMode::loglog);
    return out;
}

SweepResult run_and_write(SweepKind kind, ExperimentConfig cfg, const fs::path& dir) {
    cfg.output_path = dir.string();
    auto t0 = std::chrono::steady_clock::now();
    SweepResult res = run_sweep(kind, cfg);
    write_sweep_outputs(res, dir);
    note(fmt("%s sweep: %zu records in %.1f s (workers %d), outputs in %s", to_string(kind).c_str(),
             res.records.size(), seconds_since(t0), cfg.workers, dir.c_str()));
    for (const auto& f : res.failures) note("trial failure: " + f);
    return res;
}

// ---------------------------------------------------------------------------

double worst_residual = 0.0;
long residual_runs = 0;

void track(const QuantizationRun& run, int r) {
    worst_residual = std::max(worst_residual, state_residual(run, r));
    ++residual_runs;
}

void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(20190607, 101, 0));
    double worst = 0.0;
    long overflows = 0;
    for (int r = 1; r <= 3; ++r) {
        const auto scheme = SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(0.9, 0.5, r), 0.5));
        for (int t = 0; t < 1000; ++t) {
            const auto run = quantize(uniform_vector(320, 0.9, rng), scheme);
            worst = std::max(worst, run.max_state());
            overflows += run.overflow;
            track(run, r);
        }
    }
    report(1, worst <= 0.25 && overflows == 0,
           fmt("r=1..3, 1000 draws each, m=320: max|u|=%.6g (bound 0.25), overflow flags=%ld, %.2f s", worst,
               overflows, seconds_since(t0)));
}

void criterion2(const ExperimentConfig& noise_cfg) {
    auto t0 = std::chrono::steady_clock::now();
    // Edge runs: very short and long inputs, orders up to 4, a wider input range.
    Rng rng(derive_seed(20190607, 102, 0));
    for (int r = 1; r <= 4; ++r)
        for (Index m : {1, 2, 17, 5000, 20000}) {
            const auto scheme = SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(3.0, 0.5, r), 0.5));
            track(quantize(uniform_vector(m, 3.0, rng), scheme), r);
        }
    // Pipeline runs: recompute y for every noise-sweep trial and requantize.
    long mismatched = 0;
    for (int r : noise_cfg.orders)
        for (double lam : noise_cfg.oversampling)
            for (double eps : noise_cfg.epsilon)
                for (Index t = 0; t < noise_cfg.trials; ++t) {
                    const auto out = run_single_trial(SweepKind::noise, noise_cfg, r, lam, eps, t);
                    const Vector y = out.problem.op->apply(out.truth) + out.noise;
                    const auto scheme = SigmaDeltaScheme::greedy(
                        r, build_alphabet(required_levels(y.cwiseAbs().maxCoeff(), noise_cfg.beta, r), noise_cfg.beta));
                    const auto run = quantize(y, scheme);
                    mismatched += run.output != out.problem.quantized;
                    track(run, r);
                }
    report(2, worst_residual <= 1e-9 && mismatched == 0,
           fmt("%ld quantization runs (criterion 1, edge cases, every noise-sweep trial): max state_residual=%.3g "
               "(bound 1e-9), pipeline requantization mismatches=%ld, %.2f s",
               residual_runs, worst_residual, mismatched, seconds_since(t0)));
}

void criterion3() {
    auto t0 = std::chrono::steady_clock::now();
    long identity_failures = 0;
    double worst = 0.0;
    for (Index m = 1; m <= 100; ++m)
        for (int r = 1; r <= 3; ++r) {
            const IntMatrix inv = inverse_power_entries(m, r);
            IntMatrix d = IntMatrix::Identity(m, m);
            for (Index i = 1; i < m; ++i) d(i, i - 1) = -1;
            IntMatrix dr = IntMatrix::Identity(m, m);
            for (int k = 0; k < r; ++k) dr = dr * d;
            identity_failures += (inv * dr != IntMatrix::Identity(m, m));
            const Matrix oracle = inv.cast<double>();
            for (Index j = 0; j < m; ++j) {
                Vector e = Vector::Zero(m);
                e[j] = 1;
                const Vector col = apply_inverse_power(e, {m, r});
                worst = std::max(worst, (col - oracle.col(j)).cwiseAbs().maxCoeff() / std::max(1.0, oracle.col(j).cwiseAbs().maxCoeff()));
            }
        }
    report(3, identity_failures == 0 && worst <= 1e-10,
           fmt("m=1..100, r=1..3: integer identity failures=%ld, max column deviation=%.3g (bound 1e-10), %.2f s",
               identity_failures, worst, seconds_since(t0)));
}

SweepResult criterion4(const fs::path& work) {
    ExperimentConfig cfg = desk_config(SweepKind::oversampling);
    cfg.workers = worker_count();
    const auto res = run_and_write(SweepKind::oversampling, cfg, work / "oversampling");
    const auto s = oversampling_slopes(res.records);
    const double s1 = s.at(1).slope, s2 = s.at(2).slope, s3 = s.at(3).slope;
    const bool c1 = s1 <= -0.5, c2 = s2 <= s1 - 0.5, c3 = s3 <= s2;
    report(4, res.failures.empty() && c1 && c2 && c3,
           fmt("projected form, n=10 k=2 ell=80, lambda 2..16, 10 trials: slope r=1 %.3f (need <= -0.5: %s), "
               "r=2 %.3f (need <= %.3f: %s), r=3 %.3f (need <= %.3f: %s), failures=%zu",
               s1, c1 ? "ok" : "no", s2, s1 - 0.5, c2 ? "ok" : "no", s3, s2, c3 ? "ok" : "no", res.failures.size()));

    // Same grid under the full D^{-r} constraint, first order only.
    ExperimentConfig full = cfg;
    full.orders = {1};
    full.constraint_form = ConstraintForm::full_inverse_power;
    const auto fres = run_and_write(SweepKind::oversampling, full, work / "oversampling_full_r1");
    long capped = 0;
    for (const auto& t : fres.records) capped += !t.converged;
    note(fmt("full_inverse_power form, r=1: loglog slope %.3f (%ld of %zu trials not converged)",
             oversampling_slopes(fres.records).at(1).slope, capped, fres.records.size()));
    return res;
}

SweepResult criterion5(const fs::path& work, const ExperimentConfig& cfg) {
    const auto res = run_and_write(SweepKind::noise, cfg, work / "noise");
    std::vector<GroupMean> g = group_means(res.records);
    std::sort(g.begin(), g.end(), [](const GroupMean& a, const GroupMean& b) { return a.eps < b.eps; });
    int inversions = 0;
    bool inversion_in_band = true;
    std::string means;
    for (std::size_t i = 0; i < g.size(); ++i) {
        means += fmt("%s%.4g", i ? ", " : "", g[i].err_frobenius);
        if (i && g[i].err_frobenius < g[i - 1].err_frobenius) {
            ++inversions;
            inversion_in_band = inversion_in_band && g[i].err_frobenius >= 0.95 * g[i - 1].err_frobenius;
        }
    }
    const bool monotone = inversions == 0 || (inversions == 1 && inversion_in_band);
    const double c = (g[1].err_frobenius - g[0].err_frobenius) / (g[1].eps - g[0].eps);
    const double bound = g[0].err_frobenius + c * g.back().eps;
    const bool linear = g.back().err_frobenius <= bound;
    report(5, res.failures.empty() && monotone && linear,
           fmt("r=1 m=2ell, eps {0,0.25,0.5,1,2}: mean errors {%s}, inversions=%d, c=%.4g, error(2)=%.4g <= %.4g: %s",
               means.c_str(), inversions, c, g.back().err_frobenius, bound, linear ? "yes" : "no"));
    return res;
}

SweepResult criterion6(const fs::path& work) {
    ExperimentConfig cfg = desk_config(SweepKind::rate_distortion);
    cfg.workers = worker_count();
    const auto res = run_and_write(SweepKind::rate_distortion, cfg, work / "rate_distortion");
    std::vector<std::pair<double, double>> log2_pts, ln_pts;
    for (const auto& g : group_means(res.records)) {
        log2_pts.emplace_back(g.rate_bits, g.err_frobenius);
        ln_pts.emplace_back(g.rate_bits_ln, g.err_frobenius);
    }
    const auto f = fit_slope(log2_pts, FitMode::semilog);
    const auto ff = fit_slope(ln_pts, FitMode::semilog);
    long capped = 0;
    for (const auto& t : res.records) capped += !t.converged;
    report(6, res.failures.empty() && f.slope < 0 && f.r_squared >= 0.8,
           fmt("r=2 L_enc=80 lambda 2..16: semilog slope vs rate_bits %.4g per bit (ln), R^2 %.3f; "
               "vs ln rate %.4g, R^2 %.3f; %ld trials at the iteration cap",
               f.slope, f.r_squared, ff.slope, ff.r_squared, capped));
    return res;
}

void criterion7() {
    auto t0 = std::chrono::steady_clock::now();
    const Index ell = 160, m = 2 * ell;
    const std::uint64_t master = 20190607;
    const auto op = draw_operator(m, 10, 10, Distribution::gaussian, derive_seed(master, 4, m));
    bool ok = true;
    std::string detail;
    for (int r = 1; r <= 3; ++r) {
        const auto basis = compute_basis(m, r, ell);
        const auto est = empirical_rip(composed_operator(op, basis, ell), 2, 200, derive_seed(master, 4, 0));
        ok = ok && est.delta_hat <= 0.6 && std::abs(est.mean_ratio - 1.0) <= 0.1;
        detail += fmt("%sr=%d delta_hat=%.4f mean=%.4f", r > 1 ? "; " : "", r, est.delta_hat, est.mean_ratio);
    }
    report(7, ok, fmt("m=320 ell=160 k=2, 200 unit rank-2 samples: %s (bounds 0.6, |mean-1|<=0.1), %.2f s",
                      detail.c_str(), seconds_since(t0)));
}

struct OptimalityTally {
    long checked = 0;
    long violations = 0;
    double worst_excess = -1e300;
    void add(double objective, double truth) {
        ++checked;
        const double excess = objective - truth;
        worst_excess = std::max(worst_excess, excess / std::max(1.0, truth));
        violations += excess > 1e-3 * std::max(1.0, truth);
    }
};

OptimalityTally optimality;

void criterion8() {
    auto t0 = std::chrono::steady_clock::now();
    const ConstraintForm forms[] = {ConstraintForm::projected, ConstraintForm::full_inverse_power};
    double worst_gap = 0.0;
    long infeasible = 0, failures = 0, capped = 0;
    for (int i = 0; i < 20; ++i) {
        const std::uint64_t seed = derive_seed(20190607, 108, static_cast<std::uint64_t>(i));
        Rng rng(seed);
        const Index n = 3 + i % 6;
        const Index k = 1 + i % 2;
        const int r = 1 + i % 3;
        const Index m = std::min<Index>(200, 4 * n * n + 8 * i);
        const Matrix x = sample_low_rank(n, n, k, rng);
        auto op = std::make_shared<MeasurementOperator>(draw_operator(m, n, n, Distribution::gaussian, seed + 1));
        Vector y = op->apply(x);
        const double eps = (i % 4 == 3) ? 0.2 : 0.0;
        if (eps > 0) {
            std::uniform_real_distribution<double> u(0, 1);
            Vector e(m);
            for (auto& v : e) v = u(rng);
            y += e * (eps / e.cwiseAbs().maxCoeff());
        }
        const auto scheme = SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(y.cwiseAbs().maxCoeff(), 0.5, r), 0.5));
        RecoveryProblem p;
        p.op = op;
        p.quantized = quantize(y, scheme).output;
        p.order = r;
        p.gamma = scheme.stability_constant;
        p.noise_bound = eps;
        p.constraint_form = forms[i % 2];
        if (p.constraint_form == ConstraintForm::projected)
            p.basis = std::make_shared<NoiseShapingBasis>(compute_basis(m, r, std::max<Index>(1, m / 2)));
        try {
            const auto sol = recover(p);
            const auto ref = reference_solve(p);
            worst_gap = std::max(worst_gap, std::abs(sol.objective - ref.objective) / std::max(1.0, ref.objective));
            for (const auto* s : {&sol, &ref}) {
                const auto rep = check_feasibility(*s, p);
                if (rep.feasible()) continue;
                ++infeasible;
                note(fmt("instance %d (%s, n=%lld m=%lld r=%d eps=%.2g) %s solution infeasible: shaped %.10g / %.10g, "
                         "noise %.10g / %.10g, converged=%d",
                         i, to_string(p.constraint_form).c_str(), static_cast<long long>(n), static_cast<long long>(m), r,
                         eps, s == &sol ? "recover" : "reference", rep.shaped_lhs, rep.shaped_radius, rep.noise_lhs,
                         rep.noise_radius, int(s->converged)));
            }
            capped += !sol.converged;
            if (sol.converged) optimality.add(sol.objective, nuclear_norm(x));
        } catch (const std::exception& e) {
            ++failures;
            note(fmt("instance %d: %s", i, e.what()));
        }
    }
    report(8, failures == 0 && infeasible == 0 && worst_gap <= 1e-3,
           fmt("20 instances n=3..8 m<=200 (projected and full, 5 with noise): max relative objective gap=%.3g "
               "(bound 1e-3), infeasible solutions=%ld, solver errors=%ld, default solver at its iteration cap=%ld, %.2f s",
               worst_gap, infeasible, failures, capped, seconds_since(t0)));
}

void criterion9(const std::vector<const SweepResult*>& sweeps) {
    long not_converged = 0;
    for (const auto* s : sweeps)
        for (const auto& t : s->records) {
            if (t.converged) optimality.add(t.objective, t.truth_nuclear);
            else ++not_converged;
        }

    Rng rng(derive_seed(20190607, 109, 0));
    const Index n = 6, m = 8 * n;
    const Matrix x = sample_low_rank(n, n, 1, rng);
    RecoveryProblem p;
    auto op = std::make_shared<MeasurementOperator>(draw_operator(m, n, n, Distribution::gaussian, derive_seed(20190607, 109, 1)));
    p.op = op;
    p.quantized = op->apply(x);
    p.order = 1;
    p.gamma = 1e-6 / std::sqrt(static_cast<double>(m));
    p.constraint_form = ConstraintForm::full_inverse_power;
    const auto sol = recover(p);
    const double rel = (sol.estimate - x).norm() / x.norm();

    report(9, optimality.violations == 0 && rel <= 1e-3,
           fmt("%ld converged runs: violations=%ld, worst (obj - truth)/max(1,truth)=%.3g (bound 1e-3), "
               "%ld unconverged runs excluded; unquantized rank-1 n=6 m=48 relative error=%.3g (bound 1e-3)",
               optimality.checked, optimality.violations, optimality.worst_excess, not_converged, rel));
}

void criterion10(const SweepResult& over, const SweepResult& noise, const SweepResult& rate,
                 const ExperimentConfig& noise_cfg) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    auto compare = [&](SweepKind kind, ExperimentConfig cfg, const SweepResult& first, int workers) {
        cfg.output_path.clear();
        cfg.workers = workers;
        const bool same = csv_body(run_sweep(kind, cfg).records) == csv_body(first.records);
        ok = ok && same;
        detail += fmt("%s%s (workers %d): %s", detail.empty() ? "" : "; ", to_string(kind).c_str(), workers,
                      same ? "identical" : "DIFFERENT");
    };
    ExperimentConfig o = desk_config(SweepKind::oversampling);
    ExperimentConfig r = desk_config(SweepKind::rate_distortion);
    compare(SweepKind::noise, noise_cfg, noise, 1);
    compare(SweepKind::noise, noise_cfg, noise, 3);
    compare(SweepKind::oversampling, o, over, 1);
    compare(SweepKind::rate_distortion, r, rate, worker_count());
    report(10, ok, fmt("repeated runs with master_seed %llu, CSV bodies compared byte for byte: %s, %.1f s",
                       static_cast<unsigned long long>(o.master_seed), detail.c_str(), seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
    try {
        fs::create_directories(work);
        std::printf("sdlr %s acceptance run, work directory %s, %d workers\n", kToolVersion, work.c_str(), worker_count());

        ExperimentConfig noise_cfg = desk_config(SweepKind::noise);
        noise_cfg.workers = worker_count();
        noise_cfg.output_path = (work / "noise").string();

        criterion1();
        criterion2(noise_cfg);
        criterion3();
        const SweepResult over = criterion4(work);
        const SweepResult noise = criterion5(work, noise_cfg);
        const SweepResult rate = criterion6(work);
        criterion7();
        criterion8();
        criterion9({&over, &noise, &rate});
        criterion10(over, noise, rate, noise_cfg);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }

    int failed = 0;
    for (const auto& v : verdicts) failed += !v.pass;
    std::printf("%zu criteria, %d passed, %d failed\n", verdicts.size(), static_cast<int>(verdicts.size()) - failed, failed);
    return failed ? 1 : 0;
}
