#include "sdlr/config.hpp"
#include "sdlr/container.hpp"
#include "sdlr/experiments.hpp"
#include "sdlr/noise_shaping.hpp"
#include "sdlr/sensing.hpp"
#include "sdlr/sigma_delta.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace sdlr;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> workers;
    bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
    cmd->add_option("--out", o.out, "output directory (overrides output_path)");
    cmd->add_option("--workers", o.workers, "parallel trial workers")->check(CLI::PositiveNumber);
    cmd->add_flag("--paper-scale", o.paper_scale, "start from the full-size parameters");
}

ExperimentConfig resolve(SweepKind kind, const CommonOptions& o) {
    ExperimentConfig cfg = o.paper_scale ? paper_scale_config(kind) : desk_config(kind);
    if (!o.config.empty()) cfg = load_config(o.config, cfg);
    if (o.seed) cfg.master_seed = *o.seed;
    if (!o.out.empty()) cfg.output_path = o.out;
    if (o.workers) cfg.workers = *o.workers;
    return cfg;
}

Vector read_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> xs;
    for (double v; in >> v;) xs.push_back(v);
    if (!in.eof()) throw std::runtime_error(path + ": expected whitespace separated numbers");
    return Eigen::Map<Vector>(xs.data(), static_cast<Index>(xs.size()));
}

int run_sweep_command(SweepKind kind, const CommonOptions& o) {
    const ExperimentConfig cfg = resolve(kind, o);
    const SweepResult res = run_sweep(kind, cfg);
    write_sweep_outputs(res, cfg.output_path);
    std::cout << res.summary;
    std::cout << "wrote " << (fs::path(cfg.output_path) / (to_string(kind) + ".csv")).string() << '\n';
    return 0;
}

struct SelftestCase {
    const char* name;
    bool ok;
};

int selftest() {
    std::vector<SelftestCase> cases;

    {
        bool ok = true;
        Rng rng(7);
        std::uniform_real_distribution<double> unif(-0.9, 0.9);
        for (int r = 1; r <= 3; ++r) {
            auto scheme = SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(0.9, 0.5, r), 0.5));
            for (int t = 0; t < 50; ++t) {
                Vector y(200);
                for (auto& v : y) v = unif(rng);
                const auto run = quantize(y, scheme);
                ok = ok && !run.overflow && run.max_state() <= 0.25 && state_residual(run, r) <= 1e-9;
            }
        }
        cases.push_back({"quantizer stability and state identity", ok});
    }
    {
        bool ok = true;
        for (int r = 1; r <= 3; ++r) {
            const IntMatrix prod = inverse_power_entries(40, r) * difference_power_entries(40, r);
            ok = ok && prod == IntMatrix::Identity(40, 40);
        }
        cases.push_back({"integer inverse power oracle", ok});
    }
    {
        ExperimentConfig cfg = desk_config(SweepKind::oversampling);
        cfg.output_path.clear();
        const auto out = run_single_trial(SweepKind::oversampling, cfg, 2, 4.0, 0.0, 0);
        cases.push_back({"pipeline trial converges with feasible truth",
                         out.record.converged && out.record.truth_feasible && out.record.err_relative < 0.5});
    }

    bool all = true;
    for (const auto& c : cases) {
        std::printf("%s: %s\n", c.ok ? "PASS" : "FAIL", c.name);
        all = all && c.ok;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sigma-Delta quantization and nuclear-norm recovery of low-rank matrices"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* q = app.add_subcommand("quantize", "run the greedy Sigma-Delta quantizer");
    add_common(q, common);
    std::string input;
    int q_order = 1;
    double q_beta = 0.5;
    std::optional<int> q_levels;
    double q_lambda = 2.0;
    Index q_trial = 0;
    q->add_option("--input", input, "file of measurements; otherwise M(X) of a configured trial");
    q->add_option("--order", q_order, "noise-shaping order r")->check(CLI::Range(1, kMaxOrder));
    q->add_option("--beta", q_beta, "alphabet step");
    q->add_option("--levels", q_levels, "half alphabet size L (default: required_levels)");
    q->add_option("--lambda", q_lambda, "oversampling factor when generating measurements");
    q->add_option("--trial", q_trial, "trial index when generating measurements");

    auto* rec = app.add_subcommand("recover", "quantize and recover a single configured trial");
    add_common(rec, common);
    int r_order = 1;
    double r_lambda = 2.0, r_eps = 0.0;
    Index r_trial = 0;
    rec->add_option("--order", r_order, "noise-shaping order r")->check(CLI::Range(1, kMaxOrder));
    rec->add_option("--lambda", r_lambda, "oversampling factor");
    rec->add_option("--eps", r_eps, "noise level");
    rec->add_option("--trial", r_trial, "trial index");

    auto* so = app.add_subcommand("sweep-oversampling", "error versus oversampling factor");
    add_common(so, common);
    auto* sn = app.add_subcommand("sweep-noise", "error versus noise level");
    add_common(sn, common);
    auto* rd = app.add_subcommand("rate-distortion", "error versus encoded bit rate");
    add_common(rd, common);

    auto* rip = app.add_subcommand("rip-check", "sampled RIP constant of the composed operator");
    add_common(rip, common);
    int rip_order = 1;
    double rip_lambda = 2.0;
    Index rip_samples = 200;
    std::optional<Index> rip_ell;
    rip->add_option("--order", rip_order)->check(CLI::Range(1, kMaxOrder));
    rip->add_option("--lambda", rip_lambda, "m = lambda * ell");
    rip->add_option("--ell", rip_ell, "truncation level (default: config ell)");
    rip->add_option("--samples", rip_samples, "random rank-k test matrices");

    auto* st = app.add_subcommand("selftest", "fast internal consistency checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*st) return selftest();
        if (*so) return run_sweep_command(SweepKind::oversampling, common);
        if (*sn) return run_sweep_command(SweepKind::noise, common);
        if (*rd) return run_sweep_command(SweepKind::rate_distortion, common);

        if (*q) {
            ExperimentConfig cfg = resolve(SweepKind::oversampling, common);
            Vector y;
            if (!input.empty()) {
                y = read_values(input);
            } else {
                cfg.orders = {q_order};
                const Index m = cfg.rows_for(q_lambda);
                auto op = draw_operator(m, cfg.n1, cfg.n2, cfg.distribution, derive_seed(cfg.master_seed, 0, m));
                y = op.apply(make_low_rank(cfg.n1, cfg.n2, cfg.rank, derive_seed(cfg.master_seed, 0, q_trial)));
            }
            if (y.size() == 0) throw std::runtime_error("no measurements to quantize");
            const int levels = q_levels ? *q_levels : required_levels(y.cwiseAbs().maxCoeff(), q_beta, q_order);
            const auto run = quantize(y, SigmaDeltaScheme::greedy(q_order, build_alphabet(levels, q_beta)));
            Container c;
            c.put_text("kind", "quantizer_run");
            c.put("input", run.input);
            c.put("output", run.output);
            c.put("state", run.state);
            c.put_int("order", q_order);
            c.put_int("levels", levels);
            c.put_real("step", q_beta);
            c.put_int("overflow", run.overflow);
            fs::create_directories(cfg.output_path);
            const fs::path path = fs::path(cfg.output_path) / "quantized.sdlr";
            c.save(path);
            std::printf("m=%lld L=%d max|u|=%.6g overflow=%d state_residual=%.3g\nwrote %s\n",
                        static_cast<long long>(y.size()), levels, run.max_state(), int(run.overflow),
                        state_residual(run, q_order), path.c_str());
            return 0;
        }

        if (*rec) {
            ExperimentConfig cfg = resolve(r_eps > 0 ? SweepKind::noise : SweepKind::oversampling, common);
            cfg.orders = {r_order};
            cfg.levels.clear();
            cfg.epsilon = {r_eps};
            const auto out = run_single_trial(r_eps > 0 ? SweepKind::noise : SweepKind::oversampling, cfg,
                                              r_order, r_lambda, r_eps, r_trial);
            Container c = out.solution.to_container();
            c.put("truth", out.truth);
            c.put("noise", out.noise);
            c.put("quantized", out.problem.quantized);
            c.put_real("err_frobenius", out.record.err_frobenius);
            c.put_real("err_relative", out.record.err_relative);
            fs::create_directories(cfg.output_path);
            const fs::path path = fs::path(cfg.output_path) / "solution.sdlr";
            c.save(path);
            const auto& t = out.record;
            std::printf("r=%d m=%lld err_frobenius=%.6g err_relative=%.6g objective=%.6g truth_nuclear=%.6g "
                        "iterations=%d converged=%d truth_feasible=%d\nwrote %s\n",
                        t.r, static_cast<long long>(t.m), t.err_frobenius, t.err_relative, t.objective,
                        t.truth_nuclear, t.iterations, int(t.converged), int(t.truth_feasible), path.c_str());
            return 0;
        }

        if (*rip) {
            ExperimentConfig cfg = resolve(SweepKind::oversampling, common);
            const Index ell = rip_ell.value_or(cfg.ell);
            cfg.ell = ell;
            const Index m = cfg.rows_for(rip_lambda);
            const auto op = draw_operator(m, cfg.n1, cfg.n2, cfg.distribution, derive_seed(cfg.master_seed, 4, m));
            BasisCache cache(cfg.basis_cache_dir(), cfg.svd_budget);
            const auto basis = cache.get(m, rip_order, ell);
            const auto composed = composed_operator(op, *basis, ell);
            const auto est = empirical_rip(composed, cfg.rank, rip_samples, derive_seed(cfg.master_seed, 4, 0));
            std::printf("m=%lld ell=%lld r=%d k=%lld samples=%lld delta_hat=%.6g min_ratio=%.6g "
                        "max_ratio=%.6g mean_ratio=%.6g\n",
                        static_cast<long long>(m), static_cast<long long>(ell), rip_order,
                        static_cast<long long>(cfg.rank), static_cast<long long>(est.trials), est.delta_hat,
                        est.min_ratio, est.max_ratio, est.mean_ratio);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
