#include "sdlr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sdlr {

std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::oversampling: return "oversampling";
        case SweepKind::noise: return "noise";
        case SweepKind::rate_distortion: return "rate_distortion";
    }
    return "?";
}

Index ExperimentConfig::rows_for(double lambda) const {
    const Index base = constraint_form == ConstraintForm::encoded ? encoder_dim : ell;
    return static_cast<Index>(std::llround(lambda * static_cast<double>(base)));
}

std::filesystem::path ExperimentConfig::basis_cache_dir() const {
    if (!cache_dir.empty()) return cache_dir;
    if (output_path.empty()) return {};
    return std::filesystem::path(output_path) / "basis_cache";
}

void ExperimentConfig::validate(SweepKind kind) const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (n1 < 1 || n2 < 1) fail("n1 and n2 must be positive");
    if (rank < 0 || rank > std::min(n1, n2)) fail("rank must lie in [0, min(n1, n2)]");
    if (ell < 1) fail("ell must be >= 1");
    if (trials < 1) fail("trials must be >= 1");
    if (!(beta > 0)) fail("beta must be positive");
    if (orders.empty() && !order_selection_c1) fail("orders must not be empty");
    for (int r : orders)
        if (r < 1 || r > kMaxOrder) fail("orders must lie in [1, 8]");
    if (!levels.empty() && levels.size() != orders.size())
        fail("levels must be 'auto' or give one value per order");
    for (int l : levels)
        if (l < 1) fail("levels must be >= 1");
    if (oversampling.empty()) fail("oversampling grid must not be empty");
    if (constraint_form == ConstraintForm::encoded && encoder_dim < 1)
        fail("encoded constraint needs encoder_dim >= 1");
    if (kind == SweepKind::rate_distortion && constraint_form != ConstraintForm::encoded)
        fail("rate-distortion sweeps use constraint_form = encoded");
    if (kind == SweepKind::rate_distortion && encoder_dim < 1) fail("encoder_dim must be set");
    const Index base = constraint_form == ConstraintForm::encoded ? encoder_dim : ell;
    for (double lam : oversampling) {
        if (!(lam > 0)) fail("oversampling factors must be positive");
        const double m = lam * static_cast<double>(base);
        if (std::abs(m - std::round(m)) > 1e-9) fail("every m = lambda * ell must be an integer");
        if (constraint_form == ConstraintForm::projected && std::llround(m) < ell)
            fail("m must be >= ell");
    }
    if (epsilon.empty()) fail("epsilon grid must not be empty");
    for (double e : epsilon)
        if (!(e >= 0)) fail("epsilon values must be >= 0");
    if (mu && !(*mu > 0)) fail("mu must be positive");
    if (gamma && !(*gamma > 0)) fail("gamma must be positive");
    if (workers < 1) fail("workers must be >= 1");
    if (order_selection_c1 && !(*order_selection_c1 > 0)) fail("order_selection_c1 must be > 0");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long i = 0;
    try {
        i = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
    return i;
}

bool unset(const std::string& v) { return v == "none" || v == "auto" || v.empty(); }

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F conv) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<T>(conv(key, item)));
    return out;
}

// Shortest text that parses back to the same value.
template <class T>
std::string num(T v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const auto& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + num(xs[i]);
    return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg) {
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"n1", [&](auto& k, auto& v) { cfg.n1 = to_int(k, v); }},
        {"n2", [&](auto& k, auto& v) { cfg.n2 = to_int(k, v); }},
        {"rank", [&](auto& k, auto& v) { cfg.rank = to_int(k, v); }},
        {"ell", [&](auto& k, auto& v) { cfg.ell = to_int(k, v); }},
        {"oversampling", [&](auto& k, auto& v) { cfg.oversampling = parse_list<double>(k, v, to_double); }},
        {"orders", [&](auto& k, auto& v) { cfg.orders = parse_list<int>(k, v, to_int); }},
        {"beta", [&](auto& k, auto& v) { cfg.beta = to_double(k, v); }},
        {"levels", [&](auto& k, auto& v) { cfg.levels = unset(v) ? std::vector<int>{} : parse_list<int>(k, v, to_int); }},
        {"epsilon", [&](auto& k, auto& v) { cfg.epsilon = parse_list<double>(k, v, to_double); }},
        {"trials", [&](auto& k, auto& v) { cfg.trials = to_int(k, v); }},
        {"master_seed", [&](auto& k, auto& v) { cfg.master_seed = static_cast<std::uint64_t>(to_int(k, v)); }},
        {"constraint_form", [&](auto&, auto& v) { cfg.constraint_form = parse_constraint_form(v); }},
        {"encoder_dim", [&](auto& k, auto& v) { cfg.encoder_dim = unset(v) ? 0 : to_int(k, v); }},
        {"output_path", [&](auto&, auto& v) { cfg.output_path = v; }},
        {"distribution", [&](auto&, auto& v) { cfg.distribution = parse_distribution(v); }},
        {"mu", [&](auto& k, auto& v) { cfg.mu = unset(v) ? std::nullopt : std::optional<double>(to_double(k, v)); }},
        {"operator_mode", [&](auto&, auto& v) {
             if (v == "fixed") cfg.operator_mode = OperatorMode::fixed;
             else if (v == "fresh") cfg.operator_mode = OperatorMode::fresh;
             else throw std::invalid_argument("config: operator_mode must be fixed or fresh");
         }},
        {"workers", [&](auto& k, auto& v) { cfg.workers = static_cast<int>(to_int(k, v)); }},
        {"max_iterations", [&](auto& k, auto& v) { cfg.solver.max_iterations = static_cast<int>(to_int(k, v)); }},
        {"tolerance", [&](auto& k, auto& v) { cfg.solver.tolerance = to_double(k, v); }},
        {"penalty", [&](auto& k, auto& v) { cfg.solver.penalty = to_double(k, v); }},
        {"relaxation", [&](auto& k, auto& v) { cfg.solver.relaxation = to_double(k, v); }},
        {"adapt_penalty", [&](auto& k, auto& v) { cfg.solver.adapt_penalty = to_int(k, v) != 0; }},
        {"svd_budget", [&](auto& k, auto& v) { cfg.svd_budget = to_int(k, v); }},
        {"cache_dir", [&](auto&, auto& v) { cfg.cache_dir = v; }},
        {"gamma", [&](auto& k, auto& v) { cfg.gamma = unset(v) ? std::nullopt : std::optional<double>(to_double(k, v)); }},
        {"stability_model", [&](auto&, auto& v) {
             if (v == "exact_half_step") cfg.stability_model = StabilityModel::exact_half_step;
             else if (v == "parametric") cfg.stability_model = StabilityModel::parametric;
             else throw std::invalid_argument("config: stability_model must be exact_half_step or parametric");
         }},
        {"stability_growth", [&](auto& k, auto& v) { cfg.stability_growth = to_double(k, v); }},
        {"order_selection_c1", [&](auto& k, auto& v) {
             cfg.order_selection_c1 = unset(v) ? std::nullopt : std::optional<double>(to_double(k, v));
         }},
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(key, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in, std::move(base));
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "n1 = " << c.n1 << "\nn2 = " << c.n2 << "\nrank = " << c.rank << "\nell = " << c.ell
      << "\noversampling = " << join(c.oversampling) << "\norders = " << join(c.orders)
      << "\nbeta = " << num(c.beta) << "\nlevels = " << (c.levels.empty() ? "auto" : join(c.levels))
      << "\nepsilon = " << join(c.epsilon) << "\ntrials = " << c.trials
      << "\nmaster_seed = " << c.master_seed << "\nconstraint_form = " << to_string(c.constraint_form)
      << "\nencoder_dim = " << c.encoder_dim << "\noutput_path = " << c.output_path
      << "\ndistribution = " << to_string(c.distribution)
      << "\nmu = " << (c.mu ? num(*c.mu) : "none")
      << "\noperator_mode = " << (c.operator_mode == OperatorMode::fixed ? "fixed" : "fresh")
      << "\nworkers = " << c.workers << "\nmax_iterations = " << c.solver.max_iterations
      << "\ntolerance = " << num(c.solver.tolerance) << "\npenalty = " << num(c.solver.penalty)
      << "\nrelaxation = " << num(c.solver.relaxation) << "\nadapt_penalty = " << (c.solver.adapt_penalty ? 1 : 0)
      << "\nsvd_budget = " << c.svd_budget << "\ncache_dir = " << c.cache_dir
      << "\ngamma = " << (c.gamma ? num(*c.gamma) : "auto")
      << "\nstability_model = "
      << (c.stability_model == StabilityModel::exact_half_step ? "exact_half_step" : "parametric")
      << "\nstability_growth = " << num(c.stability_growth)
      << "\norder_selection_c1 = " << (c.order_selection_c1 ? num(*c.order_selection_c1) : "none")
      << '\n';
    return o.str();
}

ExperimentConfig desk_config(SweepKind kind) {
    ExperimentConfig c;
    switch (kind) {
        case SweepKind::oversampling:
            break;
        case SweepKind::noise:
            c.orders = {1};
            c.oversampling = {2};
            c.epsilon = {0.0, 0.25, 0.5, 1.0, 2.0};
            break;
        case SweepKind::rate_distortion:
            c.orders = {2};
            c.constraint_form = ConstraintForm::encoded;
            c.encoder_dim = 80;
            break;
    }
    return c;
}

ExperimentConfig paper_scale_config(SweepKind kind) {
    ExperimentConfig c;
    c.n1 = c.n2 = 20;
    c.trials = 20;
    c.svd_budget = 24000;
    std::vector<double> grid;
    for (int lam = 5; lam <= 60; lam += 5) grid.push_back(lam);
    switch (kind) {
        case SweepKind::oversampling:
            c.rank = 5;
            c.ell = 4 * c.rank * c.n1;
            c.oversampling = grid;
            break;
        case SweepKind::noise:
            c.rank = 2;
            c.ell = 4 * c.rank * c.n1;
            c.orders = {1};
            c.oversampling = {2};
            c.epsilon.clear();
            for (int i = 0; i <= 20; ++i) c.epsilon.push_back(i / 10.0);
            break;
        case SweepKind::rate_distortion:
            c.rank = 5;
            c.ell = 4 * c.rank * c.n1;
            c.orders = {2, 3};
            c.constraint_form = ConstraintForm::encoded;
            c.encoder_dim = 4 * c.rank * c.n1;
            c.oversampling = grid;
            break;
    }
    return c;
}

}  // namespace sdlr
