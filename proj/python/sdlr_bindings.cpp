#include "sdlr/config.hpp"
#include "sdlr/container.hpp"
#include "sdlr/encoding.hpp"
#include "sdlr/experiments.hpp"
#include "sdlr/noise_shaping.hpp"
#include "sdlr/recovery.hpp"
#include "sdlr/sensing.hpp"
#include "sdlr/sigma_delta.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace sdlr;

namespace {

py::dict record_to_dict(const TrialRecord& t) {
    py::dict d;
    d["r"] = t.r;
    d["m"] = t.m;
    d["ell"] = t.ell;
    d["lambda"] = t.lambda;
    d["trial_index"] = t.trial_index;
    d["seed"] = t.seed;
    d["err_frobenius"] = t.err_frobenius;
    d["err_relative"] = t.err_relative;
    d["objective"] = t.objective;
    d["sigma_k_tail"] = t.sigma_k_tail;
    d["eps"] = t.eps;
    d["rate_bits"] = t.rate_bits;
    d["rate_bits_ln"] = t.rate_bits_ln;
    d["overflow"] = t.overflow;
    d["iterations"] = t.iterations;
    d["converged"] = t.converged;
    d["truth_nuclear"] = t.truth_nuclear;
    d["truth_feasible"] = t.truth_feasible;
    d["scale"] = t.scale;
    d["encoder_dim"] = t.encoder_dim;
    d["encoder_seed"] = t.encoder_seed;
    return d;
}

ExperimentConfig config_from(SweepKind kind, const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, desk_config(kind));
}

}  // namespace

PYBIND11_MODULE(_sdlr, m) {
    m.doc() = "Sigma-Delta quantization and nuclear-norm recovery of low-rank matrices";
    m.attr("__version__") = kToolVersion;

    py::class_<Alphabet>(m, "Alphabet")
        .def_readonly("num_levels_half", &Alphabet::num_levels_half)
        .def_readonly("step", &Alphabet::step)
        .def_readonly("values", &Alphabet::values)
        .def("max_value", &Alphabet::max_value);
    m.def("build_alphabet", &build_alphabet, py::arg("num_levels_half"), py::arg("step"));
    m.def("scalar_quantize", &scalar_quantize, py::arg("z"), py::arg("alphabet"));
    m.def("required_levels", &required_levels, py::arg("input_bound"), py::arg("step"), py::arg("order"));

    py::class_<QuantizationRun>(m, "QuantizationRun")
        .def_readonly("input", &QuantizationRun::input)
        .def_readonly("output", &QuantizationRun::output)
        .def_readonly("state", &QuantizationRun::state)
        .def_readonly("overflow", &QuantizationRun::overflow)
        .def("max_state", &QuantizationRun::max_state);

    m.def(
        "quantize",
        [](const Vector& y, int order, double step, std::optional<int> levels) {
            const int l = levels ? *levels : required_levels(y.size() ? y.cwiseAbs().maxCoeff() : 0.0, step, order);
            return quantize(y, SigmaDeltaScheme::greedy(order, build_alphabet(l, step)));
        },
        py::arg("y"), py::arg("order"), py::arg("step") = 0.5, py::arg("levels") = py::none(),
        "Greedy r-th order Sigma-Delta quantization; levels default to required_levels(max|y|).");
    m.def("state_residual", &state_residual, py::arg("run"), py::arg("order"));

    m.def(
        "apply_difference", [](const Vector& v, int order) { return apply_difference(v, {v.size(), order}); },
        py::arg("v"), py::arg("order"));
    m.def(
        "apply_inverse_power", [](const Vector& v, int order) { return apply_inverse_power(v, {v.size(), order}); },
        py::arg("v"), py::arg("order"));
    m.def("inverse_power_entries", &inverse_power_entries, py::arg("m"), py::arg("order"));

    py::class_<NoiseShapingBasis, std::shared_ptr<NoiseShapingBasis>>(m, "NoiseShapingBasis")
        .def_readonly("size", &NoiseShapingBasis::size)
        .def_readonly("order", &NoiseShapingBasis::order)
        .def_readonly("truncation", &NoiseShapingBasis::truncation)
        .def_readonly("singular_values", &NoiseShapingBasis::singular_values)
        .def_readonly("left_vectors", &NoiseShapingBasis::left_vectors)
        .def_readonly("right_vectors", &NoiseShapingBasis::right_vectors)
        .def("truncation_value", &NoiseShapingBasis::truncation_value);
    m.def(
        "compute_basis",
        [](Index size, int order, Index ell, Index budget) {
            return std::make_shared<NoiseShapingBasis>(compute_basis(size, order, ell, budget));
        },
        py::arg("m"), py::arg("order"), py::arg("ell"), py::arg("svd_budget") = kDefaultSvdBudget);
    m.def("project_shaped", &project_shaped, py::arg("v"), py::arg("basis"));

    py::class_<MeasurementOperator, std::shared_ptr<MeasurementOperator>>(m, "MeasurementOperator")
        .def_property_readonly("rows", &MeasurementOperator::rows)
        .def_property_readonly("n1", &MeasurementOperator::n1)
        .def_property_readonly("n2", &MeasurementOperator::n2)
        .def_property_readonly("seed", &MeasurementOperator::seed)
        .def_property_readonly("matrix", &MeasurementOperator::data)
        .def("apply", &MeasurementOperator::apply, py::arg("x"))
        .def("adjoint_apply", &MeasurementOperator::adjoint_apply, py::arg("v"));
    m.def(
        "draw_operator",
        [](Index rows, Index n1, Index n2, const std::string& dist, std::uint64_t seed) {
            return std::make_shared<MeasurementOperator>(draw_operator(rows, n1, n2, parse_distribution(dist), seed));
        },
        py::arg("m"), py::arg("n1"), py::arg("n2"), py::arg("distribution") = "gaussian", py::arg("seed") = 0);

    py::class_<RipEstimate>(m, "RipEstimate")
        .def_readonly("delta_hat", &RipEstimate::delta_hat)
        .def_readonly("min_ratio", &RipEstimate::min_ratio)
        .def_readonly("max_ratio", &RipEstimate::max_ratio)
        .def_readonly("mean_ratio", &RipEstimate::mean_ratio);
    m.def(
        "composed_rip",
        [](const MeasurementOperator& op, const NoiseShapingBasis& basis, Index k, Index trials, std::uint64_t seed) {
            return empirical_rip(composed_operator(op, basis, basis.truncation), k, trials, seed);
        },
        py::arg("op"), py::arg("basis"), py::arg("rank"), py::arg("trials"), py::arg("seed") = 0);

    py::class_<EncoderMatrix, std::shared_ptr<EncoderMatrix>>(m, "EncoderMatrix")
        .def_readonly("data", &EncoderMatrix::data)
        .def_readonly("norm_estimate", &EncoderMatrix::norm_estimate)
        .def_readonly("norm_check_passed", &EncoderMatrix::norm_check_passed)
        .def("norm_bound", &EncoderMatrix::norm_bound);
    m.def(
        "draw_encoder",
        [](Index out_dim, Index in_dim, std::uint64_t seed) {
            return std::make_shared<EncoderMatrix>(draw_encoder(out_dim, in_dim, seed));
        },
        py::arg("out_dim"), py::arg("in_dim"), py::arg("seed") = 0);
    py::class_<EncodedMeasurements>(m, "EncodedMeasurements")
        .def_readonly("payload", &EncodedMeasurements::payload)
        .def_readonly("rate_bits", &EncodedMeasurements::rate_bits)
        .def_readonly("rate_bits_ln", &EncodedMeasurements::rate_bits_ln);
    m.def("encode", &encode, py::arg("q"), py::arg("order"), py::arg("encoder"), py::arg("alphabet_max"));

    py::class_<RecoverySolution>(m, "RecoverySolution")
        .def_readonly("estimate", &RecoverySolution::estimate)
        .def_readonly("noise_estimate", &RecoverySolution::noise_estimate)
        .def_readonly("objective", &RecoverySolution::objective)
        .def_readonly("residual_shaped", &RecoverySolution::residual_shaped)
        .def_readonly("residual_noise", &RecoverySolution::residual_noise)
        .def_readonly("iterations", &RecoverySolution::iterations)
        .def_readonly("converged", &RecoverySolution::converged);
    m.def(
        "recover",
        [](std::shared_ptr<MeasurementOperator> op, const Vector& q, int order, double gamma, double noise_bound,
           const std::string& form, std::shared_ptr<NoiseShapingBasis> basis, std::shared_ptr<EncoderMatrix> encoder,
           int max_iterations, double tolerance) {
            RecoveryProblem p;
            p.op = std::move(op);
            p.quantized = q;
            p.order = order;
            p.gamma = gamma;
            p.noise_bound = noise_bound;
            p.constraint_form = parse_constraint_form(form);
            p.basis = std::move(basis);
            p.encoder = std::move(encoder);
            SolverParams params;
            params.max_iterations = max_iterations;
            params.tolerance = tolerance;
            py::gil_scoped_release release;
            return recover(p, params);
        },
        py::arg("op"), py::arg("q"), py::arg("order"), py::arg("gamma") = 0.25, py::arg("noise_bound") = 0.0,
        py::arg("constraint_form") = "projected", py::arg("basis") = nullptr, py::arg("encoder") = nullptr,
        py::arg("max_iterations") = 5000, py::arg("tolerance") = 1e-6);

    m.def("nuclear_norm", &nuclear_norm, py::arg("x"));
    m.def("make_low_rank", &make_low_rank, py::arg("n1"), py::arg("n2"), py::arg("rank"), py::arg("seed"));
    m.def(
        "measurement_scaling",
        [](const Matrix& x, const MeasurementOperator& op, double mu) {
            auto s = measurement_scaling(x, op, mu);
            return py::make_tuple(s.matrix, s.scale, s.note);
        },
        py::arg("x"), py::arg("op"), py::arg("mu") = 0.9);
    m.def("select_order", &select_order, py::arg("lam"), py::arg("c1"));
    m.def(
        "fit_slope",
        [](const std::vector<std::pair<double, double>>& pts, const std::string& mode) {
            if (mode != "loglog" && mode != "semilog") throw std::invalid_argument("mode must be loglog or semilog");
            const auto f = fit_slope(pts, mode == "loglog" ? FitMode::loglog : FitMode::semilog);
            return py::make_tuple(f.slope, f.intercept, f.r_squared);
        },
        py::arg("points"), py::arg("mode"));

    m.def(
        "run_sweep",
        [](const std::string& kind_name, const std::string& config_text) {
            SweepKind kind;
            if (kind_name == "oversampling") kind = SweepKind::oversampling;
            else if (kind_name == "noise") kind = SweepKind::noise;
            else if (kind_name == "rate_distortion") kind = SweepKind::rate_distortion;
            else throw std::invalid_argument("unknown sweep '" + kind_name + "'");
            const ExperimentConfig cfg = config_from(kind, config_text);
            SweepResult res;
            {
                py::gil_scoped_release release;
                res = run_sweep(kind, cfg);
            }
            py::list rows;
            for (const auto& t : res.records) rows.append(record_to_dict(t));
            return py::make_tuple(rows, res.summary);
        },
        py::arg("kind"), py::arg("config") = "",
        "Runs a sweep from `key = value` config text on top of the desk defaults; returns (records, summary).");
}
