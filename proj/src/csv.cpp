#include "sdlr/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdlr {

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "r", "m", "ell", "lambda", "trial_index", "seed", "err_frobenius", "err_relative",
        "objective", "sigma_k_tail", "eps", "rate_bits", "rate_bits_ln", "overflow",
        "iterations", "converged", "truth_nuclear", "truth_feasible", "scale", "encoder_dim", "encoder_seed"};
    return cols;
}

std::string csv_version_line() {
    return "# sdlr-trials schema=" + std::to_string(kCsvSchemaVersion) + " tool=" + kToolVersion;
}

namespace {

std::string fmt(double x) {
    if (!std::isfinite(x)) throw std::runtime_error("csv: non-finite value in trial record");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
std::string fmt(const std::optional<T>& x) {
    return x ? std::to_string(*x) : "";
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_number(const std::string& s) {
    T v{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    // from_chars reports subnormal doubles as out of range while still storing them.
    const bool ok = end == s.data() + s.size() && !s.empty() &&
                    (ec == std::errc{} || (std::is_floating_point_v<T> && ec == std::errc::result_out_of_range &&
                                           std::abs(static_cast<double>(v)) < 1));
    if (!ok) throw std::runtime_error("csv: bad number '" + s + "'");
    return v;
}

double parse_real(const std::string& s) { return parse_number<double>(s); }
long long parse_int(const std::string& s) { return parse_number<long long>(s); }
std::uint64_t parse_uint(const std::string& s) { return parse_number<std::uint64_t>(s); }

bool parse_bool(const std::string& s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw std::runtime_error("csv: bad flag '" + s + "'");
}

}  // namespace

std::string csv_body(const std::vector<TrialRecord>& records) {
    std::ostringstream o;
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
    o << '\n';
    for (const auto& t : records) {
        o << t.r << ',' << t.m << ',' << t.ell << ',' << fmt(t.lambda) << ',' << t.trial_index << ','
          << t.seed << ',' << fmt(t.err_frobenius) << ',' << fmt(t.err_relative) << ','
          << fmt(t.objective) << ',' << fmt(t.sigma_k_tail) << ',' << fmt(t.eps) << ','
          << fmt(t.rate_bits) << ',' << fmt(t.rate_bits_ln) << ',' << int(t.overflow) << ','
          << t.iterations << ',' << int(t.converged) << ',' << fmt(t.truth_nuclear) << ','
          << int(t.truth_feasible) << ',' << fmt(t.scale) << ',' << fmt(t.encoder_dim) << ','
          << fmt(t.encoder_seed) << '\n';
    }
    return o.str();
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << csv_version_line() << '\n' << csv_body(records);
}

void write_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, records);
}

std::vector<TrialRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# sdlr-trials schema=", 0) != 0)
        throw std::runtime_error("csv: missing version comment");
    const int schema = static_cast<int>(parse_int(line.substr(21, line.find(' ', 21) - 21)));
    if (schema != kCsvSchemaVersion)
        throw std::runtime_error("csv: unsupported schema " + std::to_string(schema));
    if (!std::getline(in, line) || split_row(line) != csv_columns())
        throw std::runtime_error("csv: header row does not match schema");
    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split_row(line);
        if (c.size() != csv_columns().size())
            throw std::runtime_error("csv: row has " + std::to_string(c.size()) + " fields");
        TrialRecord t;
        t.r = static_cast<int>(parse_int(c[0]));
        t.m = parse_int(c[1]);
        t.ell = parse_int(c[2]);
        t.lambda = parse_real(c[3]);
        t.trial_index = parse_int(c[4]);
        t.seed = parse_uint(c[5]);
        t.err_frobenius = parse_real(c[6]);
        t.err_relative = parse_real(c[7]);
        t.objective = parse_real(c[8]);
        t.sigma_k_tail = parse_real(c[9]);
        t.eps = parse_real(c[10]);
        if (!c[11].empty()) t.rate_bits = parse_int(c[11]);
        if (!c[12].empty()) t.rate_bits_ln = parse_int(c[12]);
        t.overflow = parse_bool(c[13]);
        t.iterations = static_cast<int>(parse_int(c[14]));
        t.converged = parse_bool(c[15]);
        t.truth_nuclear = parse_real(c[16]);
        t.truth_feasible = parse_bool(c[17]);
        t.scale = parse_real(c[18]);
        if (!c[19].empty()) t.encoder_dim = parse_int(c[19]);
        if (!c[20].empty()) t.encoder_seed = parse_uint(c[20]);
        out.push_back(t);
    }
    return out;
}

std::vector<TrialRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_csv(in);
}

}  // namespace sdlr
