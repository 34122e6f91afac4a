#include "npm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "npm/generate.hpp"
#include "npm/linalg.hpp"
#include "npm/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace npm {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DenseMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file " + path);
    std::vector<double> entries;
    int cols = -1;
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream row(line);
        std::string cell;
        int c = 0;
        while (std::getline(row, cell, ',')) {
            try {
                entries.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("matrix file " + path + ": bad number '" + cell + "'");
            }
            ++c;
        }
        if (cols < 0) cols = c;
        if (c != cols) throw ConfigError("matrix file " + path + ": ragged row");
        ++rows;
    }
    if (rows == 0) throw ConfigError("matrix file " + path + " is empty");
    return DenseMatrix(rows, cols, std::move(entries));
}

void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write matrix file " + path);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_real(m(i, j));
        }
        out << '\n';
    }
}

namespace {

constexpr const char* kTraceHeader =
    "iter,g2_norm,uqg_norm,sin_theta_k,tan_theta_k,tan_theta_q,cos_theta_q,h,g,"
    "err_ratio_spectral,err_ratio_frobenius";

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

void require_keys(const json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(where, "must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.contains(key)) fail(where + "." + key, "unknown key");
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key, "wrong type");
    }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) fail(where + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key, "wrong type");
    }
}

std::string mode_name(ExperimentConfig::Mode m) {
    switch (m) {
        case ExperimentConfig::Mode::npm: return "npm";
        case ExperimentConfig::Mode::dp_pca: return "dp_pca";
        case ExperimentConfig::Mode::streaming: return "streaming";
    }
    return "?";
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    require_keys(j, "config",
                 {"schema_version", "mode", "matrix", "run", "noise", "privacy", "nodes",
                  "stream", "round_check", "seeds", "sweep", "record_diagnostics", "output"});

    cfg.schema_version = get_required<int>(j, "schema_version", "config");
    if (cfg.schema_version != 1) fail("schema_version", "unsupported version");

    const std::string mode = get_required<std::string>(j, "mode", "config");
    if (mode == "npm") cfg.mode = ExperimentConfig::Mode::npm;
    else if (mode == "dp_pca") cfg.mode = ExperimentConfig::Mode::dp_pca;
    else if (mode == "streaming") cfg.mode = ExperimentConfig::Mode::streaming;
    else fail("mode", "must be npm, dp_pca or streaming");

    {
        if (!j.contains("matrix")) fail("matrix", "missing");
        const json& m = j.at("matrix");
        require_keys(m, "matrix", {"kind", "d", "alpha", "values", "path", "seed"});
        const std::string kind = get_required<std::string>(m, "kind", "matrix");
        cfg.matrix.seed = get_or<std::uint64_t>(m, "seed", "matrix", 42);
        if (kind == "power_law") {
            cfg.matrix.kind = MatrixSpecConfig::Kind::power_law;
            cfg.matrix.d = get_required<int>(m, "d", "matrix");
            cfg.matrix.alpha = get_required<double>(m, "alpha", "matrix");
            if (cfg.matrix.d < 1) fail("matrix.d", "must be >= 1");
            if (!(cfg.matrix.alpha > 1.0)) fail("matrix.alpha", "must be > 1");
        } else if (kind == "values") {
            cfg.matrix.kind = MatrixSpecConfig::Kind::values;
            cfg.matrix.values = get_required<std::vector<double>>(m, "values", "matrix");
            if (cfg.matrix.values.empty()) fail("matrix.values", "must be non-empty");
            cfg.matrix.d = static_cast<int>(cfg.matrix.values.size());
        } else if (kind == "file") {
            cfg.matrix.kind = MatrixSpecConfig::Kind::file;
            cfg.matrix.path = get_required<std::string>(m, "path", "matrix");
            cfg.matrix.d = 0;  // known after reading
        } else {
            fail("matrix.kind", "must be power_law, values or file");
        }
    }

    {
        if (!j.contains("run")) fail("run", "missing");
        const json& r = j.at("run");
        require_keys(r, "run", {"k", "q", "p", "L", "epsilon", "tau", "g_constant"});
        cfg.run.k = get_required<int>(r, "k", "run");
        cfg.run.p = get_required<int>(r, "p", "run");
        cfg.run.q = get_or<int>(r, "q", "run", cfg.run.k);
        cfg.run.epsilon = get_or<double>(r, "epsilon", "run", 0.2);
        cfg.run.tau = get_or<double>(r, "tau", "run", 1.0);
        cfg.run.g_constant = get_or<double>(r, "g_constant", "run", 0.25);
        if (cfg.run.k < 1 || cfg.run.k > cfg.run.q)
            fail("run.k", "must satisfy 1 <= k <= q (q defaults to k)");
        if (cfg.run.q > cfg.run.p) fail("run.q", "must satisfy q <= p");
        if (cfg.matrix.d > 0 && cfg.run.p > cfg.matrix.d) fail("run.p", "must satisfy p <= d");
        if (!(cfg.run.epsilon > 0.0 && cfg.run.epsilon < 1.0))
            fail("run.epsilon", "must lie in (0,1)");
        if (!(cfg.run.tau > 0.0)) fail("run.tau", "must be > 0");
        if (r.contains("L")) {
            if (r.at("L").is_string()) {
                if (r.at("L").get<std::string>() != "auto")
                    fail("run.L", "must be an integer or \"auto\"");
            } else {
                const int L = get_required<int>(r, "L", "run");
                if (L < 1) fail("run.L", "must be >= 1");
                cfg.run.iterations = L;
            }
        }
    }

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        require_keys(n, "noise", {"kind", "stddev", "factor", "budget"});
        const std::string kind = get_required<std::string>(n, "kind", "noise");
        if (kind == "none") {
            cfg.noise.kind = NoiseConfig::Kind::none;
        } else if (kind == "gaussian") {
            cfg.noise.kind = NoiseConfig::Kind::gaussian;
            cfg.noise.stddev = get_required<double>(n, "stddev", "noise");
            if (cfg.noise.stddev < 0.0) fail("noise.stddev", "must be >= 0");
        } else if (kind == "budget_scaled") {
            cfg.noise.kind = NoiseConfig::Kind::budget_scaled;
            cfg.noise.factor = get_required<double>(n, "factor", "noise");
            if (cfg.noise.factor < 0.0) fail("noise.factor", "must be >= 0");
            const std::string b = get_or<std::string>(n, "budget", "noise",
                                                      std::string("gap_dependent"));
            if (b == "gap_dependent") cfg.noise.budget = ToleranceBudget::Mode::gap_dependent;
            else if (b == "gap_independent")
                cfg.noise.budget = ToleranceBudget::Mode::gap_independent;
            else fail("noise.budget", "must be gap_dependent or gap_independent");
        } else {
            fail("noise.kind", "must be none, gaussian or budget_scaled");
        }
        if (cfg.mode != ExperimentConfig::Mode::npm && cfg.noise.kind != NoiseConfig::Kind::none)
            fail("noise.kind", "noise is only configurable in npm mode");
    }

    if (j.contains("privacy")) {
        const json& p = j.at("privacy");
        require_keys(p, "privacy", {"eps", "delta", "nu_override"});
        cfg.privacy.eps = get_or<double>(p, "eps", "privacy", 0.5);
        cfg.privacy.delta = get_or<double>(p, "delta", "privacy", 1e-6);
        if (!(cfg.privacy.eps > 0.0 && cfg.privacy.eps < 1.0))
            fail("privacy.eps", "must lie in (0,1)");
        if (!(cfg.privacy.delta > 0.0 && cfg.privacy.delta < 1.0))
            fail("privacy.delta", "must lie in (0,1)");
        if (p.contains("nu_override")) {
            const double nu = get_required<double>(p, "nu_override", "privacy");
            if (nu < 0.0) fail("privacy.nu_override", "must be >= 0");
            cfg.privacy.nu_override = nu;
        }
    }

    if (j.contains("nodes")) {
        const json& n = j.at("nodes");
        require_keys(n, "nodes", {"count", "split"});
        cfg.nodes.count = get_or<int>(n, "count", "nodes", 1);
        if (cfg.nodes.count < 1) fail("nodes.count", "must be >= 1");
        const std::string split = get_or<std::string>(n, "split", "nodes",
                                                      std::string("uniform"));
        if (split == "uniform") cfg.nodes.split = NodesConfig::Split::uniform;
        else if (split == "weighted") cfg.nodes.split = NodesConfig::Split::weighted;
        else fail("nodes.split", "must be uniform or weighted");
    }

    if (j.contains("stream")) {
        const json& s = j.at("stream");
        require_keys(s, "stream", {"n"});
        cfg.stream.n = get_or<long long>(s, "n", "stream", 0);
        if (cfg.stream.n < 0) fail("stream.n", "must be >= 0");
    }
    if (cfg.mode == ExperimentConfig::Mode::streaming && cfg.stream.n < 1)
        fail("stream.n", "required in streaming mode (>= 1)");

    if (j.contains("round_check")) {
        const json& r = j.at("round_check");
        require_keys(r, "round_check", {"B", "p", "n_mc", "t_grid"});
        RoundCheckConfig rc;
        rc.b = get_required<double>(r, "B", "round_check");
        rc.p = get_required<int>(r, "p", "round_check");
        rc.n_mc = get_or<long long>(r, "n_mc", "round_check", 10000);
        rc.t_grid = get_or<std::vector<double>>(r, "t_grid", "round_check",
                                                std::vector<double>{1.0, 2.0, 3.0});
        if (!(rc.b > 0.0)) fail("round_check.B", "must be > 0");
        if (rc.p < 1) fail("round_check.p", "must be >= 1");
        if (rc.n_mc < 1) fail("round_check.n_mc", "must be >= 1");
        for (double t : rc.t_grid)
            if (!(t >= 1.0)) fail("round_check.t_grid", "values must be >= 1");
        cfg.round_check = rc;
    }

    cfg.seeds = get_required<std::vector<std::uint64_t>>(j, "seeds", "config");
    if (cfg.seeds.empty()) fail("seeds", "must be non-empty");

    if (j.contains("sweep")) {
        const json& sweep = j.at("sweep");
        if (!sweep.is_array()) fail("sweep", "must be an array");
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            const std::string where = "sweep[" + std::to_string(i) + "]";
            require_keys(sweep[i], where, {"param", "values"});
            SweepAxis axis;
            axis.param = get_required<std::string>(sweep[i], "param", where);
            if (axis.param.empty() || axis.param[0] != '/')
                fail(where + ".param", "must be a JSON pointer starting with '/'");
            if (!sweep[i].contains("values") || !sweep[i].at("values").is_array() ||
                sweep[i].at("values").empty())
                fail(where + ".values", "must be a non-empty array");
            for (const json& v : sweep[i].at("values")) axis.values.push_back(v);
            cfg.sweep.push_back(std::move(axis));
        }
    }

    cfg.record_diagnostics = get_or<bool>(j, "record_diagnostics", "config", true);

    if (j.contains("output")) {
        const json& o = j.at("output");
        require_keys(o, "output", {"dir"});
        cfg.output_dir = get_or<std::string>(o, "dir", "output", std::string("out"));
    }
    if (cfg.output_dir.empty()) fail("output.dir", "must be non-empty");

    // canonical, fully defaulted form
    json c;
    c["schema_version"] = 1;
    c["mode"] = mode_name(cfg.mode);
    json m;
    switch (cfg.matrix.kind) {
        case MatrixSpecConfig::Kind::power_law:
            m["kind"] = "power_law";
            m["d"] = cfg.matrix.d;
            m["alpha"] = cfg.matrix.alpha;
            break;
        case MatrixSpecConfig::Kind::values:
            m["kind"] = "values";
            m["values"] = cfg.matrix.values;
            break;
        case MatrixSpecConfig::Kind::file:
            m["kind"] = "file";
            m["path"] = cfg.matrix.path;
            break;
    }
    m["seed"] = cfg.matrix.seed;
    c["matrix"] = m;
    json r;
    r["k"] = cfg.run.k;
    r["q"] = cfg.run.q;
    r["p"] = cfg.run.p;
    if (cfg.run.iterations) r["L"] = *cfg.run.iterations;
    else r["L"] = "auto";
    r["epsilon"] = cfg.run.epsilon;
    r["tau"] = cfg.run.tau;
    r["g_constant"] = cfg.run.g_constant;
    c["run"] = r;
    json n;
    switch (cfg.noise.kind) {
        case NoiseConfig::Kind::none:
            n["kind"] = "none";
            break;
        case NoiseConfig::Kind::gaussian:
            n["kind"] = "gaussian";
            n["stddev"] = cfg.noise.stddev;
            break;
        case NoiseConfig::Kind::budget_scaled:
            n["kind"] = "budget_scaled";
            n["factor"] = cfg.noise.factor;
            n["budget"] = cfg.noise.budget == ToleranceBudget::Mode::gap_dependent
                              ? "gap_dependent"
                              : "gap_independent";
            break;
    }
    c["noise"] = n;
    if (cfg.mode == ExperimentConfig::Mode::dp_pca) {
        json p;
        p["eps"] = cfg.privacy.eps;
        p["delta"] = cfg.privacy.delta;
        if (cfg.privacy.nu_override) p["nu_override"] = *cfg.privacy.nu_override;
        c["privacy"] = p;
        json nodes;
        nodes["count"] = cfg.nodes.count;
        nodes["split"] =
            cfg.nodes.split == NodesConfig::Split::uniform ? "uniform" : "weighted";
        c["nodes"] = nodes;
    }
    if (cfg.mode == ExperimentConfig::Mode::streaming) c["stream"] = {{"n", cfg.stream.n}};
    if (cfg.round_check) {
        c["round_check"] = {{"B", cfg.round_check->b},
                            {"p", cfg.round_check->p},
                            {"n_mc", cfg.round_check->n_mc},
                            {"t_grid", cfg.round_check->t_grid}};
    }
    c["seeds"] = cfg.seeds;
    json sweep = json::array();
    for (const SweepAxis& axis : cfg.sweep)
        sweep.push_back({{"param", axis.param}, {"values", axis.values}});
    c["sweep"] = sweep;
    c["record_diagnostics"] = cfg.record_diagnostics;
    c["output"] = {{"dir", cfg.output_dir}};
    cfg.canonical = std::move(c);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    return cfg.canonical.dump(2) + "\n";
}

namespace {

struct Problem {
    DenseMatrix a;
    EigenDecomposition truth;
};

Problem build_problem(const ExperimentConfig& cfg) {
    Problem pr;
    switch (cfg.matrix.kind) {
        case MatrixSpecConfig::Kind::power_law: {
            PlantedPsd planted = synth_psd(SpectrumSpec::power_law(cfg.matrix.d, cfg.matrix.alpha),
                                           RandomSource(cfg.matrix.seed));
            pr.a = std::move(planted.a);
            pr.truth = std::move(planted.truth);
            break;
        }
        case MatrixSpecConfig::Kind::values: {
            PlantedPsd planted = synth_psd(SpectrumSpec::explicit_values(cfg.matrix.values),
                                           RandomSource(cfg.matrix.seed));
            pr.a = std::move(planted.a);
            pr.truth = std::move(planted.truth);
            break;
        }
        case MatrixSpecConfig::Kind::file: {
            pr.a = read_matrix_csv(cfg.matrix.path);
            pr.truth = sym_eig(pr.a);
            break;
        }
    }
    if (cfg.run.p > pr.truth.dim()) fail("run.p", "must satisfy p <= d");
    if (cfg.mode == ExperimentConfig::Mode::streaming && cfg.stream.n < cfg.run.iterations.value_or(1))
        fail("stream.n", "must be >= the iteration count");
    return pr;
}

int resolve_iterations(const ExperimentConfig& cfg, const EigenDecomposition& truth) {
    if (cfg.run.iterations) return *cfg.run.iterations;
    switch (cfg.mode) {
        case ExperimentConfig::Mode::dp_pca:
            return iterations_log_d(truth, cfg.run.k, cfg.run.q);
        case ExperimentConfig::Mode::npm:
            if (cfg.noise.kind == NoiseConfig::Kind::budget_scaled &&
                cfg.noise.budget == ToleranceBudget::Mode::gap_independent) {
                return gap_independent_tolerance(truth, cfg.run.k, cfg.run.p, cfg.run.epsilon,
                                                 cfg.run.tau)
                    .iterations;
            }
            [[fallthrough]];
        case ExperimentConfig::Mode::streaming:
            return required_iterations(truth, cfg.run.k, cfg.run.q, cfg.run.epsilon, cfg.run.tau);
    }
    throw ConfigError("unreachable mode");
}

NoiseModel resolve_noise(const ExperimentConfig& cfg, const EigenDecomposition& truth) {
    switch (cfg.noise.kind) {
        case NoiseConfig::Kind::none:
            return NoiseModel::none();
        case NoiseConfig::Kind::gaussian:
            return NoiseModel::iid_gaussian(cfg.noise.stddev);
        case NoiseConfig::Kind::budget_scaled: {
            double bound = 0.0;
            if (cfg.noise.budget == ToleranceBudget::Mode::gap_dependent) {
                bound = noise_tolerance(truth, cfg.run.k, cfg.run.q, cfg.run.p, cfg.run.epsilon,
                                        cfg.run.tau)
                            .bound_g2;
            } else {
                bound = gap_independent_tolerance(truth, cfg.run.k, cfg.run.p, cfg.run.epsilon,
                                                  cfg.run.tau)
                            .bound_g2;
            }
            const double d = truth.dim();
            const double stddev =
                cfg.noise.factor * bound / (std::sqrt(d) + std::sqrt(cfg.run.p));
            return NoiseModel::iid_gaussian(stddev);
        }
    }
    throw ConfigError("unreachable noise kind");
}

std::vector<NodeData> split_matrix(const DenseMatrix& a, const NodesConfig& nodes,
                                   std::uint64_t matrix_seed) {
    const int s = nodes.count;
    std::vector<double> weights(s, 1.0 / s);
    if (nodes.split == NodesConfig::Split::weighted) {
        RandomSource rng(matrix_seed);
        double total = 0.0;
        for (int i = 0; i < s; ++i) {
            weights[i] = rng.uniform(RandomSource::derive_stream(streams::kSplit), i);
            total += weights[i];
        }
        for (double& w : weights) w /= total;
    }
    std::vector<NodeData> parts;
    parts.reserve(s);
    for (int i = 0; i < s; ++i) {
        NodeData node;
        node.node_id = i;
        node.a = a;
        node.a.scale(weights[i]);
        parts.push_back(std::move(node));
    }
    return parts;
}

IterationTrace execute_single(const ExperimentConfig& cfg, const Problem& pr,
                              std::uint64_t seed) {
    const int iterations = resolve_iterations(cfg, pr.truth);
    switch (cfg.mode) {
        case ExperimentConfig::Mode::npm: {
            RunConfig rc;
            rc.k = cfg.run.k;
            rc.q = cfg.run.q;
            rc.p = cfg.run.p;
            rc.iterations = iterations;
            rc.seed = seed;
            rc.record_diagnostics = cfg.record_diagnostics;
            rc.g_constant = cfg.run.g_constant;
            if (cfg.record_diagnostics) rc.g_epsilon = cfg.run.epsilon;
            NoiseModel noise = resolve_noise(cfg, pr.truth);
            return noisy_power_method(pr.a, rc, noise, &pr.truth).trace;
        }
        case ExperimentConfig::Mode::dp_pca: {
            std::vector<NodeData> parts = split_matrix(pr.a, cfg.nodes, cfg.matrix.seed);
            PrivacyParams priv{cfg.privacy.eps, cfg.privacy.delta};
            DpPcaOptions opts;
            opts.nu_override = cfg.privacy.nu_override;
            opts.truth = &pr.truth;
            opts.q = cfg.run.q;
            opts.record_diagnostics = cfg.record_diagnostics;
            opts.g_constant = cfg.run.g_constant;
            if (cfg.record_diagnostics) opts.g_epsilon = cfg.run.epsilon;
            return distributed_private_pca(parts, cfg.run.k, cfg.run.p, iterations, priv,
                                           RandomSource(seed), opts)
                .trace;
        }
        case ExperimentConfig::Mode::streaming: {
            SampleStream stream = gaussian_stream(pr.truth, cfg.stream.n, RandomSource(seed));
            StreamingOptions opts;
            opts.q = cfg.run.q;
            opts.record_diagnostics = cfg.record_diagnostics;
            opts.g_constant = cfg.run.g_constant;
            if (cfg.record_diagnostics) opts.g_epsilon = cfg.run.epsilon;
            return streaming_pca(stream, cfg.run.k, cfg.run.p, iterations, opts).trace;
        }
    }
    throw ConfigError("unreachable mode");
}

std::string csv_field(const std::optional<double>& v) {
    return v ? format_real(*v) : std::string();
}

void write_trace_csv(const std::string& path, const ExperimentConfig& cfg,
                     const std::string& sweep_label, std::uint64_t seed,
                     const IterationTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file " + path);
    out << "# schema_version=1\n";
    out << "# mode=" << mode_name(cfg.mode) << "\n";
    out << "# seed=" << seed << "\n";
    out << "# sweep=" << sweep_label << "\n";
    out << kTraceHeader << "\n";
    for (const IterationRecord& r : trace.records) {
        out << r.iteration << ',' << format_real(r.noise_spectral) << ','
            << csv_field(r.noise_projected) << ',' << csv_field(r.sin_theta_k) << ','
            << csv_field(r.tan_theta_k) << ',' << csv_field(r.tan_theta_q) << ','
            << csv_field(r.cos_theta_q) << ',' << csv_field(r.h) << ',' << csv_field(r.g) << ','
            << csv_field(r.err_ratio_spectral) << ',' << csv_field(r.err_ratio_frobenius)
            << '\n';
    }
}

struct ParsedTrace {
    std::string mode;
    std::uint64_t seed = 0;
    json sweep;
    std::optional<double> sin_theta_k, tan_theta_k, err_ratio_spectral, err_ratio_frobenius, h;
    bool has_rows = false;
};

ParsedTrace parse_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file " + path);
    ParsedTrace t;
    std::string line;
    bool header_seen = false;
    std::vector<std::string> last_row;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string value = line.substr(eq + 1);
            if (key == "mode") t.mode = value;
            else if (key == "seed") t.seed = std::stoull(value);
            else if (key == "sweep") t.sweep = json::parse(value, nullptr, false);
            continue;
        }
        if (!header_seen) {
            if (line != kTraceHeader)
                throw ConfigError("trace file " + path + " has an unexpected header");
            header_seen = true;
            continue;
        }
        last_row.clear();
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) last_row.push_back(cell);
        while (last_row.size() < 11) last_row.push_back("");
        t.has_rows = true;
    }
    if (!header_seen) throw ConfigError("trace file " + path + " lacks a header");
    if (t.mode.empty()) throw ConfigError("trace file " + path + " lacks mode metadata");
    auto opt = [&](std::size_t idx) -> std::optional<double> {
        if (!t.has_rows || last_row[idx].empty()) return std::nullopt;
        return std::stod(last_row[idx]);
    };
    if (t.has_rows) {
        t.sin_theta_k = opt(3);
        t.tan_theta_k = opt(4);
        t.h = opt(7);
        t.err_ratio_spectral = opt(9);
        t.err_ratio_frobenius = opt(10);
    }
    return t;
}

std::vector<json> sweep_points(const ExperimentConfig& cfg) {
    std::vector<json> points{json::object()};
    for (const SweepAxis& axis : cfg.sweep) {
        std::vector<json> next;
        next.reserve(points.size() * axis.values.size());
        for (const json& base : points) {
            for (const json& value : axis.values) {
                json point = base;
                point[axis.param] = value;
                next.push_back(std::move(point));
            }
        }
        points = std::move(next);
    }
    return points;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output_dir);

    struct Job {
        json point;            // sweep point: param pointer -> value
        std::string label;     // compact dump of point
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const json& point : sweep_points(cfg)) {
        const std::string label = point.dump();
        for (std::uint64_t seed : cfg.seeds) jobs.push_back({point, label, seed});
    }

    std::vector<RunOutcome> outcomes(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(jobs.size()); ++i) {
        try {
            const Job& job = jobs[i];
            json pointwise = cfg.canonical;
            for (const auto& [pointer, value] : job.point.items())
                pointwise[json::json_pointer(pointer)] = value;
            ExperimentConfig local = parse_config(pointwise);

            Problem pr = build_problem(local);
            IterationTrace trace = execute_single(local, pr, job.seed);

            RunOutcome& out = outcomes[i];
            out.sweep_label = job.label;
            out.seed = job.seed;
            for (const auto& [pointer, value] : job.point.items())
                out.sweep_values.emplace_back(pointer, value.dump());
            const std::string name = mode_name(local.mode) + "_" + hex16(fnv1a64(job.label)) +
                                     "_s" + std::to_string(job.seed) + ".csv";
            out.trace_path = (fs::path(cfg.output_dir) / name).string();
            write_trace_csv(out.trace_path, local, job.label, job.seed, trace);
            if (!trace.records.empty()) {
                const IterationRecord& last = trace.records.back();
                out.sin_theta_k = last.sin_theta_k;
                out.tan_theta_k = last.tan_theta_k;
                out.err_ratio_spectral = last.err_ratio_spectral;
                out.err_ratio_frobenius = last.err_ratio_frobenius;
                out.h = last.h;
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    std::sort(outcomes.begin(), outcomes.end(), [](const RunOutcome& a, const RunOutcome& b) {
        if (a.sweep_label != b.sweep_label) return a.sweep_label < b.sweep_label;
        return a.seed < b.seed;
    });

    std::vector<std::string> axes;
    for (const SweepAxis& axis : cfg.sweep) axes.push_back(axis.param);
    std::sort(axes.begin(), axes.end());

    ExperimentReport report;
    report.runs = std::move(outcomes);
    report.runs_csv_path = (fs::path(cfg.output_dir) / "runs.csv").string();
    std::ofstream runs(report.runs_csv_path, std::ios::binary);
    if (!runs) throw ConfigError("cannot write " + report.runs_csv_path);
    for (const std::string& axis : axes) runs << axis << ',';
    runs << "seed,trace_file,sin_theta_k,tan_theta_k,err_ratio_spectral,err_ratio_frobenius,h\n";
    for (const RunOutcome& out : report.runs) {
        for (const std::string& axis : axes) {
            for (const auto& [param, value] : out.sweep_values)
                if (param == axis) runs << value;
            runs << ',';
        }
        runs << out.seed << ',' << fs::path(out.trace_path).filename().string() << ','
             << csv_field(out.sin_theta_k) << ',' << csv_field(out.tan_theta_k) << ','
             << csv_field(out.err_ratio_spectral) << ',' << csv_field(out.err_ratio_frobenius)
             << ',' << csv_field(out.h) << '\n';
    }
    return report;
}

std::string summarize_directory(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "runs.csv" || name == "summary.csv") continue;
        if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no trace files in " + dir);

    std::vector<ParsedTrace> traces;
    traces.reserve(files.size());
    std::string mode;
    for (const std::string& file : files) {
        ParsedTrace t = parse_trace_csv(file);
        if (mode.empty()) mode = t.mode;
        else if (mode != t.mode)
            throw ConfigError("mixed modes in " + dir + ": " + mode + " vs " + t.mode);
        traces.push_back(std::move(t));
    }

    std::set<std::string> axis_set;
    for (const ParsedTrace& t : traces)
        if (t.sweep.is_object())
            for (const auto& [key, value] : t.sweep.items()) {
                (void)value;
                axis_set.insert(key);
            }
    std::vector<std::string> axes(axis_set.begin(), axis_set.end());

    auto label_of = [](const ParsedTrace& t) {
        return t.sweep.is_object() ? t.sweep.dump() : std::string("{}");
    };
    std::stable_sort(traces.begin(), traces.end(), [&](const ParsedTrace& a, const ParsedTrace& b) {
        const std::string la = label_of(a), lb = label_of(b);
        if (la != lb) return la < lb;
        return a.seed < b.seed;
    });

    const std::vector<std::string> metric_names{"sin_theta_k", "tan_theta_k",
                                                "err_ratio_spectral", "err_ratio_frobenius", "h"};
    auto metric_value = [](const ParsedTrace& t, std::size_t m) -> std::optional<double> {
        switch (m) {
            case 0: return t.sin_theta_k;
            case 1: return t.tan_theta_k;
            case 2: return t.err_ratio_spectral;
            case 3: return t.err_ratio_frobenius;
            default: return t.h;
        }
    };

    // per sweep-point mean and sample stddev, metric by metric
    std::map<std::string, std::vector<std::pair<std::optional<double>, std::optional<double>>>>
        aggregates;
    for (auto it = traces.begin(); it != traces.end();) {
        auto group_end = it;
        while (group_end != traces.end() && label_of(*group_end) == label_of(*it)) ++group_end;
        std::vector<std::pair<std::optional<double>, std::optional<double>>> stats;
        for (std::size_t m = 0; m < metric_names.size(); ++m) {
            std::vector<double> vals;
            for (auto g = it; g != group_end; ++g)
                if (auto v = metric_value(*g, m)) vals.push_back(*v);
            if (vals.empty()) {
                stats.emplace_back(std::nullopt, std::nullopt);
                continue;
            }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            if (vals.size() > 1) {
                for (double v : vals) var += (v - mean) * (v - mean);
                var /= static_cast<double>(vals.size() - 1);
            }
            stats.emplace_back(mean, std::sqrt(var));
        }
        aggregates[label_of(*it)] = std::move(stats);
        it = group_end;
    }

    const std::string out_path = (fs::path(dir) / "summary.csv").string();
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + out_path);
    for (const std::string& axis : axes) out << axis << ',';
    out << "seed";
    for (const std::string& m : metric_names) out << ',' << m;
    for (const std::string& m : metric_names) out << ',' << m << "_mean," << m << "_stddev";
    out << '\n';
    for (const ParsedTrace& t : traces) {
        for (const std::string& axis : axes) {
            if (t.sweep.is_object() && t.sweep.contains(axis)) out << t.sweep.at(axis).dump();
            out << ',';
        }
        out << t.seed;
        for (std::size_t m = 0; m < metric_names.size(); ++m)
            out << ',' << csv_field(metric_value(t, m));
        const auto& stats = aggregates.at(label_of(t));
        for (std::size_t m = 0; m < metric_names.size(); ++m)
            out << ',' << csv_field(stats[m].first) << ',' << csv_field(stats[m].second);
        out << '\n';
    }
    return out_path;
}

BudgetPrintout compute_budgets(const ExperimentConfig& cfg) {
    Problem pr = build_problem(cfg);
    BudgetPrintout b;
    b.sigma_k = pr.truth.sigma(cfg.run.k);
    b.sigma_q1 = pr.truth.sigma(cfg.run.q + 1);
    b.gap_dependent = noise_tolerance(pr.truth, cfg.run.k, cfg.run.q, cfg.run.p, cfg.run.epsilon,
                                      cfg.run.tau);
    b.gap_independent = gap_independent_tolerance(pr.truth, cfg.run.k, cfg.run.p, cfg.run.epsilon,
                                                  cfg.run.tau);
    b.iterations_log_d = iterations_log_d(pr.truth, cfg.run.k, cfg.run.q);
    return b;
}

RoundCheckReport run_round_check(const ExperimentConfig& cfg) {
    if (!cfg.round_check) fail("round_check", "missing (required by check-round)");
    Problem pr = build_problem(cfg);
    const std::uint64_t seed = cfg.seeds.front();
    SampleStream stream = gaussian_stream(pr.truth, std::max<long long>(cfg.stream.n, 1),
                                          RandomSource(seed));
    return round_check(stream, cfg.round_check->b, cfg.round_check->p, cfg.round_check->n_mc,
                       cfg.round_check->t_grid, RandomSource(seed));
}

}  // namespace npm
