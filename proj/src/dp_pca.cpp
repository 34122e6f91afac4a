#include "npm/dp_pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "npm/generate.hpp"
#include "npm/linalg.hpp"
#include "trace_diag.hpp"

namespace npm {

namespace {

void validate_privacy(const PrivacyParams& priv) {
    if (!(priv.eps > 0.0 && priv.eps < 1.0))
        throw ConfigError("privacy eps must be in the open interval (0,1)");
    if (!(priv.delta > 0.0 && priv.delta < 1.0))
        throw ConfigError("privacy delta must be in the open interval (0,1)");
}

}  // namespace

double calibrate_noise(const PrivacyParams& priv, int p, int iterations) {
    validate_privacy(priv);
    if (p < 1 || iterations < 1) throw ConfigError("calibrate_noise requires p, L >= 1");
    return 4.0 / priv.eps *
           std::sqrt(static_cast<double>(p) * iterations * std::log(1.0 / priv.delta));
}

double incoherence(const EigenDecomposition& truth, int d) {
    if (d != truth.dim()) throw ConfigError("incoherence: dimension mismatch with truth");
    return static_cast<double>(d) * max_abs(truth.vectors);
}

DpPcaResult distributed_private_pca(const std::vector<NodeData>& parts, int k, int p,
                                    int iterations, const PrivacyParams& priv,
                                    const RandomSource& rng, const DpPcaOptions& opts) {
    if (parts.empty()) throw ConfigError("distributed_private_pca requires at least one node");
    const int d = parts.front().a.rows();
    const int s = static_cast<int>(parts.size());
    for (const NodeData& node : parts) {
        if (node.a.rows() != d || node.a.cols() != d)
            throw ConfigError("node " + std::to_string(node.node_id) +
                              " matrix dimensions differ across nodes");
        if (!node.a.all_finite())
            throw ConfigError("node " + std::to_string(node.node_id) + " matrix must be finite");
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (std::abs(node.a(i, j) - node.a(j, i)) > 1e-10)
                    throw ConfigError("node " + std::to_string(node.node_id) +
                                      " matrix must be symmetric within 1e-10");
    }
    if (k < 1 || k > p || p > d) throw ConfigError("distributed_private_pca requires 1 <= k <= p <= d");
    if (iterations < 1) throw ConfigError("distributed_private_pca requires L >= 1");

    const int q = opts.q == 0 ? k : opts.q;
    if (q < k || q > p) throw ConfigError("distributed_private_pca requires k <= q <= p");
    if (opts.record_diagnostics && opts.truth == nullptr)
        throw ConfigError("diagnostics require the aggregate truth");

    // the central sum is taken in ascending node-id order
    std::vector<int> order(parts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return parts[x].node_id < parts[y].node_id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (parts[order[i]].node_id == parts[order[i - 1]].node_id)
            throw ConfigError("duplicate node_id " + std::to_string(parts[order[i]].node_id));

    double nu = 0.0;
    if (opts.nu_override) {
        if (*opts.nu_override < 0.0) throw ConfigError("nu override must be >= 0");
        nu = *opts.nu_override;
    } else {
        nu = calibrate_noise(priv, p, iterations);
    }

    DpPcaResult out;
    DenseMatrix x = random_orthonormal(d, p, rng, streams::kInit);

    std::optional<detail::DiagContext> diag;
    if (opts.record_diagnostics) {
        diag.emplace(*opts.truth, k, q, opts.g_epsilon, opts.g_constant);
        out.trace.records.push_back(diag->record(0, x, nullptr));
    }

    const long long per_leg = static_cast<long long>(s) * d * p;
    for (int ell = 1; ell <= iterations; ++ell) {
        // central node broadcasts X_{l-1} to all s nodes
        out.ledger.reals_broadcast += per_leg;

        const double entry_stddev = nu * matrix_norm(x, NormKind::entrywise_max);
        DenseMatrix y(d, p);
        DenseMatrix central_noise;
        const bool want_central = opts.capture_central_noise != nullptr || diag.has_value();
        if (want_central && entry_stddev > 0.0) central_noise = DenseMatrix(d, p);

        for (int idx : order) {
            const NodeData& node = parts[idx];
            DenseMatrix contribution = multiply(node.a, x);
            if (entry_stddev > 0.0) {
                DenseMatrix g = gaussian_matrix(
                    d, p, entry_stddev, rng,
                    RandomSource::derive_stream(streams::kNode,
                                                static_cast<std::uint64_t>(node.node_id), ell));
                contribution.add_scaled(g, 1.0);
                if (!central_noise.empty()) central_noise.add_scaled(g, 1.0);
                if (opts.capture_node_noise != nullptr)
                    opts.capture_node_noise->push_back(std::move(g));
            } else if (opts.capture_node_noise != nullptr) {
                opts.capture_node_noise->push_back(DenseMatrix(d, p));
            }
            // each node uploads its d x p response
            y.add_scaled(contribution, 1.0);
        }
        out.ledger.reals_uploaded += per_leg;
        out.ledger.rounds.push_back({per_leg, per_leg});

        if (want_central && central_noise.empty()) central_noise = DenseMatrix(d, p);
        if (opts.capture_central_noise != nullptr)
            opts.capture_central_noise->push_back(central_noise);

        if (!y.all_finite())
            throw NumericalError("iterate became non-finite at iteration " + std::to_string(ell));
        QrResult qr = qr_factorize(y);
        x = std::move(qr.q);
        out.trace.rank_collapse = out.trace.rank_collapse || qr.rank_deficient;

        if (diag) {
            const DenseMatrix* noise_ptr = entry_stddev > 0.0 ? &central_noise : nullptr;
            out.trace.records.push_back(diag->record(ell, x, noise_ptr));
        }
    }

    out.x = std::move(x);
    return out;
}

double utility_bound_expression(double sigma_k, double sigma_q1, int s, double dim,
                                int iterations, double nu, double mu) {
    if (!(sigma_k > sigma_q1))
        throw ConfigError("zero spectral gap: utility bound inapplicable");
    if (s < 1 || iterations < 1) throw ConfigError("utility bound requires s, L >= 1");
    if (nu < 0.0 || mu < 0.0) throw ConfigError("utility bound requires nu, mu >= 0");
    return nu * std::sqrt(mu * s * std::log(dim) * std::log(static_cast<double>(iterations))) /
           (sigma_k - sigma_q1);
}

double utility_bound_expression(const EigenDecomposition& truth, int k, int q, int s,
                                int iterations, double nu, double mu) {
    return utility_bound_expression(truth.sigma(k), truth.sigma(q + 1), s,
                                    static_cast<double>(truth.dim()), iterations, nu, mu);
}

}  // namespace npm
