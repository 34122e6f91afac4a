#pragma once

#include <optional>
#include <vector>

#include "npm/matrix.hpp"
#include "npm/power_method.hpp"
#include "npm/random.hpp"

namespace npm {

struct PrivacyParams {
    double eps = 0.5;    // privacy epsilon, in (0,1)
    double delta = 1e-6; // privacy delta, in (0,1)
};

/// One computing node's share of the aggregate matrix.
struct NodeData {
    int node_id = 0;
    DenseMatrix a;  // d x d symmetric PSD
};

struct RoundComm {
    long long broadcast = 0;  // reals sent central -> nodes
    long long uploaded = 0;   // reals sent nodes -> central
};

/// Exact count of real numbers exchanged in the simulated run.
struct CommLedger {
    long long reals_broadcast = 0;
    long long reals_uploaded = 0;
    std::vector<RoundComm> rounds;

    long long total() const { return reals_broadcast + reals_uploaded; }
};

/// Gaussian-mechanism noise scale: nu = 4 * eps^-1 * sqrt(p * L * ln(1/delta)).
double calibrate_noise(const PrivacyParams& priv, int p, int iterations);

/// mu(A) = d * max|U| for A = U Lambda U^T.
double incoherence(const EigenDecomposition& truth, int d);

struct DpPcaOptions {
    /// Replaces the calibrated nu (0 disables noise entirely).
    std::optional<double> nu_override;

    // diagnostics against the aggregate truth
    const EigenDecomposition* truth = nullptr;
    int q = 0;  // 0 -> k
    bool record_diagnostics = false;
    std::optional<double> g_epsilon;
    double g_constant = 0.25;

    /// When set, receives the per-iteration central noise sum_i G^(i).
    std::vector<DenseMatrix>* capture_central_noise = nullptr;
    /// When set, receives per-node noise in (iteration, node) order.
    std::vector<DenseMatrix>* capture_node_noise = nullptr;
};

struct DpPcaResult {
    DenseMatrix x;
    CommLedger ledger;
    IterationTrace trace;
};

/// In-process simulation of the distributed private power method: per
/// round the central node broadcasts X, every node returns
/// A_i X + G_i with G_i ~ N(0, ||X||_inf^2 nu^2), and the central node sums
/// in node-id order and QR-factorizes. Communication is counted exactly.
DpPcaResult distributed_private_pca(const std::vector<NodeData>& parts, int k, int p,
                                    int iterations, const PrivacyParams& priv,
                                    const RandomSource& rng, const DpPcaOptions& opts = {});

/// Utility comparator nu * sqrt(mu * s * ln d * ln L) / (sigma_k - sigma_{q+1}).
double utility_bound_expression(double sigma_k, double sigma_q1, int s, double dim,
                                int iterations, double nu, double mu);
double utility_bound_expression(const EigenDecomposition& truth, int k, int q, int s,
                                int iterations, double nu, double mu);

}  // namespace npm
