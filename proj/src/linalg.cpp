#include "npm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npm/kernels.hpp"

namespace npm {

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("multiply: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    kernels::matmul(a.data(), a.rows(), a.cols(), b.data(), b.cols(), c.data());
    return c;
}

DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw ConfigError("multiply_tn: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    kernels::matmul_tn(a.data(), a.rows(), a.cols(), b.data(), b.cols(), c.data());
    return c;
}

DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw ConfigError("multiply_nt: column counts differ");
    DenseMatrix c(a.rows(), b.rows());
    kernels::matmul_nt(a.data(), a.rows(), a.cols(), b.data(), b.rows(), c.data());
    return c;
}

namespace {

double frobenius(const DenseMatrix& m) {
    double s = 0.0;
    const double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

// Fills `out` columns [filled, want) with unit vectors orthogonal to the
// columns of every matrix in `bases` and to previously filled columns.
// Greedy over canonical basis vectors: at each step the candidate with the
// largest residual mass is orthonormalized and accepted.
void gram_schmidt_fill(const std::vector<const DenseMatrix*>& bases, DenseMatrix& out, int filled,
                       int want) {
    const int d = out.rows();
    // residual mass of e_b against the current accepted set
    std::vector<double> mass(d, 1.0);
    auto subtract_basis = [&](const DenseMatrix& m, int col) {
        for (int b = 0; b < d; ++b) {
            const double v = m(b, col);
            mass[b] -= v * v;
        }
    };
    for (const DenseMatrix* m : bases)
        for (int j = 0; j < m->cols(); ++j) subtract_basis(*m, j);
    for (int j = 0; j < filled; ++j) subtract_basis(out, j);

    std::vector<double> v(d);
    for (int t = filled; t < want; ++t) {
        int best = 0;
        for (int b = 1; b < d; ++b)
            if (mass[b] > mass[best]) best = b;

        std::fill(v.begin(), v.end(), 0.0);
        v[best] = 1.0;
        // two Gram-Schmidt passes against all accepted columns
        for (int pass = 0; pass < 2; ++pass) {
            auto project_out = [&](const DenseMatrix& m, int col) {
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += m(i, col) * v[i];
                for (int i = 0; i < d; ++i) v[i] -= dot * m(i, col);
            };
            for (const DenseMatrix* m : bases)
                for (int j = 0; j < m->cols(); ++j) project_out(*m, j);
            for (int j = 0; j < t; ++j) project_out(out, j);
        }
        double norm = 0.0;
        for (int i = 0; i < d; ++i) norm += v[i] * v[i];
        norm = std::sqrt(norm);
        if (norm < 1e-8) throw NumericalError("orthonormal completion failed: degenerate basis");
        for (int i = 0; i < d; ++i) out(i, t) = v[i] / norm;

        subtract_basis(out, t);
        mass[best] = -1.0;
    }
}

}  // namespace

QrResult qr_factorize(const DenseMatrix& m) {
    const int d = m.rows();
    const int p = m.cols();
    if (d < p) throw ConfigError("qr_factorize requires rows >= cols");

    const double scale = frobenius(m);
    const double pivot_tol = 1e-12 * scale;

    DenseMatrix w(m);  // reduced in place
    std::vector<std::vector<double>> reflectors;
    std::vector<double> betas;
    reflectors.reserve(p);
    betas.reserve(p);

    std::vector<double> v(d);
    for (int j = 0; j < p; ++j) {
        double normx = 0.0;
        for (int i = j; i < d; ++i) normx += w(i, j) * w(i, j);
        normx = std::sqrt(normx);

        std::fill(v.begin(), v.end(), 0.0);
        double beta = 0.0;
        if (normx > 0.0) {
            const double alpha = w(j, j) >= 0.0 ? -normx : normx;
            for (int i = j; i < d; ++i) v[i] = w(i, j);
            v[j] -= alpha;
            double vtv = 0.0;
            for (int i = j; i < d; ++i) vtv += v[i] * v[i];
            if (vtv > 0.0) {
                beta = 2.0 / vtv;
                kernels::apply_reflector(w.data(), d, p, v.data(), beta, j, j);
            }
        }
        reflectors.push_back(v);
        betas.push_back(beta);
    }

    QrResult out;
    out.r = DenseMatrix(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) out.r(i, j) = w(i, j);

    // thin Q: apply reflectors in reverse to the first p identity columns
    out.q = DenseMatrix(d, p);
    for (int j = 0; j < p; ++j) out.q(j, j) = 1.0;
    for (int j = p - 1; j >= 0; --j) {
        if (betas[j] != 0.0)
            kernels::apply_reflector(out.q.data(), d, p, reflectors[j].data(), betas[j], j, 0);
    }

    for (int j = 0; j < p; ++j) {
        if (out.r(j, j) < 0.0) {
            for (int c = j; c < p; ++c) out.r(j, c) = -out.r(j, c);
            for (int i = 0; i < d; ++i) out.q(i, j) = -out.q(i, j);
        }
    }

    std::vector<int> deficient;
    for (int j = 0; j < p; ++j)
        if (std::abs(out.r(j, j)) < pivot_tol) deficient.push_back(j);

    if (!deficient.empty()) {
        out.rank_deficient = true;
        DenseMatrix accepted(d, p);  // flagged columns zeroed, then refilled
        int n_ok = 0;
        for (int j = 0; j < p; ++j) {
            if (std::find(deficient.begin(), deficient.end(), j) != deficient.end()) continue;
            for (int i = 0; i < d; ++i) accepted(i, n_ok) = out.q(i, j);
            ++n_ok;
        }
        DenseMatrix replacement(d, static_cast<int>(deficient.size()));
        if (n_ok > 0) {
            DenseMatrix kept = accepted.columns(0, n_ok);
            gram_schmidt_fill({&kept}, replacement, 0, replacement.cols());
        } else {
            gram_schmidt_fill({}, replacement, 0, replacement.cols());
        }
        for (std::size_t t = 0; t < deficient.size(); ++t)
            for (int i = 0; i < d; ++i) out.q(i, deficient[t]) = replacement(i, static_cast<int>(t));
    }
    return out;
}

namespace {

// Cyclic Jacobi on a symmetric matrix; clips tiny negative eigenvalues
// unconditionally when enforce_psd is false (internal Gram use).
EigenDecomposition jacobi_eig(const DenseMatrix& a, const SymEigOptions& opts, bool enforce_psd) {
    const int d = a.rows();
    DenseMatrix b(a);
    DenseMatrix vecs = DenseMatrix::identity(d);

    const double target = opts.off_tol_factor * frobenius(a);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += 2.0 * b(i, j) * b(i, j);
        if (std::sqrt(off) <= target) break;

        for (int i = 0; i < d - 1; ++i) {
            for (int j = i + 1; j < d; ++j) {
                const double apq = b(i, j);
                if (apq == 0.0) continue;
                const double app = b(i, i);
                const double aqq = b(j, j);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int r = 0; r < d; ++r) {
                    const double bri = b(r, i);
                    const double brj = b(r, j);
                    b(r, i) = c * bri - s * brj;
                    b(r, j) = s * bri + c * brj;
                }
                for (int r = 0; r < d; ++r) {
                    const double bir = b(i, r);
                    const double bjr = b(j, r);
                    b(i, r) = c * bir - s * bjr;
                    b(j, r) = s * bir + c * bjr;
                }
                for (int r = 0; r < d; ++r) {
                    const double vri = vecs(r, i);
                    const double vrj = vecs(r, j);
                    vecs(r, i) = c * vri - s * vrj;
                    vecs(r, j) = s * vri + c * vrj;
                }
            }
        }
    }

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return b(x, x) > b(y, y); });

    EigenDecomposition out;
    out.values.resize(d);
    out.vectors = DenseMatrix(d, d);
    for (int j = 0; j < d; ++j) {
        double lambda = b(order[j], order[j]);
        if (lambda < 0.0) {
            if (enforce_psd && lambda < opts.negative_floor) {
                throw NumericalError("sym_eig: eigenvalue " + std::to_string(lambda) +
                                     " below PSD tolerance");
            }
            lambda = 0.0;
        }
        out.values[j] = lambda;
        for (int i = 0; i < d; ++i) out.vectors(i, j) = vecs(i, order[j]);
    }
    return out;
}

}  // namespace

EigenDecomposition sym_eig(const DenseMatrix& a, const SymEigOptions& opts) {
    if (a.rows() != a.cols()) throw ConfigError("sym_eig requires a square matrix");
    if (a.rows() > opts.dim_cap) {
        throw ConfigError("sym_eig dimension " + std::to_string(a.rows()) + " exceeds cap " +
                          std::to_string(opts.dim_cap));
    }
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > opts.asym_tol)
                throw ConfigError("sym_eig: asymmetry above tolerance at (" + std::to_string(i) +
                                  "," + std::to_string(j) + ")");
    return jacobi_eig(a, opts, /*enforce_psd=*/true);
}

namespace {

struct ThinGramSvd {
    std::vector<double> sigma;  // descending
    EigenDecomposition gram;    // of the smaller Gram matrix
    bool gram_of_columns;       // true: gram = M^T M, false: gram = M M^T
};

ThinGramSvd gram_svd(const DenseMatrix& m) {
    ThinGramSvd out;
    out.gram_of_columns = m.cols() <= m.rows();
    DenseMatrix g = out.gram_of_columns ? multiply_tn(m, m) : multiply_nt(m, m);
    // Gram matrices are PSD by construction; negatives are rounding noise.
    SymEigOptions opts;
    opts.asym_tol = 1e-6 * (1.0 + max_abs(g));
    opts.dim_cap = std::max(g.rows(), 512);
    out.gram = jacobi_eig(g, opts, /*enforce_psd=*/false);
    out.sigma.resize(out.gram.values.size());
    for (std::size_t i = 0; i < out.sigma.size(); ++i) out.sigma[i] = std::sqrt(out.gram.values[i]);
    return out;
}

}  // namespace

std::vector<double> singular_values(const DenseMatrix& m) { return gram_svd(m).sigma; }

DenseMatrix pseudo_inverse(const DenseMatrix& m, double tol) {
    const int q = m.rows();
    const int p = m.cols();
    ThinGramSvd svd = gram_svd(m);
    const double sigma_max = svd.sigma.empty() ? 0.0 : svd.sigma.front();
    if (tol <= 0.0) tol = 1e-12 * std::max(q, p) * sigma_max;

    int rank = 0;
    while (rank < static_cast<int>(svd.sigma.size()) && svd.sigma[rank] > tol) ++rank;

    DenseMatrix pinv(p, q);
    if (rank == 0) return pinv;

    if (svd.gram_of_columns) {
        // M = U S V^T with V from gram(M^T M); u_i = M v_i / s_i
        DenseMatrix v_r = svd.gram.vectors.columns(0, rank);
        DenseMatrix u_r = multiply(m, v_r);  // q x rank, columns scaled by s_i
        // pinv = sum_i v_i u_i^T / s_i^2  (extra 1/s_i absorbs the column scale)
        for (int j = 0; j < rank; ++j) {
            const double inv_s2 = 1.0 / (svd.sigma[j] * svd.sigma[j]);
            for (int c = 0; c < q; ++c) u_r(c, j) *= inv_s2;
        }
        DenseMatrix result = multiply_nt(v_r, u_r);
        return result;
    }
    // gram = M M^T: columns of gram.vectors are u_i; v_i = M^T u_i / s_i
    DenseMatrix u_r = svd.gram.vectors.columns(0, rank);
    DenseMatrix v_r = multiply_tn(m, u_r);  // p x rank, columns scaled by s_i
    for (int j = 0; j < rank; ++j) {
        const double inv_s2 = 1.0 / (svd.sigma[j] * svd.sigma[j]);
        for (int c = 0; c < p; ++c) v_r(c, j) *= inv_s2;
    }
    DenseMatrix result = multiply_nt(v_r, u_r);
    return result;
}

double matrix_norm(const DenseMatrix& m, NormKind kind) {
    switch (kind) {
        case NormKind::frobenius:
            return frobenius(m);
        case NormKind::entrywise_max:
            return max_abs(m);
        case NormKind::spectral: {
            if (m.rows() == 1 || m.cols() == 1) return frobenius(m);
            std::vector<double> s = singular_values(m);
            return s.empty() ? 0.0 : s.front();
        }
    }
    throw ConfigError("unknown norm kind");
}

DenseMatrix orthonormal_completion(const DenseMatrix& u) {
    const int d = u.rows();
    const int m = u.cols();
    if (m >= d) throw ConfigError("orthonormal_completion: basis already spans the space");
    DenseMatrix out(d, d - m);
    gram_schmidt_fill({&u}, out, 0, d - m);
    return out;
}

}  // namespace npm
