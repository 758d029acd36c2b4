#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "otafl/errors.hpp"

namespace otafl::ota {

using Complex = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Transmit-side plan for one user: amplitude weight, gradient normalizer,
/// and the power cap both must respect (|a|^2 <= P_a).
struct TransmitPlan {
    Complex a{0.0, 0.0};
    double v = 0.0;
    double p_max = 0.0;
};

/// Full-power zero-phase plan: a = sqrt(P_a), v = grad_normalizer(g, D).
TransmitPlan make_transmit_plan(const VectorXd& g, double p_a);

struct AggregateResult {
    VectorXd g_hat;          // recovered aggregate, length D
    VectorXd e2;             // target_sum - g_hat, exact by construction
    std::int64_t noise_draws = 0;
};

/// ||g||_2 / sqrt(D). Throws ZeroGradientError when g is all-zero; the
/// caller must drop that user from the round before transmission.
double grad_normalizer(const VectorXd& g, Eigen::Index d);

/// f[n] = a * g[n] / v. With v = grad_normalizer(g, D) the per-symbol
/// average power ||f||^2 / D equals |a|^2.
VectorXcd precode_symbols(const VectorXd& g, Complex a, double v);

/// eta = 1 / max_u |<q, h_u>| over the given (selected) channels.
double receive_scaling_eta(const VectorXcd& q, const std::vector<VectorXcd>& channels);

/// Simulates one over-the-air aggregation of the given users' gradient
/// vectors: full-power zero-phase transmit weights a_u = sqrt(P_a),
/// per-user normalizers v_u, AWGN of power sigma_n2 per real quadrature,
/// common receive scaling eta = 1/max|<q,h_u>|, and per-user matched
/// de-normalization at the server from the digitally signalled v_u, the
/// common sqrt(P_a), and the known coefficient <q,h_u>. Recovery is
/// unbiased; a weak user's share arrives with noise amplified by the
/// inverse of its own beamformed gain. Deterministic given the seed.
AggregateResult receive_and_combine(const std::vector<VectorXcd>& channels,
                                    const std::vector<VectorXd>& gradients,
                                    const VectorXcd& q, double sigma_n2, double p_a,
                                    std::uint64_t rng_seed);

/// Closed-form aggregation MSE: K * sigma_n2 * g_norm2 / (P_a * max_gain).
double theoretical_mse(int k_users, double sigma_n2, double g_norm2, double p_a,
                       double max_gain);

}  // namespace otafl::ota
