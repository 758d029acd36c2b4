#include "otafl/ota.hpp"

#include <cmath>
#include <random>

namespace otafl::ota {

TransmitPlan make_transmit_plan(const VectorXd& g, double p_a) {
    if (!(p_a > 0.0)) throw std::invalid_argument("transmit power must be positive");
    TransmitPlan plan;
    plan.p_max = p_a;
    plan.a = Complex(std::sqrt(p_a), 0.0);
    plan.v = grad_normalizer(g, g.size());
    return plan;
}

double grad_normalizer(const VectorXd& g, Eigen::Index d) {
    if (d < 1 || g.size() != d) throw std::invalid_argument("normalizer dimension mismatch");
    const double norm = g.norm();
    if (norm == 0.0) throw ZeroGradientError("all-zero gradient has no normalizer");
    return norm / std::sqrt(static_cast<double>(d));
}

VectorXcd precode_symbols(const VectorXd& g, Complex a, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("normalizer must be positive");
    VectorXcd f(g.size());
    for (Eigen::Index n = 0; n < g.size(); ++n) f[n] = a * (g[n] / v);
    return f;
}

double receive_scaling_eta(const VectorXcd& q, const std::vector<VectorXcd>& channels) {
    if (channels.empty()) throw EmptySelectionError("no channels for receive scaling");
    double max_amp = 0.0;
    for (const auto& h : channels) {
        if (h.size() != q.size()) throw std::invalid_argument("channel size mismatch");
        max_amp = std::max(max_amp, std::abs(q.dot(h)));
    }
    if (max_amp == 0.0) throw DegenerateChannelError("all beamformed gains are zero");
    return 1.0 / max_amp;
}

AggregateResult receive_and_combine(const std::vector<VectorXcd>& channels,
                                    const std::vector<VectorXd>& gradients,
                                    const VectorXcd& q, double sigma_n2, double p_a,
                                    std::uint64_t rng_seed) {
    if (channels.empty()) throw EmptySelectionError("empty selection");
    if (channels.size() != gradients.size()) {
        throw std::invalid_argument("channels/gradients size mismatch");
    }
    if (std::abs(q.norm() - 1.0) > 1e-9) throw std::invalid_argument("beamformer must be unit norm");
    if (!(p_a > 0.0)) throw std::invalid_argument("transmit power must be positive");

    const Eigen::Index d = gradients.front().size();
    const std::size_t n_users = channels.size();
    const double sqrt_pa = std::sqrt(p_a);

    std::vector<double> v(n_users);
    std::vector<Complex> qh(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        if (gradients[u].size() != d) throw std::invalid_argument("gradient length mismatch");
        v[u] = grad_normalizer(gradients[u], d);  // throws ZeroGradientError
        qh[u] = q.dot(channels[u]);
    }
    const double eta = receive_scaling_eta(q, channels);

    std::mt19937_64 rng(rng_seed);
    // sigma_n2 is the noise power per real quadrature.
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma_n2));

    VectorXd target = VectorXd::Zero(d);
    for (const auto& g : gradients) target += g;

    AggregateResult result;
    result.g_hat = VectorXd::Zero(d);
    // Superposition with one AWGN term per arriving stream. The server
    // de-normalizes each user's share with the signalled v_u, the common
    // sqrt(P_a), and the known complex coefficient <q, h_u>, so recovery is
    // unbiased and a weak user's share arrives noise-amplified by the
    // inverse of its own beamformed gain.
    for (std::size_t u = 0; u < n_users; ++u) {
        const Complex f_scale = sqrt_pa / v[u];  // a_u / v_u with a_u = sqrt(P_a)
        const double through = std::abs(qh[u]);
        if (through == 0.0) {
            throw DegenerateChannelError("transmitting user has zero beamformed gain");
        }
        const Complex phase = qh[u] / through;
        const double denorm = v[u] / (sqrt_pa * eta * through);  // common eta, own residual
        for (Eigen::Index n = 0; n < d; ++n) {
            const Complex noise = sigma_n2 > 0.0 ? Complex(gauss(rng), gauss(rng))
                                                 : Complex(0.0, 0.0);
            const Complex received = qh[u] * (f_scale * gradients[u][n]) + noise;
            const double recovered = (eta * received * std::conj(phase)).real();
            result.g_hat[n] += denorm * recovered;
        }
        result.noise_draws += d;
    }
    result.e2 = target - result.g_hat;
    return result;
}

double theoretical_mse(int k_users, double sigma_n2, double g_norm2, double p_a,
                       double max_gain) {
    if (k_users < 1) throw std::invalid_argument("need at least one user");
    if (!(p_a > 0.0)) throw std::invalid_argument("transmit power must be positive");
    if (!(max_gain > 0.0)) throw DegenerateChannelError("non-positive channel gain");
    return static_cast<double>(k_users) * sigma_n2 * g_norm2 / (p_a * max_gain);
}

}  // namespace otafl::ota
