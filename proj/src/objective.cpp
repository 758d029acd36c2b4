#include "otafl/objective.hpp"

#include <cmath>

namespace otafl::objective {

double comm_penalty(const SelectionVector& sel, const VectorXcd& q,
                    const std::vector<VectorXcd>& channels, double sigma_n2,
                    double p_a) {
    const Eigen::Index n = sel.size();
    if (static_cast<Eigen::Index>(channels.size()) != n || sel.samples.size() != n) {
        throw std::invalid_argument("selection/channel size mismatch");
    }
    const double selected = sel.selected_samples();
    if (!(selected > 0.0)) throw EmptySelectionError("no selected samples");

    double excluded = 0.0;
    double bottleneck = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
        excluded += (1.0 - sel.e[u]) * sel.samples[u];
        if (sel.e[u] <= 0.0) continue;
        const double gain = std::norm(q.dot(channels[u]));
        if (!(gain > 0.0)) throw DegenerateChannelError("selected user has zero gain");
        bottleneck = std::max(bottleneck, sel.e[u] * sel.samples[u] * sel.samples[u] / gain);
    }
    const double u_count = static_cast<double>(n);
    return (4.0 / (u_count * u_count)) * excluded * excluded +
           sigma_n2 / (p_a * selected * selected) * bottleneck;
}

double contraction_factor(const BoundParams& params, double r, std::optional<double> coeff) {
    if (r < 0.0) throw std::invalid_argument("penalty must be non-negative");
    const double a = coeff.value_or(2.0 * params.alpha2);
    return 1.0 - (params.mu / params.smooth) * (1.0 - a * r);
}

double bound_after_T(const BoundParams& params, const std::vector<double>& r_list,
                     double initial_gap, std::optional<double> coeff) {
    if (r_list.empty()) throw std::invalid_argument("need at least one round");
    if (initial_gap < 0.0) throw std::invalid_argument("initial gap must be non-negative");
    const std::size_t rounds = r_list.size();
    std::vector<double> phi(rounds);
    for (std::size_t t = 0; t < rounds; ++t) phi[t] = contraction_factor(params, r_list[t], coeff);

    double prod_all = 1.0;
    for (double p : phi) prod_all *= p;

    // suffix[t] = prod_{tau=t+1}^{T-1} phi_tau
    double noise = r_list[rounds - 1];
    double suffix = 1.0;
    for (std::size_t t = rounds - 1; t-- > 0;) {
        suffix *= phi[t + 1];
        noise += suffix * r_list[t];
    }
    return prod_all * initial_gap + (params.alpha1 / params.smooth) * noise;
}

double noisy_gap_recursion(const BoundParams& params, const std::vector<double>& r_list,
                          double sigma2, double initial_gap, std::optional<double> coeff) {
    if (!(params.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    double gap = initial_gap;
    for (double r : r_list) {
        const double phi = contraction_factor(params, r, coeff);
        const double psi = (params.smooth * params.lr * params.lr / 2.0) * (sigma2 + r);
        gap = phi * gap + psi;
    }
    return gap;
}

}  // namespace otafl::objective
