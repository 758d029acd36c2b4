#include "otafl/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace otafl::baselines {

objective::SelectionVector select_all(const VectorXd& samples) {
    if (samples.size() < 1) throw std::invalid_argument("need at least one user");
    objective::SelectionVector sel;
    sel.e = VectorXd::Ones(samples.size());
    sel.samples = samples;
    sel.binary = true;
    return sel;
}

VectorXcd mrt_beamformer(const std::vector<VectorXcd>& channels,
                         const objective::SelectionVector& sel) {
    if (channels.empty()) throw EmptySelectionError("no channels");
    VectorXcd sum = VectorXcd::Zero(channels.front().size());
    bool any = false;
    for (std::size_t u = 0; u < channels.size(); ++u) {
        if (sel.e[static_cast<Eigen::Index>(u)] >= 0.5) {
            sum += channels[u];
            any = true;
        }
    }
    if (!any) throw EmptySelectionError("no selected users");
    const double norm = sum.norm();
    if (!(norm > 0.0)) throw DegenerateChannelError("selected channels sum to zero");
    return sum / norm;
}

VectorXcd eigen_beamformer(const std::vector<VectorXcd>& channels,
                           const objective::SelectionVector& sel) {
    if (channels.empty()) throw EmptySelectionError("no channels");
    const auto n = channels.front().size();
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(n, n);
    bool any = false;
    for (std::size_t u = 0; u < channels.size(); ++u) {
        if (sel.e[static_cast<Eigen::Index>(u)] >= 0.5) {
            cov += channels[u] * channels[u].adjoint();
            any = true;
        }
    }
    if (!any) throw EmptySelectionError("no selected users");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    VectorXcd q = eig.eigenvectors().col(n - 1);
    q.normalize();
    return q;
}

channel::AntennaLayout random_fa_positions(const channel::Region& region, double v_x,
                                           double v_y, int n_antennas,
                                           std::uint64_t rng_seed, int max_attempts) {
    if (n_antennas < 1) throw std::invalid_argument("need at least one element");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
    std::uniform_real_distribution<double> uy(region.y_min, region.y_max);

    channel::AntennaLayout layout;
    layout.region = region;
    layout.v_x = v_x;
    layout.v_y = v_y;
    layout.x = Eigen::VectorXd::Zero(n_antennas);
    layout.y = Eigen::VectorXd::Zero(n_antennas);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        for (int i = 0; i < n_antennas; ++i) {
            layout.x[i] = ux(rng);
            layout.y[i] = uy(rng);
        }
        if (channel::min_distance_ok(layout)) {
            layout.feasible = true;
            return layout;
        }
    }
    throw PackingError("could not place elements at the requested spacing");
}

channel::AntennaLayout aps_positions(const channel::ChannelParams& params,
                                     const channel::AntennaLayout& start,
                                     const VectorXcd& q, double grid_step, int rounds) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
    channel::AntennaLayout layout = start;
    const auto n = layout.size();

    auto gain_now = [&]() {
        return channel::effective_gain(
            q, channel::channel_vector(params, layout));
    };

    auto feasible_move = [&](Eigen::Index i, double x, double y) {
        if (!layout.region.contains(x, y)) return false;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (std::abs(x - layout.x[j]) < layout.v_x) return false;
            if (std::abs(y - layout.y[j]) < layout.v_y) return false;
        }
        return true;
    };

    std::vector<double> xs, ys;
    for (double x = layout.region.x_min; x <= layout.region.x_max + 1e-12; x += grid_step)
        xs.push_back(std::min(x, layout.region.x_max));
    for (double y = layout.region.y_min; y <= layout.region.y_max + 1e-12; y += grid_step)
        ys.push_back(std::min(y, layout.region.y_max));

    for (int sweep = 0; sweep < rounds; ++sweep) {
        bool moved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best_gain = gain_now();
            double best_x = layout.x[i];
            double best_y = layout.y[i];
            const double old_x = layout.x[i];
            const double old_y = layout.y[i];
            for (double x : xs) {
                for (double y : ys) {
                    if (!feasible_move(i, x, y)) continue;
                    layout.x[i] = x;
                    layout.y[i] = y;
                    const double g = gain_now();
                    if (g > best_gain + 1e-15) {
                        best_gain = g;
                        best_x = x;
                        best_y = y;
                    }
                }
            }
            layout.x[i] = best_x;
            layout.y[i] = best_y;
            if (best_x != old_x || best_y != old_y) moved = true;
        }
        if (!moved) break;
    }
    layout.feasible = channel::min_distance_ok(layout);
    return layout;
}

OracleResult exhaustive_selection_oracle(const std::vector<VectorXcd>& channels,
                                         const VectorXd& samples, QRule q_rule,
                                         double sigma_n2, double p_a) {
    const int n_users = static_cast<int>(channels.size());
    if (n_users < 1) throw std::invalid_argument("need at least one user");
    if (n_users > 12) throw SizeError("exhaustive oracle limited to 12 users");

    OracleResult best;
    double best_r = std::numeric_limits<double>::infinity();
    double best_mass = -1.0;

    for (unsigned mask = 1; mask < (1u << n_users); ++mask) {
        objective::SelectionVector sel;
        sel.e = VectorXd::Zero(n_users);
        sel.samples = samples;
        sel.binary = true;
        for (int u = 0; u < n_users; ++u) {
            if (mask & (1u << u)) sel.e[u] = 1.0;
        }
        VectorXcd q;
        try {
            q = q_rule == QRule::kMrtSum ? mrt_beamformer(channels, sel)
                                         : eigen_beamformer(channels, sel);
        } catch (const DegenerateChannelError&) {
            continue;
        }
        double r;
        try {
            r = objective::comm_penalty(sel, q, channels, sigma_n2, p_a);
        } catch (const DegenerateChannelError&) {
            continue;  // a selected user has zero gain; the subset is useless
        }
        const double mass = sel.selected_samples();
        const bool better =
            r < best_r - 1e-15 ||
            (std::abs(r - best_r) <= 1e-15 &&
             (mass > best_mass + 1e-15 ||
              (std::abs(mass - best_mass) <= 1e-15 && sel.e.size() == best.selection.e.size() &&
               std::lexicographical_compare(best.selection.e.data(),
                                            best.selection.e.data() + best.selection.e.size(),
                                            sel.e.data(), sel.e.data() + sel.e.size()))));
        if (better) {
            best_r = r;
            best_mass = mass;
            best.selection = sel;
            best.q = q;
            best.r_value = r;
        }
    }
    if (!std::isfinite(best_r)) throw DegenerateChannelError("no usable selection exists");
    return best;
}

}  // namespace otafl::baselines
