#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/objective.hpp"

namespace otafl::baselines {

using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class QRule { kMrtSum, kEigen };

/// e = all ones.
objective::SelectionVector select_all(const VectorXd& samples);

/// q = sum of selected channels, normalized.
VectorXcd mrt_beamformer(const std::vector<VectorXcd>& channels,
                         const objective::SelectionVector& sel);

/// Principal eigenvector of sum_{selected} h h^H, normalized.
VectorXcd eigen_beamformer(const std::vector<VectorXcd>& channels,
                           const objective::SelectionVector& sel);

/// Uniform rejection sampling of a feasible layout.
channel::AntennaLayout random_fa_positions(const channel::Region& region, double v_x,
                                           double v_y, int n_antennas,
                                           std::uint64_t rng_seed,
                                           int max_attempts = 20000);

/// Coordinate-wise grid search: each element in turn moves to the feasible
/// grid point maximizing this user's effective gain under q. The gain trace
/// is non-decreasing; stops at a fixed point or after `rounds` sweeps.
channel::AntennaLayout aps_positions(const channel::ChannelParams& params,
                                     const channel::AntennaLayout& start,
                                     const VectorXcd& q, double grid_step, int rounds);

struct OracleResult {
    objective::SelectionVector selection;
    VectorXcd q;
    double r_value = 0.0;
};

/// Enumerates all 2^U - 1 nonempty selections (U <= 12), applies the q rule
/// per subset, and returns the comm_penalty minimizer. Ties break toward
/// larger selected-sample mass, then lexicographically on e.
OracleResult exhaustive_selection_oracle(const std::vector<VectorXcd>& channels,
                                         const VectorXd& samples, QRule q_rule,
                                         double sigma_n2, double p_a);

}  // namespace otafl::baselines
