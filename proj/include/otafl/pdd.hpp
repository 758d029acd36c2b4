#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/objective.hpp"

namespace otafl::pdd {

using Complex = std::complex<double>;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Problem data the solver never mutates. Under kLos the channel is
/// beta_u * a(x_u, y_u) and antenna positions are decision variables; under
/// kRayleigh the channel vectors are fixed and the position/response blocks
/// are absent.
struct PddProblem {
    std::vector<channel::ChannelRealization> channels;
    VectorXd samples;  // S_u
    double sigma_n2 = 0.01;
    double p_a = 1.0;

    int n_users() const { return static_cast<int>(channels.size()); }
    int n_antennas() const {
        return channels.empty() ? 0 : static_cast<int>(channels.front().h.size());
    }
    channel::ChannelModel model() const {
        return channels.empty() ? channel::ChannelModel::kLos : channels.front().model;
    }
    double total_samples() const { return samples.sum(); }
};

/// Unordered element pairs (i < j); the separation constraints and their
/// difference auxiliaries are stored in this order.
std::vector<std::pair<int, int>> element_pairs(int n_antennas);

/// Full primal/auxiliary variable set of the penalized reformulation.
struct PddState {
    // per user
    VectorXd e, e_tld, e_hat, e_bar;
    VectorXd alpha, alpha_tld, alpha_hat;
    VectorXcd gamma;
    std::vector<VectorXcd> b;          // unit-modulus response copies (kLos)
    std::vector<VectorXd> pos_x, pos_y;
    std::vector<VectorXd> diff_x, diff_y;  // pairwise-difference auxiliaries (kLos)
    // global
    VectorXcd q, q_tld;
    double eta = 0.0, eta_tld = 0.0, eta_hat = 0.0, eta_bar = 0.0;
    double c = 0.0, c_tld = 0.0;
};

/// One multiplier per penalized coupling, plus the penalty parameter.
struct DualState {
    VectorXd l_e_tld, l_e_hat, l_e_bar;   // e - e~ / e^ / e-
    VectorXcd l_gamma;                    // gamma - q^H b beta
    std::vector<VectorXcd> l_b;           // a(x,y) - b
    VectorXd l_alpha_tld;                 // alpha - alpha~
    VectorXd l_alpha_hat;                 // alpha^ - alpha~ c~
    std::vector<VectorXd> l_diff_x, l_diff_y;  // x~ - (x_i - x_j), same for y
    double l_c_tld = 0.0;                 // c - c~
    double l_eta_tld = 0.0;               // eta~ - eta^
    double l_eta_bar = 0.0;               // eta- - eta^ eta~
    VectorXcd l_q;                        // q - q~
    double l_sum_tld = 0.0;               // eta^ - sum e~_u S_u
    double l_sum_hat = 0.0;               // eta~ - sum e^_u S_u
    double l_power = 0.0;                 // P_a eta eta- - c sigma_n2
    double kappa = 1.0;
    double c_pen = 0.7;
};

struct PddConfig {
    double kappa0 = 1.0;
    double c_pen = 0.7;
    double eps_inner0 = 1e-3;
    double eps_inner_decay = 0.5;
    double eps_inner_floor = 1e-7;
    double eps_outer = 1e-5;
    int max_inner = 50;   // T1
    int max_outer = 60;   // T2
    int bcd_sweeps = 1;
    bool collect_trace = true;
};

struct TraceRecord {
    int outer = 0;
    int inner = 0;
    double aug_lagrangian = 0.0;
    double residual_inf = 0.0;
    double kappa = 0.0;
    double r_value = 0.0;
};

struct PddSolution {
    objective::SelectionVector selection;
    VectorXcd q;
    std::vector<channel::AntennaLayout> layouts;
    std::vector<TraceRecord> trace;
    double r_value = 0.0;
    double residual_inf = 0.0;
    double repair_shift = 0.0;  // largest coordinate move made by the exit repair
    int outer_iters = 0;
};

/// Consistent starting point: everyone selected, q the principal eigenvector
/// of sum h h^H, b_u = a(x_u, y_u), auxiliaries set so every residual is zero.
PddState initial_state(const PddProblem& problem);
DualState zero_duals(const PddProblem& problem, const PddConfig& config);

/// Value of the penalized objective at (state, duals).
double augmented_lagrangian(const PddState& state, const DualState& duals,
                            const PddProblem& problem);

/// All coupling residuals flattened to reals (complex entries contribute
/// their real and imaginary parts).
VectorXd residual_vector(const PddState& state, const PddProblem& problem);
double residual_inf_norm(const PddState& state, const PddProblem& problem);

// Block updates. Each sets its variables to the exact minimizer of the
// augmented Lagrangian restricted to that variable, subject to the
// variable's own constraint set.
void update_e(PddState& state, const DualState& duals, const PddProblem& problem);
void update_block1_aux(PddState& state, const DualState& duals, const PddProblem& problem);
void project_q_tilde(PddState& state, const DualState& duals, const PddProblem& problem);
VectorXcd project_q_tilde(const VectorXcd& q, const VectorXcd& dual, double kappa);
void update_b_bcd(PddState& state, const DualState& duals, const PddProblem& problem,
                  int sweeps = 1);
void update_e_aux(PddState& state, const DualState& duals, const PddProblem& problem);
void update_block2(PddState& state, const DualState& duals, const PddProblem& problem);
void update_positions(PddState& state, const DualState& duals, const PddProblem& problem);
void update_block3(PddState& state, const DualState& duals, const PddProblem& problem);

/// Dual ascent when the inner loop converged (residual <= eps_inner),
/// penalty shrink otherwise.
void update_duals_and_penalty(DualState& duals, const PddState& state,
                              const PddProblem& problem, double eps_inner);

/// Position subproblem objective for one element: squared wrapped phase
/// mismatch against the shifted response target plus the pairwise-difference
/// penalty terms. Exposed for the grid oracle.
double position_objective(const PddState& state, const DualState& duals,
                          const PddProblem& problem, int user, int element,
                          double x, double y);

/// Hook invoked after each of the eight block updates of an inner sweep;
/// receives the block label and the current augmented Lagrangian value.
using SweepObserver = std::function<void(const char*, double)>;

PddSolution solve(const PddConfig& config, const PddProblem& problem,
                  const SweepObserver& observer = {});

/// Sorted minimal-shift spacing repair; returns the largest coordinate move.
double repair_layout(channel::AntennaLayout& layout);

}  // namespace otafl::pdd
