#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "otafl/errors.hpp"

namespace otafl::objective {

using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Participation indicator over U users. Entries live in [0,1]; `binary`
/// records that every entry is exactly 0 or 1.
struct SelectionVector {
    VectorXd e;
    VectorXd samples;  // S_u per user
    bool binary = false;

    Eigen::Index size() const { return e.size(); }
    double selected_samples() const { return e.dot(samples); }
    int selected_count() const {
        int n = 0;
        for (Eigen::Index u = 0; u < e.size(); ++u) n += e[u] >= 0.5 ? 1 : 0;
        return n;
    }
};

/// Loss-geometry constants entering the convergence bound.
struct BoundParams {
    double mu = 1.0;      // strong convexity
    double smooth = 10.0; // smoothness L
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double lr = 0.05;
};

/// Per-round surrogate r(q, e):
///   (4/U^2) (sum (1-e_u) S_u)^2
///   + sigma_n2 / (P_a (sum e_u S_u)^2) * max_u e_u S_u^2 / |<q,h_u>|^2.
double comm_penalty(const SelectionVector& sel, const VectorXcd& q,
                    const std::vector<VectorXcd>& channels, double sigma_n2,
                    double p_a);

/// phi = 1 - (mu/L)(1 - coeff * r); coeff defaults to 2*alpha2.
double contraction_factor(const BoundParams& params, double r,
                          std::optional<double> coeff = std::nullopt);

/// Loss-gap bound after T rounds:
///   (prod phi_t) * gap + (alpha1/L) [ sum_{t<T-1} (prod_{tau>t} phi_tau) r_t + r_{T-1} ].
double bound_after_T(const BoundParams& params, const std::vector<double>& r_list,
                     double initial_gap, std::optional<double> coeff = std::nullopt);

/// Noisy-gradient recursion: gap <- phi_t * gap + psi_t with
/// phi_t = 1 - (mu/L)(1 - coeff * r_t), psi_t = (L lr^2 / 2)(sigma2 + r_t).
double noisy_gap_recursion(const BoundParams& params, const std::vector<double>& r_list,
                          double sigma2, double initial_gap,
                          std::optional<double> coeff = std::nullopt);

}  // namespace otafl::objective
