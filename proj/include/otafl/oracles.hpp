#pragma once

#include <functional>
#include <string>
#include <vector>

#include "otafl/pdd.hpp"

namespace otafl::oracles {

/// Coarse grid over [lo, hi] followed by ternary refinement around the best
/// cell. Independent of every closed-form update it is used to check.
double minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                       int grid = 400, double tol = 1e-10);

/// Randomly perturbed but structurally valid solver state (unit-modulus b,
/// unit q~, e in [0,1], alpha <= |gamma|^2, alpha^ >= e- S^2, |x~| >= v).
pdd::PddState random_state(const pdd::PddProblem& problem, std::uint64_t seed);
pdd::DualState random_duals(const pdd::PddProblem& problem, std::uint64_t seed, double kappa);

/// A small toy problem for solver checks.
pdd::PddProblem toy_problem(int n_users, int n_antennas, std::uint64_t seed,
                            channel::ChannelModel model = channel::ChannelModel::kLos);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Every derived-value oracle in one battery; used by the CLI and mirrored
/// by the test suites.
std::vector<CheckResult> run_all(std::uint64_t seed = 7);

}  // namespace otafl::oracles
