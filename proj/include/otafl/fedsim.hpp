#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/objective.hpp"
#include "otafl/pdd.hpp"

namespace otafl::fedsim {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct UserData {
    MatrixXd features;  // S_u x b
    VectorXi labels;    // values in [0, C)
};

struct Dataset {
    std::vector<UserData> users;
    MatrixXd test_features;
    VectorXi test_labels;
    int n_classes = 0;
    int n_features = 0;

    Eigen::Index total_samples() const {
        Eigen::Index n = 0;
        for (const auto& u : users) n += u.features.rows();
        return n;
    }
};

/// Multinomial logistic regression, parameters flattened class-major:
/// w = [W(0,:), bias_0, W(1,:), bias_1, ...], D = C * (b + 1).
struct Model {
    VectorXd w;
    int n_classes = 0;
    int n_features = 0;

    static Model zeros(int n_classes, int n_features) {
        Model m;
        m.n_classes = n_classes;
        m.n_features = n_features;
        m.w = VectorXd::Zero(static_cast<Eigen::Index>(n_classes) * (n_features + 1));
        return m;
    }
    Eigen::Index dim() const { return w.size(); }
};

enum class Method { kPddFa, kSelectAll, kMrt, kRfa, kAps };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TrainConfig {
    int rounds = 25;
    double lr = 0.05;
    double l2_reg = 1e-3;
    Method method = Method::kPddFa;
    double sigma_n2 = 0.01;  // mW
    double p_a = 1.0;        // mW
    std::uint64_t seed = 0;
    bool rfa_redraw_per_round = false;
    double aps_grid_step = 0.0;  // 0 -> wavelength / 8
    int aps_rounds = 3;
    pdd::PddConfig pdd;
};

struct RoundStats {
    int round = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    int selected_count = 0;
    double r_value = 0.0;
    double max_gain = 0.0;
};

struct TrainState {
    Model model;
    std::vector<RoundStats> history;
    std::vector<pdd::TraceRecord> pdd_trace;
    std::uint64_t noise_stream = 0;
};

/// Mean cross-entropy over the user's samples plus (l2/2)||w||^2.
double local_loss(const Model& model, const UserData& data, double l2_reg);

/// Sample-weighted aggregate (1/S) sum_u S_u F_u.
double global_loss(const Model& model, const Dataset& dataset, double l2_reg);

/// Exact full-batch gradient of local_loss at the current parameters.
VectorXd local_gradient(const Model& model, const UserData& data, double l2_reg);

double accuracy(const Model& model, const MatrixXd& features, const VectorXi& labels);

/// One communication round: selected users compute full-batch gradients,
/// pre-scale them to sample weights, aggregate over the air, and the server
/// applies w <- w - lr * g_hat / K. Users with exactly zero gradient are
/// dropped from the round. Returns the per-round statistics.
RoundStats fed_round(Model& model, const objective::SelectionVector& selection,
                     const VectorXcd& q, std::vector<channel::ChannelRealization>& channels,
                     const Dataset& dataset, const TrainConfig& cfg, int round_index,
                     std::uint64_t noise_seed);

/// Full training run. Static channels mean the per-method artifacts
/// (selection, q, layouts) are computed once and reused each round, except
/// for RFA with per-round redraw enabled.
TrainState train(const Dataset& dataset, std::vector<channel::ChannelRealization> channels,
                 const TrainConfig& cfg);

struct SyntheticConfig {
    int n_users = 20;
    int samples_per_user = 270;
    int n_classes = 10;
    int n_features = 20;
    int test_samples = 2000;
    double class_spread = 2.2;
    double sample_noise = 1.0;
};

Dataset synthetic_dataset(const SyntheticConfig& cfg, std::uint64_t seed);

/// IDX files (big-endian; magic 0x00000803 for images, 0x00000801 for
/// labels). Images are rescaled to [0,1] and average-pooled 2x2 when
/// `downsample` is set (28x28 -> 14x14).
MatrixXd load_idx_images(const std::string& path, bool downsample);
VectorXi load_idx_labels(const std::string& path);
Dataset mnist_dataset(const std::string& dir, int n_users, int samples_per_user,
                      int test_samples);

}  // namespace otafl::fedsim
