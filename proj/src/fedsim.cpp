#include "otafl/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "otafl/baselines.hpp"
#include "otafl/ota.hpp"

namespace otafl::fedsim {

std::string method_name(Method m) {
    switch (m) {
        case Method::kPddFa: return "pdd_fa";
        case Method::kSelectAll: return "select_all";
        case Method::kMrt: return "mrt";
        case Method::kRfa: return "rfa";
        case Method::kAps: return "aps";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "pdd_fa") return Method::kPddFa;
    if (name == "select_all") return Method::kSelectAll;
    if (name == "mrt") return Method::kMrt;
    if (name == "rfa") return Method::kRfa;
    if (name == "aps") return Method::kAps;
    throw std::invalid_argument("unknown method: " + name);
}

namespace {

// Row-wise softmax cross-entropy pieces shared by loss and gradient.
Eigen::MatrixXd logits_for(const Model& model, const MatrixXd& features) {
    const int c = model.n_classes;
    const int b = model.n_features;
    Eigen::MatrixXd w(c, b);
    Eigen::VectorXd bias(c);
    for (int k = 0; k < c; ++k) {
        w.row(k) = model.w.segment(static_cast<Eigen::Index>(k) * (b + 1), b).transpose();
        bias[k] = model.w[static_cast<Eigen::Index>(k) * (b + 1) + b];
    }
    Eigen::MatrixXd logits = features * w.transpose();
    logits.rowwise() += bias.transpose();
    return logits;
}

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        logits.row(r) = (logits.row(r).array() - m).exp();
        logits.row(r) /= logits.row(r).sum();
    }
    return logits;
}

}  // namespace

double local_loss(const Model& model, const UserData& data, double l2_reg) {
    const auto n = data.features.rows();
    if (n < 1) throw std::invalid_argument("user has no data");
    Eigen::MatrixXd logits = logits_for(model, data.features);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        loss += lse - logits(r, data.labels[r]);
    }
    loss /= static_cast<double>(n);
    return loss + 0.5 * l2_reg * model.w.squaredNorm();
}

double global_loss(const Model& model, const Dataset& dataset, double l2_reg) {
    double total = 0.0;
    double weighted = 0.0;
    for (const auto& user : dataset.users) {
        const auto s_u = static_cast<double>(user.features.rows());
        weighted += s_u * local_loss(model, user, l2_reg);
        total += s_u;
    }
    if (!(total > 0.0)) throw std::invalid_argument("dataset has no samples");
    return weighted / total;
}

VectorXd local_gradient(const Model& model, const UserData& data, double l2_reg) {
    const auto n = data.features.rows();
    if (n < 1) throw std::invalid_argument("user has no data");
    const int c = model.n_classes;
    const int b = model.n_features;
    Eigen::MatrixXd probs = softmax_rows(logits_for(model, data.features));
    for (Eigen::Index r = 0; r < n; ++r) probs(r, data.labels[r]) -= 1.0;
    probs /= static_cast<double>(n);

    VectorXd grad = l2_reg * model.w;
    Eigen::MatrixXd gw = probs.transpose() * data.features;  // c x b
    Eigen::VectorXd gb = probs.colwise().sum();
    for (int k = 0; k < c; ++k) {
        grad.segment(static_cast<Eigen::Index>(k) * (b + 1), b) += gw.row(k).transpose();
        grad[static_cast<Eigen::Index>(k) * (b + 1) + b] += gb[k];
    }
    return grad;
}

double accuracy(const Model& model, const MatrixXd& features, const VectorXi& labels) {
    if (features.rows() == 0) return 0.0;
    Eigen::MatrixXd logits = logits_for(model, features);
    Eigen::Index correct = 0;
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        Eigen::Index arg = 0;
        logits.row(r).maxCoeff(&arg);
        if (arg == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features.rows());
}

RoundStats fed_round(Model& model, const objective::SelectionVector& selection,
                     const VectorXcd& q, std::vector<channel::ChannelRealization>& channels,
                     const Dataset& dataset, const TrainConfig& cfg, int round_index,
                     std::uint64_t noise_seed) {
    const auto n_users = static_cast<int>(dataset.users.size());
    if (selection.selected_count() == 0) throw EmptySelectionError("no users selected");

    std::vector<int> active;
    std::vector<VectorXd> gradients;
    double selected_samples = 0.0;
    for (int u = 0; u < n_users; ++u) {
        if (selection.e[u] < 0.5) continue;
        VectorXd g = local_gradient(model, dataset.users[u], cfg.l2_reg);
        if (g.norm() == 0.0) continue;  // zero-gradient users sit the round out
        active.push_back(u);
        gradients.push_back(std::move(g));
        selected_samples += static_cast<double>(dataset.users[u].features.rows());
    }
    if (active.empty()) throw ZeroGradientError("all selected users have zero gradients");

    const auto k_active = static_cast<double>(active.size());
    std::vector<VectorXcd> hs;
    hs.reserve(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        hs.push_back(channels[static_cast<std::size_t>(active[i])].h);
        // Pre-scale so the plain OTA sum carries the sample weighting.
        const double s_u = static_cast<double>(dataset.users[active[i]].features.rows());
        gradients[i] *= s_u * k_active / selected_samples;
    }

    auto aggregate = ota::receive_and_combine(hs, gradients, q, cfg.sigma_n2, cfg.p_a,
                                              noise_seed);
    model.w -= (cfg.lr / k_active) * aggregate.g_hat;

    RoundStats stats;
    stats.round = round_index;
    stats.train_loss = global_loss(model, dataset, cfg.l2_reg);
    stats.test_loss = 0.0;
    if (dataset.test_features.rows() > 0) {
        UserData test{dataset.test_features, dataset.test_labels};
        stats.test_loss = local_loss(model, test, cfg.l2_reg);
        stats.test_accuracy = accuracy(model, dataset.test_features, dataset.test_labels);
    }
    stats.selected_count = selection.selected_count();
    double max_gain = 0.0;
    for (const auto& h : hs) max_gain = std::max(max_gain, channel::effective_gain(q, h));
    stats.max_gain = max_gain;
    return stats;
}

namespace {

struct MethodArtifacts {
    objective::SelectionVector selection;
    VectorXcd q;
    std::vector<pdd::TraceRecord> trace;
};

VectorXd sample_counts(const Dataset& dataset) {
    VectorXd s(static_cast<Eigen::Index>(dataset.users.size()));
    for (std::size_t u = 0; u < dataset.users.size(); ++u) {
        s[static_cast<Eigen::Index>(u)] = static_cast<double>(dataset.users[u].features.rows());
    }
    return s;
}

std::vector<VectorXcd> channel_vectors(const std::vector<channel::ChannelRealization>& channels) {
    std::vector<VectorXcd> hs;
    hs.reserve(channels.size());
    for (const auto& cr : channels) hs.push_back(cr.h);
    return hs;
}

MethodArtifacts assign_artifacts(const Dataset& dataset,
                                 std::vector<channel::ChannelRealization>& channels,
                                 const TrainConfig& cfg) {
    MethodArtifacts art;
    const VectorXd samples = sample_counts(dataset);
    switch (cfg.method) {
        case Method::kPddFa: {
            pdd::PddProblem problem;
            problem.channels = channels;
            problem.samples = samples;
            problem.sigma_n2 = cfg.sigma_n2;
            problem.p_a = cfg.p_a;
            auto sol = pdd::solve(cfg.pdd, problem);
            art.selection = sol.selection;
            art.q = sol.q;
            art.trace = std::move(sol.trace);
            for (std::size_t u = 0; u < channels.size(); ++u) {
                channels[u].layout = sol.layouts[u];
                channels[u].refresh();
            }
            break;
        }
        case Method::kSelectAll: {
            art.selection = baselines::select_all(samples);
            art.q = baselines::eigen_beamformer(channel_vectors(channels), art.selection);
            break;
        }
        case Method::kMrt: {
            art.selection = baselines::select_all(samples);
            art.q = baselines::mrt_beamformer(channel_vectors(channels), art.selection);
            break;
        }
        case Method::kRfa: {
            art.selection = baselines::select_all(samples);
            std::uint64_t draw_seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
            for (std::size_t u = 0; u < channels.size(); ++u) {
                auto& cr = channels[u];
                if (cr.model == channel::ChannelModel::kLos) {
                    cr.layout = baselines::random_fa_positions(
                        cr.layout.region, cr.layout.v_x, cr.layout.v_y,
                        static_cast<int>(cr.layout.size()), draw_seed + u);
                    cr.refresh();
                }
            }
            art.q = baselines::eigen_beamformer(channel_vectors(channels), art.selection);
            break;
        }
        case Method::kAps: {
            art.selection = baselines::select_all(samples);
            art.q = baselines::eigen_beamformer(channel_vectors(channels), art.selection);
            const double step = cfg.aps_grid_step > 0.0
                                    ? cfg.aps_grid_step
                                    : channels.front().params.wavelength / 8.0;
            for (std::size_t u = 0; u < channels.size(); ++u) {
                auto& cr = channels[u];
                if (cr.model != channel::ChannelModel::kLos) continue;
                cr.layout = baselines::aps_positions(cr.params, cr.layout, art.q, step,
                                                     cfg.aps_rounds);
                cr.refresh();
            }
            art.q = baselines::eigen_beamformer(channel_vectors(channels), art.selection);
            break;
        }
    }
    return art;
}

}  // namespace

TrainState train(const Dataset& dataset, std::vector<channel::ChannelRealization> channels,
                 const TrainConfig& cfg) {
    if (cfg.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (channels.size() != dataset.users.size()) {
        throw std::invalid_argument("channel/user count mismatch");
    }

    TrainState state;
    state.model = Model::zeros(dataset.n_classes, dataset.n_features);
    state.noise_stream = cfg.seed * 0x100000001b3ull + 0xcbf29ce484222325ull;

    MethodArtifacts art = assign_artifacts(dataset, channels, cfg);
    state.pdd_trace = std::move(art.trace);

    const VectorXd samples = sample_counts(dataset);
    for (int t = 0; t < cfg.rounds; ++t) {
        if (cfg.method == Method::kRfa && cfg.rfa_redraw_per_round && t > 0) {
            std::uint64_t draw_seed = state.noise_stream + 7919ull * static_cast<std::uint64_t>(t);
            for (std::size_t u = 0; u < channels.size(); ++u) {
                auto& cr = channels[u];
                if (cr.model != channel::ChannelModel::kLos) continue;
                cr.layout = baselines::random_fa_positions(
                    cr.layout.region, cr.layout.v_x, cr.layout.v_y,
                    static_cast<int>(cr.layout.size()), draw_seed + u);
                cr.refresh();
            }
            art.q = baselines::eigen_beamformer(channel_vectors(channels), art.selection);
        }
        RoundStats stats = fed_round(state.model, art.selection, art.q, channels, dataset,
                                     cfg, t, state.noise_stream + static_cast<std::uint64_t>(t));
        stats.r_value = objective::comm_penalty(art.selection, art.q,
                                                channel_vectors(channels), cfg.sigma_n2,
                                                cfg.p_a);
        state.history.push_back(stats);
    }
    return state;
}

Dataset synthetic_dataset(const SyntheticConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> pick_class(0, cfg.n_classes - 1);

    Eigen::MatrixXd means(cfg.n_classes, cfg.n_features);
    for (int c = 0; c < cfg.n_classes; ++c) {
        for (int f = 0; f < cfg.n_features; ++f) means(c, f) = cfg.class_spread * gauss(rng);
    }

    auto draw = [&](MatrixXd& x, VectorXi& y, int count) {
        x.resize(count, cfg.n_features);
        y.resize(count);
        for (int r = 0; r < count; ++r) {
            const int c = pick_class(rng);
            y[r] = c;
            for (int f = 0; f < cfg.n_features; ++f) {
                x(r, f) = means(c, f) + cfg.sample_noise * gauss(rng);
            }
        }
    };

    Dataset ds;
    ds.n_classes = cfg.n_classes;
    ds.n_features = cfg.n_features;
    ds.users.resize(static_cast<std::size_t>(cfg.n_users));
    for (auto& user : ds.users) draw(user.features, user.labels, cfg.samples_per_user);
    draw(ds.test_features, ds.test_labels, cfg.test_samples);
    return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated IDX header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

MatrixXd load_idx_images(const std::string& path, bool downsample) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    if (read_be32(in) != 0x00000803u) throw std::runtime_error("bad IDX image magic in " + path);
    const auto count = static_cast<Eigen::Index>(read_be32(in));
    const auto rows = static_cast<Eigen::Index>(read_be32(in));
    const auto cols = static_cast<Eigen::Index>(read_be32(in));
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols));

    const Eigen::Index out_rows = downsample ? rows / 2 : rows;
    const Eigen::Index out_cols = downsample ? cols / 2 : cols;
    MatrixXd images(count, out_rows * out_cols);
    for (Eigen::Index n = 0; n < count; ++n) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) throw std::runtime_error("truncated IDX image data in " + path);
        if (!downsample) {
            for (Eigen::Index i = 0; i < rows * cols; ++i) {
                images(n, i) = buf[static_cast<std::size_t>(i)] / 255.0;
            }
        } else {
            for (Eigen::Index r = 0; r < out_rows; ++r) {
                for (Eigen::Index c = 0; c < out_cols; ++c) {
                    double acc = 0.0;
                    for (int dr = 0; dr < 2; ++dr) {
                        for (int dc = 0; dc < 2; ++dc) {
                            acc += buf[static_cast<std::size_t>((2 * r + dr) * cols + 2 * c + dc)];
                        }
                    }
                    images(n, r * out_cols + c) = acc / (4.0 * 255.0);
                }
            }
        }
    }
    return images;
}

VectorXi load_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    if (read_be32(in) != 0x00000801u) throw std::runtime_error("bad IDX label magic in " + path);
    const auto count = static_cast<Eigen::Index>(read_be32(in));
    std::vector<unsigned char> buf(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("truncated IDX label data in " + path);
    VectorXi labels(count);
    for (Eigen::Index n = 0; n < count; ++n) labels[n] = buf[static_cast<std::size_t>(n)];
    return labels;
}

Dataset mnist_dataset(const std::string& dir, int n_users, int samples_per_user,
                      int test_samples) {
    MatrixXd train_x = load_idx_images(dir + "/train-images-idx3-ubyte", true);
    VectorXi train_y = load_idx_labels(dir + "/train-labels-idx1-ubyte");
    MatrixXd test_x = load_idx_images(dir + "/t10k-images-idx3-ubyte", true);
    VectorXi test_y = load_idx_labels(dir + "/t10k-labels-idx1-ubyte");

    const Eigen::Index need = static_cast<Eigen::Index>(n_users) * samples_per_user;
    if (train_x.rows() < need) throw std::runtime_error("not enough training samples");

    Dataset ds;
    ds.n_classes = 10;
    ds.n_features = static_cast<int>(train_x.cols());
    ds.users.resize(static_cast<std::size_t>(n_users));
    Eigen::Index offset = 0;
    for (auto& user : ds.users) {
        user.features = train_x.middleRows(offset, samples_per_user);
        user.labels = train_y.segment(offset, samples_per_user);
        offset += samples_per_user;
    }
    const Eigen::Index t = std::min<Eigen::Index>(test_samples, test_x.rows());
    ds.test_features = test_x.topRows(t);
    ds.test_labels = test_y.head(t);
    return ds;
}

}  // namespace otafl::fedsim
