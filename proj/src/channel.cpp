#include "otafl/channel.hpp"

#include <cmath>
#include <random>

namespace otafl::channel {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}
}  // namespace

bool min_distance_ok(const AntennaLayout& layout) {
    const auto n = layout.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!layout.region.contains(layout.x[i], layout.y[i])) return false;
    }
    const double tol = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(layout.x[i] - layout.x[j]) < layout.v_x - tol) return false;
            if (std::abs(layout.y[i] - layout.y[j]) < layout.v_y - tol) return false;
        }
    }
    return true;
}

VectorXcd array_response(const AntennaLayout& layout, double theta, double phi,
                         double wavelength) {
    if (layout.size() < 1) throw std::invalid_argument("layout must have at least one element");
    if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
    require_finite(theta, "theta");
    require_finite(phi, "phi");
    const double scale = kTwoPi / wavelength;
    const double cos_t = std::cos(theta);
    const double sin_p = std::sin(phi);
    VectorXcd a(layout.size());
    for (Eigen::Index i = 0; i < layout.size(); ++i) {
        require_finite(layout.x[i], "layout.x");
        require_finite(layout.y[i], "layout.y");
        const double phase = scale * (layout.x[i] * cos_t + layout.y[i] * sin_p);
        a[i] = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

VectorXcd channel_vector(const ChannelParams& params, const AntennaLayout& layout) {
    return params.beta * array_response(layout, params.theta, params.phi, params.wavelength);
}

double cost_hata_pl_db(double distance_m) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be positive");
    return 139.1 + 35.22 * std::log10(distance_m / 1000.0);
}

double effective_gain(const VectorXcd& q, const VectorXcd& h) {
    if (q.size() != h.size()) throw std::invalid_argument("beamformer/channel size mismatch");
    if (std::abs(q.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("beamformer must be unit norm");
    }
    return std::norm(q.dot(h));  // Eigen's dot conjugates the first argument
}

double max_gain_bound(Complex beta, Eigen::Index n_antennas) {
    return std::norm(beta) * static_cast<double>(n_antennas);
}

AntennaLayout grid_layout(const SampleConfig& cfg) {
    AntennaLayout layout;
    layout.region = cfg.region;
    layout.v_x = cfg.v_x;
    layout.v_y = cfg.v_y;
    const int n = cfg.n_antennas;
    layout.x = VectorXd::Zero(n);
    layout.y = VectorXd::Zero(n);
    const double step_x = std::max(cfg.v_x, cfg.wavelength / 2.0);
    const double step_y = std::max(cfg.v_y, cfg.wavelength / 2.0);
    for (int i = 0; i < n; ++i) {
        layout.x[i] = std::min(cfg.region.x_min + i * step_x, cfg.region.x_max);
        layout.y[i] = std::min(cfg.region.y_min + i * step_y, cfg.region.y_max);
    }
    layout.feasible = min_distance_ok(layout);
    return layout;
}

std::vector<ChannelRealization> sample_channels(std::uint64_t rng_seed, int n_users,
                                                const SampleConfig& cfg) {
    if (n_users < 0) throw std::invalid_argument("n_users must be non-negative");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> dist_d(cfg.d_min_m, cfg.d_max_m);
    std::uniform_real_distribution<double> dist_aoa(-1.5707963267948966, 1.5707963267948966);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<ChannelRealization> out;
    out.reserve(static_cast<std::size_t>(n_users));
    for (int u = 0; u < n_users; ++u) {
        ChannelRealization cr;
        cr.model = cfg.model;
        cr.distance_m = dist_d(rng);
        cr.path_loss_db = cost_hata_pl_db(cr.distance_m) - cfg.pl_offset_db;
        const double pl_linear = std::pow(10.0, cr.path_loss_db / 10.0);
        const double comp_sigma = std::sqrt(1.0 / (2.0 * pl_linear));
        cr.params.wavelength = cfg.wavelength;
        cr.params.theta = dist_aoa(rng);
        cr.params.phi = dist_aoa(rng);
        cr.layout = grid_layout(cfg);
        if (cfg.model == ChannelModel::kLos) {
            cr.params.beta = Complex(comp_sigma * gauss(rng), comp_sigma * gauss(rng));
            cr.refresh();
        } else {
            cr.h = VectorXcd(cfg.n_antennas);
            for (int i = 0; i < cfg.n_antennas; ++i) {
                cr.h[i] = Complex(comp_sigma * gauss(rng), comp_sigma * gauss(rng));
            }
            // Keep the Cauchy-Schwarz bound |beta|^2 N_T equal to ||h||^2.
            cr.params.beta = cr.h.norm() / std::sqrt(static_cast<double>(cfg.n_antennas));
        }
        out.push_back(std::move(cr));
    }
    return out;
}

}  // namespace otafl::channel
