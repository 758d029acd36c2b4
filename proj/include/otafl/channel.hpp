#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "otafl/errors.hpp"

namespace otafl::channel {

using Complex = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Rectangular region the antenna elements may occupy, in meters.
struct Region {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

/// Per-user antenna element coordinates plus the separation limits they are
/// supposed to satisfy. `feasible` is a recorded judgement, not a constructor
/// guarantee: solver iterates legitimately pass through infeasible layouts.
struct AntennaLayout {
    VectorXd x;
    VectorXd y;
    Region region;
    double v_x = 0.0;
    double v_y = 0.0;
    bool feasible = true;

    Eigen::Index size() const { return x.size(); }
};

/// Returns true iff every element pair satisfies |x_i-x_j| >= v_x and
/// |y_i-y_j| >= v_y (non-strict, so touching the limit counts) and all
/// coordinates lie inside the region.
bool min_distance_ok(const AntennaLayout& layout);

/// Line-of-sight channel parameters for one user.
struct ChannelParams {
    Complex beta{0.0, 0.0};   // complex path gain
    double theta = 0.0;       // azimuth AoA, radians
    double phi = 0.0;         // elevation AoA, radians
    double wavelength = 0.1;  // carrier wavelength, meters
};

enum class ChannelModel : std::uint8_t {
    kLos,       // h = beta * a(x, y); repositioning reshapes the channel
    kRayleigh,  // h drawn CN(0, I/PL); positions have no effect
};

/// a_i = exp(j * 2*pi/wavelength * (x_i cos(theta) + y_i sin(phi))).
/// Every element has unit modulus.
VectorXcd array_response(const AntennaLayout& layout, double theta, double phi,
                         double wavelength);

/// h = beta * array_response(layout, theta, phi, wavelength).
VectorXcd channel_vector(const ChannelParams& params, const AntennaLayout& layout);

/// One user's channel. Under kLos, `h` is derived state: call `refresh()`
/// after editing the layout. Under kRayleigh, `h` is primary and the layout
/// is carried only for interface uniformity.
struct ChannelRealization {
    ChannelParams params;
    AntennaLayout layout;
    VectorXcd h;
    ChannelModel model = ChannelModel::kLos;
    double distance_m = 0.0;
    double path_loss_db = 0.0;

    void refresh() {
        if (model == ChannelModel::kLos) h = channel_vector(params, layout);
    }
};

/// COST Hata path loss: 139.1 + 35.22 * log10(d_km) dB.
double cost_hata_pl_db(double distance_m);

/// |<q, h>|^2 for a unit-norm beamformer q.
double effective_gain(const VectorXcd& q, const VectorXcd& h);

/// Cauchy-Schwarz bound |beta|^2 * N_T on the beamformed gain.
double max_gain_bound(Complex beta, Eigen::Index n_antennas);

struct SampleConfig {
    int n_antennas = 4;
    double wavelength = 0.1;
    double d_min_m = 10.0;
    double d_max_m = 100.0;
    // Subtracted from the COST Hata loss before converting to linear scale.
    // Raw COST Hata at 10..100 m leaves no usable post-noise signal; the
    // default is calibrated so that near users train cleanly while the
    // worst fades are bad enough that pruning them pays off.
    double pl_offset_db = 35.0;
    Region region{0.0, 0.4, 0.0, 0.4};
    double v_x = 0.05;
    double v_y = 0.05;
    ChannelModel model = ChannelModel::kLos;
};

/// Places n elements on a uniform diagonal grid with spacing
/// max(v, wavelength/2) per axis, anchored at the region's lower corner.
AntennaLayout grid_layout(const SampleConfig& cfg);

/// Draws U users: d_u ~ Uniform[d_min, d_max], path gain CN(0, 1/PL_linear)
/// (per component under kRayleigh, as the scalar beta under kLos), AoAs
/// Uniform[-pi/2, pi/2]. Deterministic given the seed. Channels are static:
/// one draw serves an entire training run.
std::vector<ChannelRealization> sample_channels(std::uint64_t rng_seed, int n_users,
                                                const SampleConfig& cfg);

}  // namespace otafl::channel
