#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otafl/baselines.hpp"
#include "otafl/channel.hpp"
#include "otafl/fedsim.hpp"
#include "otafl/harness.hpp"
#include "otafl/objective.hpp"
#include "otafl/oracles.hpp"
#include "otafl/ota.hpp"
#include "otafl/pdd.hpp"

namespace py = pybind11;
using namespace otafl;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fluid-antenna over-the-air federated learning simulator";

    // channel
    py::class_<channel::Region>(m, "Region")
        .def(py::init<>())
        .def(py::init([](double x_min, double x_max, double y_min, double y_max) {
            return channel::Region{x_min, x_max, y_min, y_max};
        }))
        .def_readwrite("x_min", &channel::Region::x_min)
        .def_readwrite("x_max", &channel::Region::x_max)
        .def_readwrite("y_min", &channel::Region::y_min)
        .def_readwrite("y_max", &channel::Region::y_max);

    py::class_<channel::AntennaLayout>(m, "AntennaLayout")
        .def(py::init<>())
        .def_readwrite("x", &channel::AntennaLayout::x)
        .def_readwrite("y", &channel::AntennaLayout::y)
        .def_readwrite("region", &channel::AntennaLayout::region)
        .def_readwrite("v_x", &channel::AntennaLayout::v_x)
        .def_readwrite("v_y", &channel::AntennaLayout::v_y)
        .def_readwrite("feasible", &channel::AntennaLayout::feasible);

    py::class_<channel::ChannelParams>(m, "ChannelParams")
        .def(py::init<>())
        .def_readwrite("beta", &channel::ChannelParams::beta)
        .def_readwrite("theta", &channel::ChannelParams::theta)
        .def_readwrite("phi", &channel::ChannelParams::phi)
        .def_readwrite("wavelength", &channel::ChannelParams::wavelength);

    py::enum_<channel::ChannelModel>(m, "ChannelModel")
        .value("LOS", channel::ChannelModel::kLos)
        .value("RAYLEIGH", channel::ChannelModel::kRayleigh);

    py::class_<channel::ChannelRealization>(m, "ChannelRealization")
        .def(py::init<>())
        .def_readwrite("params", &channel::ChannelRealization::params)
        .def_readwrite("layout", &channel::ChannelRealization::layout)
        .def_readwrite("h", &channel::ChannelRealization::h)
        .def_readwrite("model", &channel::ChannelRealization::model)
        .def_readwrite("distance_m", &channel::ChannelRealization::distance_m)
        .def("refresh", &channel::ChannelRealization::refresh);

    py::class_<channel::SampleConfig>(m, "SampleConfig")
        .def(py::init<>())
        .def_readwrite("n_antennas", &channel::SampleConfig::n_antennas)
        .def_readwrite("wavelength", &channel::SampleConfig::wavelength)
        .def_readwrite("d_min_m", &channel::SampleConfig::d_min_m)
        .def_readwrite("d_max_m", &channel::SampleConfig::d_max_m)
        .def_readwrite("pl_offset_db", &channel::SampleConfig::pl_offset_db)
        .def_readwrite("region", &channel::SampleConfig::region)
        .def_readwrite("v_x", &channel::SampleConfig::v_x)
        .def_readwrite("v_y", &channel::SampleConfig::v_y)
        .def_readwrite("model", &channel::SampleConfig::model);

    m.def("array_response", &channel::array_response, py::arg("layout"), py::arg("theta"),
          py::arg("phi"), py::arg("wavelength"));
    m.def("channel_vector", &channel::channel_vector);
    m.def("cost_hata_pl_db", &channel::cost_hata_pl_db);
    m.def("effective_gain", &channel::effective_gain);
    m.def("max_gain_bound", &channel::max_gain_bound);
    m.def("min_distance_ok", &channel::min_distance_ok);
    m.def("grid_layout", &channel::grid_layout);
    m.def("sample_channels", &channel::sample_channels, py::arg("rng_seed"), py::arg("n_users"),
          py::arg("config"));

    // ota
    py::class_<ota::AggregateResult>(m, "AggregateResult")
        .def_readonly("g_hat", &ota::AggregateResult::g_hat)
        .def_readonly("e2", &ota::AggregateResult::e2)
        .def_readonly("noise_draws", &ota::AggregateResult::noise_draws);

    py::class_<ota::TransmitPlan>(m, "TransmitPlan")
        .def_readonly("a", &ota::TransmitPlan::a)
        .def_readonly("v", &ota::TransmitPlan::v)
        .def_readonly("p_max", &ota::TransmitPlan::p_max);

    m.def("make_transmit_plan", &ota::make_transmit_plan);
    m.def("grad_normalizer", &ota::grad_normalizer);
    m.def("precode_symbols", &ota::precode_symbols);
    m.def("receive_scaling_eta", &ota::receive_scaling_eta);
    m.def("receive_and_combine", &ota::receive_and_combine, py::arg("channels"),
          py::arg("gradients"), py::arg("q"), py::arg("sigma_n2"), py::arg("p_a"),
          py::arg("rng_seed"));
    m.def("theoretical_mse", &ota::theoretical_mse);

    // objective
    py::class_<objective::SelectionVector>(m, "SelectionVector")
        .def(py::init<>())
        .def_readwrite("e", &objective::SelectionVector::e)
        .def_readwrite("samples", &objective::SelectionVector::samples)
        .def_readwrite("binary", &objective::SelectionVector::binary)
        .def("selected_count", &objective::SelectionVector::selected_count);

    py::class_<objective::BoundParams>(m, "BoundParams")
        .def(py::init<>())
        .def_readwrite("mu", &objective::BoundParams::mu)
        .def_readwrite("smooth", &objective::BoundParams::smooth)
        .def_readwrite("alpha1", &objective::BoundParams::alpha1)
        .def_readwrite("alpha2", &objective::BoundParams::alpha2)
        .def_readwrite("lr", &objective::BoundParams::lr);

    m.def("comm_penalty", &objective::comm_penalty);
    m.def("contraction_factor", &objective::contraction_factor, py::arg("params"), py::arg("r"),
          py::arg("coeff") = std::nullopt);
    m.def("bound_after_T", &objective::bound_after_T, py::arg("params"), py::arg("r_list"),
          py::arg("initial_gap"), py::arg("coeff") = std::nullopt);
    m.def("noisy_gap_recursion", &objective::noisy_gap_recursion, py::arg("params"),
          py::arg("r_list"), py::arg("sigma2"), py::arg("initial_gap"),
          py::arg("coeff") = std::nullopt);

    // pdd
    py::class_<pdd::PddProblem>(m, "PddProblem")
        .def(py::init<>())
        .def_readwrite("channels", &pdd::PddProblem::channels)
        .def_readwrite("samples", &pdd::PddProblem::samples)
        .def_readwrite("sigma_n2", &pdd::PddProblem::sigma_n2)
        .def_readwrite("p_a", &pdd::PddProblem::p_a);

    py::class_<pdd::PddConfig>(m, "PddConfig")
        .def(py::init<>())
        .def_readwrite("kappa0", &pdd::PddConfig::kappa0)
        .def_readwrite("c_pen", &pdd::PddConfig::c_pen)
        .def_readwrite("eps_outer", &pdd::PddConfig::eps_outer)
        .def_readwrite("max_inner", &pdd::PddConfig::max_inner)
        .def_readwrite("max_outer", &pdd::PddConfig::max_outer)
        .def_readwrite("collect_trace", &pdd::PddConfig::collect_trace);

    py::class_<pdd::TraceRecord>(m, "TraceRecord")
        .def_readonly("outer", &pdd::TraceRecord::outer)
        .def_readonly("inner", &pdd::TraceRecord::inner)
        .def_readonly("aug_lagrangian", &pdd::TraceRecord::aug_lagrangian)
        .def_readonly("residual_inf", &pdd::TraceRecord::residual_inf)
        .def_readonly("kappa", &pdd::TraceRecord::kappa)
        .def_readonly("r_value", &pdd::TraceRecord::r_value);

    py::class_<pdd::PddSolution>(m, "PddSolution")
        .def_readonly("selection", &pdd::PddSolution::selection)
        .def_readonly("q", &pdd::PddSolution::q)
        .def_readonly("layouts", &pdd::PddSolution::layouts)
        .def_readonly("trace", &pdd::PddSolution::trace)
        .def_readonly("r_value", &pdd::PddSolution::r_value)
        .def_readonly("residual_inf", &pdd::PddSolution::residual_inf)
        .def_readonly("outer_iters", &pdd::PddSolution::outer_iters);

    m.def("pdd_solve",
          [](const pdd::PddConfig& config, const pdd::PddProblem& problem) {
              return pdd::solve(config, problem);
          },
          py::arg("config"), py::arg("problem"));

    // baselines
    py::enum_<baselines::QRule>(m, "QRule")
        .value("MRT_SUM", baselines::QRule::kMrtSum)
        .value("EIGEN", baselines::QRule::kEigen);

    py::class_<baselines::OracleResult>(m, "OracleResult")
        .def_readonly("selection", &baselines::OracleResult::selection)
        .def_readonly("q", &baselines::OracleResult::q)
        .def_readonly("r_value", &baselines::OracleResult::r_value);

    m.def("select_all", &baselines::select_all);
    m.def("mrt_beamformer", &baselines::mrt_beamformer);
    m.def("eigen_beamformer", &baselines::eigen_beamformer);
    m.def("random_fa_positions", &baselines::random_fa_positions, py::arg("region"),
          py::arg("v_x"), py::arg("v_y"), py::arg("n_antennas"), py::arg("rng_seed"),
          py::arg("max_attempts") = 20000);
    m.def("aps_positions", &baselines::aps_positions);
    m.def("exhaustive_selection_oracle", &baselines::exhaustive_selection_oracle);

    // fedsim
    py::enum_<fedsim::Method>(m, "Method")
        .value("PDD_FA", fedsim::Method::kPddFa)
        .value("SELECT_ALL", fedsim::Method::kSelectAll)
        .value("MRT", fedsim::Method::kMrt)
        .value("RFA", fedsim::Method::kRfa)
        .value("APS", fedsim::Method::kAps);

    py::class_<fedsim::SyntheticConfig>(m, "SyntheticConfig")
        .def(py::init<>())
        .def_readwrite("n_users", &fedsim::SyntheticConfig::n_users)
        .def_readwrite("samples_per_user", &fedsim::SyntheticConfig::samples_per_user)
        .def_readwrite("n_classes", &fedsim::SyntheticConfig::n_classes)
        .def_readwrite("n_features", &fedsim::SyntheticConfig::n_features)
        .def_readwrite("test_samples", &fedsim::SyntheticConfig::test_samples);

    py::class_<fedsim::UserData>(m, "UserData")
        .def(py::init<>())
        .def_readwrite("features", &fedsim::UserData::features)
        .def_readwrite("labels", &fedsim::UserData::labels);

    py::class_<fedsim::Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("users", &fedsim::Dataset::users)
        .def_readwrite("test_features", &fedsim::Dataset::test_features)
        .def_readwrite("test_labels", &fedsim::Dataset::test_labels)
        .def_readwrite("n_classes", &fedsim::Dataset::n_classes)
        .def_readwrite("n_features", &fedsim::Dataset::n_features);

    py::class_<fedsim::Model>(m, "Model")
        .def_static("zeros", &fedsim::Model::zeros)
        .def_readwrite("w", &fedsim::Model::w)
        .def_readonly("n_classes", &fedsim::Model::n_classes)
        .def_readonly("n_features", &fedsim::Model::n_features);

    py::class_<fedsim::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &fedsim::TrainConfig::rounds)
        .def_readwrite("lr", &fedsim::TrainConfig::lr)
        .def_readwrite("l2_reg", &fedsim::TrainConfig::l2_reg)
        .def_readwrite("method", &fedsim::TrainConfig::method)
        .def_readwrite("sigma_n2", &fedsim::TrainConfig::sigma_n2)
        .def_readwrite("p_a", &fedsim::TrainConfig::p_a)
        .def_readwrite("seed", &fedsim::TrainConfig::seed)
        .def_readwrite("pdd", &fedsim::TrainConfig::pdd);

    py::class_<fedsim::RoundStats>(m, "RoundStats")
        .def_readonly("round", &fedsim::RoundStats::round)
        .def_readonly("train_loss", &fedsim::RoundStats::train_loss)
        .def_readonly("test_loss", &fedsim::RoundStats::test_loss)
        .def_readonly("test_accuracy", &fedsim::RoundStats::test_accuracy)
        .def_readonly("selected_count", &fedsim::RoundStats::selected_count)
        .def_readonly("r_value", &fedsim::RoundStats::r_value)
        .def_readonly("max_gain", &fedsim::RoundStats::max_gain);

    py::class_<fedsim::TrainState>(m, "TrainState")
        .def_readonly("model", &fedsim::TrainState::model)
        .def_readonly("history", &fedsim::TrainState::history);

    m.def("local_loss", &fedsim::local_loss);
    m.def("global_loss", &fedsim::global_loss);
    m.def("local_gradient", &fedsim::local_gradient);
    m.def("model_accuracy", &fedsim::accuracy);
    m.def("synthetic_dataset", &fedsim::synthetic_dataset);
    m.def("train", &fedsim::train, py::arg("dataset"), py::arg("channels"), py::arg("config"));

    // harness
    m.def("dbm_to_mw", &harness::dbm_to_mw);
    m.def("default_config_text",
          []() { return harness::serialize_config(harness::default_config()); });
    m.def("run_oracle_suite", [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : oracles::run_all(seed)) {
            out.append(py::make_tuple(r.name, r.pass, r.detail));
        }
        return out;
    }, py::arg("seed") = 7);
}
