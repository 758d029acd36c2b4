#include "otafl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <nlohmann/json.hpp>

namespace otafl::harness {

namespace fs = std::filesystem;

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const int written = std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf, static_cast<std::size_t>(written));
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
    return v;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string methods_to_string(const std::vector<fedsim::Method>& methods) {
    std::string out;
    for (std::size_t i = 0; i < methods.size(); ++i) {
        if (i) out += ",";
        out += fedsim::method_name(methods[i]);
    }
    return out;
}

std::vector<fedsim::Method> methods_from_string(const std::string& text) {
    std::vector<fedsim::Method> methods;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) methods.push_back(fedsim::method_from_name(item));
    }
    return methods;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.channel.n_antennas = 4;
    cfg.channel.wavelength = 0.1;
    cfg.channel.region = {0.0, 4 * 0.1, 0.0, 4 * 0.1};
    cfg.channel.v_x = 0.1 / 2;
    cfg.channel.v_y = 0.1 / 2;
    cfg.data.n_users = cfg.n_users;
    cfg.train.sigma_n2 = dbm_to_mw(cfg.sigma_n2_dbm);
    cfg.train.p_a = dbm_to_mw(cfg.p_a_dbm);
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "methods = " << methods_to_string(cfg.methods) << "\n";
    out << "users = " << cfg.n_users << "\n";
    out << "realizations = " << cfg.realizations << "\n";
    out << "master_seed = " << cfg.master_seed << "\n";
    out << "p_a_dbm = " << format_double(cfg.p_a_dbm) << "\n";
    out << "sigma_n2_dbm = " << format_double(cfg.sigma_n2_dbm) << "\n";
    out << "dataset = " << cfg.dataset << "\n";
    out << "mnist_dir = " << cfg.mnist_dir << "\n";
    out << "\n[channel]\n";
    out << "antennas = " << cfg.channel.n_antennas << "\n";
    out << "wavelength = " << format_double(cfg.channel.wavelength) << "\n";
    out << "d_min = " << format_double(cfg.channel.d_min_m) << "\n";
    out << "d_max = " << format_double(cfg.channel.d_max_m) << "\n";
    out << "pl_offset_db = " << format_double(cfg.channel.pl_offset_db) << "\n";
    out << "region_x = " << format_double(cfg.channel.region.x_max) << "\n";
    out << "region_y = " << format_double(cfg.channel.region.y_max) << "\n";
    out << "v_x = " << format_double(cfg.channel.v_x) << "\n";
    out << "v_y = " << format_double(cfg.channel.v_y) << "\n";
    out << "model = "
        << (cfg.channel.model == channel::ChannelModel::kLos ? "los" : "rayleigh") << "\n";
    out << "\n[data]\n";
    out << "samples_per_user = " << cfg.data.samples_per_user << "\n";
    out << "classes = " << cfg.data.n_classes << "\n";
    out << "features = " << cfg.data.n_features << "\n";
    out << "test_samples = " << cfg.data.test_samples << "\n";
    out << "class_spread = " << format_double(cfg.data.class_spread) << "\n";
    out << "sample_noise = " << format_double(cfg.data.sample_noise) << "\n";
    out << "\n[train]\n";
    out << "rounds = " << cfg.train.rounds << "\n";
    out << "lr = " << format_double(cfg.train.lr) << "\n";
    out << "l2_reg = " << format_double(cfg.train.l2_reg) << "\n";
    out << "rfa_redraw = " << (cfg.train.rfa_redraw_per_round ? "per_round" : "per_run") << "\n";
    out << "aps_grid_step = " << format_double(cfg.train.aps_grid_step) << "\n";
    out << "aps_rounds = " << cfg.train.aps_rounds << "\n";
    out << "\n[pdd]\n";
    out << "kappa0 = " << format_double(cfg.train.pdd.kappa0) << "\n";
    out << "c_pen = " << format_double(cfg.train.pdd.c_pen) << "\n";
    out << "eps_outer = " << format_double(cfg.train.pdd.eps_outer) << "\n";
    out << "max_inner = " << cfg.train.pdd.max_inner << "\n";
    out << "max_outer = " << cfg.train.pdd.max_outer << "\n";
    return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg = default_config();
    std::istringstream in(text);
    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad config line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section + "." + key;

        if (full == "experiment.methods") cfg.methods = methods_from_string(value);
        else if (full == "experiment.users") cfg.n_users = std::stoi(value);
        else if (full == "experiment.realizations") cfg.realizations = std::stoi(value);
        else if (full == "experiment.master_seed") cfg.master_seed = std::stoull(value);
        else if (full == "experiment.p_a_dbm") cfg.p_a_dbm = parse_double(value);
        else if (full == "experiment.sigma_n2_dbm") cfg.sigma_n2_dbm = parse_double(value);
        else if (full == "experiment.dataset") cfg.dataset = value;
        else if (full == "experiment.mnist_dir") cfg.mnist_dir = value;
        else if (full == "channel.antennas") cfg.channel.n_antennas = std::stoi(value);
        else if (full == "channel.wavelength") cfg.channel.wavelength = parse_double(value);
        else if (full == "channel.d_min") cfg.channel.d_min_m = parse_double(value);
        else if (full == "channel.d_max") cfg.channel.d_max_m = parse_double(value);
        else if (full == "channel.pl_offset_db") cfg.channel.pl_offset_db = parse_double(value);
        else if (full == "channel.region_x") cfg.channel.region.x_max = parse_double(value);
        else if (full == "channel.region_y") cfg.channel.region.y_max = parse_double(value);
        else if (full == "channel.v_x") cfg.channel.v_x = parse_double(value);
        else if (full == "channel.v_y") cfg.channel.v_y = parse_double(value);
        else if (full == "channel.model") {
            if (value == "los") cfg.channel.model = channel::ChannelModel::kLos;
            else if (value == "rayleigh") cfg.channel.model = channel::ChannelModel::kRayleigh;
            else throw std::invalid_argument("unknown channel model: " + value);
        }
        else if (full == "data.samples_per_user") cfg.data.samples_per_user = std::stoi(value);
        else if (full == "data.classes") cfg.data.n_classes = std::stoi(value);
        else if (full == "data.features") cfg.data.n_features = std::stoi(value);
        else if (full == "data.test_samples") cfg.data.test_samples = std::stoi(value);
        else if (full == "data.class_spread") cfg.data.class_spread = parse_double(value);
        else if (full == "data.sample_noise") cfg.data.sample_noise = parse_double(value);
        else if (full == "train.rounds") cfg.train.rounds = std::stoi(value);
        else if (full == "train.lr") cfg.train.lr = parse_double(value);
        else if (full == "train.l2_reg") cfg.train.l2_reg = parse_double(value);
        else if (full == "train.rfa_redraw") cfg.train.rfa_redraw_per_round = value == "per_round";
        else if (full == "train.aps_grid_step") cfg.train.aps_grid_step = parse_double(value);
        else if (full == "train.aps_rounds") cfg.train.aps_rounds = std::stoi(value);
        else if (full == "pdd.kappa0") cfg.train.pdd.kappa0 = parse_double(value);
        else if (full == "pdd.c_pen") cfg.train.pdd.c_pen = parse_double(value);
        else if (full == "pdd.eps_outer") cfg.train.pdd.eps_outer = parse_double(value);
        else if (full == "pdd.max_inner") cfg.train.pdd.max_inner = std::stoi(value);
        else if (full == "pdd.max_outer") cfg.train.pdd.max_outer = std::stoi(value);
        else throw std::invalid_argument("unknown config key: " + full);
    }
    cfg.data.n_users = cfg.n_users;
    cfg.train.p_a = dbm_to_mw(cfg.p_a_dbm);
    cfg.train.sigma_n2 = dbm_to_mw(cfg.sigma_n2_dbm);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw std::invalid_argument("method list is empty");
    if (cfg.realizations < 1) throw std::invalid_argument("realizations must be >= 1");
    if (cfg.n_users < 1) throw std::invalid_argument("users must be >= 1");
    if (cfg.channel.n_antennas < 1) throw std::invalid_argument("antennas must be >= 1");
    if (!(cfg.channel.wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
    if (!(cfg.channel.d_min_m > 0.0) || cfg.channel.d_max_m < cfg.channel.d_min_m) {
        throw std::invalid_argument("bad distance range");
    }
    if (cfg.train.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!(cfg.train.lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (cfg.dataset != "synthetic" && cfg.dataset != "mnist") {
        throw std::invalid_argument("dataset must be synthetic or mnist");
    }
    if (cfg.dataset == "mnist" && cfg.mnist_dir.empty()) {
        throw std::invalid_argument("mnist dataset needs mnist_dir");
    }
    const double step_x = std::max(cfg.channel.v_x, cfg.channel.wavelength / 2.0);
    if (cfg.channel.region.x_min + (cfg.channel.n_antennas - 1) * step_x >
        cfg.channel.region.x_max + 1e-12) {
        throw std::invalid_argument("region cannot fit the antenna grid along x");
    }
}

namespace {

struct CellOutput {
    std::vector<ResultRow> rows;
    CellStatus status;
    std::vector<pdd::TraceRecord> trace;
};

CellOutput run_cell(const ExperimentConfig& cfg, fedsim::Method method, int realization) {
    CellOutput out;
    out.status.method = fedsim::method_name(method);
    out.status.realization = realization;
    try {
        auto channels = channel::sample_channels(
            cfg.master_seed + static_cast<std::uint64_t>(realization), cfg.n_users, cfg.channel);

        fedsim::Dataset dataset;
        if (cfg.dataset == "mnist") {
            dataset = fedsim::mnist_dataset(cfg.mnist_dir, cfg.n_users,
                                            cfg.data.samples_per_user, cfg.data.test_samples);
        } else {
            fedsim::SyntheticConfig dc = cfg.data;
            dc.n_users = cfg.n_users;
            dataset = fedsim::synthetic_dataset(dc, cfg.master_seed);
        }

        fedsim::TrainConfig tc = cfg.train;
        tc.method = method;
        tc.seed = cfg.master_seed + 1000003ull * static_cast<std::uint64_t>(realization);

        auto state = fedsim::train(dataset, std::move(channels), tc);
        out.trace = std::move(state.pdd_trace);
        for (const auto& rs : state.history) {
            ResultRow row;
            row.method = fedsim::method_name(method);
            row.realization = realization;
            row.round = rs.round;
            row.train_loss = rs.train_loss;
            row.test_loss = rs.test_loss;
            row.test_accuracy = rs.test_accuracy;
            row.selected_count = rs.selected_count;
            row.r_value = rs.r_value;
            row.max_gain = rs.max_gain;
            out.rows.push_back(std::move(row));
        }
    } catch (const std::exception& ex) {
        out.status.ok = false;
        out.status.error = ex.what();
        out.rows.clear();
    }
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
    validate_config(cfg);
    struct Cell {
        fedsim::Method method;
        int realization;
    };
    std::vector<Cell> cells;
    for (auto method : cfg.methods) {
        for (int r = 0; r < cfg.realizations; ++r) cells.push_back({method, r});
    }

    std::vector<CellOutput> outputs(cells.size());
    const int n_workers = std::max(1, workers);
    std::size_t next = 0;
    while (next < cells.size()) {
        const std::size_t batch = std::min<std::size_t>(n_workers, cells.size() - next);
        std::vector<std::future<CellOutput>> futures;
        futures.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const Cell cell = cells[next + i];
            futures.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                         [&cfg, cell]() {
                                             return run_cell(cfg, cell.method, cell.realization);
                                         }));
        }
        for (std::size_t i = 0; i < batch; ++i) outputs[next + i] = futures[i].get();
        next += batch;
    }

    ExperimentResult result;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto& out = outputs[i];
        result.cells.push_back(out.status);
        for (auto& row : out.rows) result.rows.push_back(std::move(row));
        if (!out.trace.empty()) {
            result.traces.emplace_back(
                out.status.method + "_r" + std::to_string(out.status.realization),
                std::move(out.trace));
        }
    }
    std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.method != b.method) return a.method < b.method;
        if (a.realization != b.realization) return a.realization < b.realization;
        return a.round < b.round;
    });
    return result;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
    std::string out =
        "method,realization,round,train_loss,test_loss,test_accuracy,selected_count,"
        "r_value,max_gain\n";
    for (const auto& r : rows) {
        out += r.method;
        out += ',';
        out += std::to_string(r.realization);
        out += ',';
        out += std::to_string(r.round);
        out += ',';
        out += format_double(r.train_loss);
        out += ',';
        out += format_double(r.test_loss);
        out += ',';
        out += format_double(r.test_accuracy);
        out += ',';
        out += std::to_string(r.selected_count);
        out += ',';
        out += format_double(r.r_value);
        out += ',';
        out += format_double(r.max_gain);
        out += '\n';
    }
    return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ResultRow r;
        std::getline(ss, r.method, ',');
        std::getline(ss, field, ',');
        r.realization = std::stoi(field);
        std::getline(ss, field, ',');
        r.round = std::stoi(field);
        std::getline(ss, field, ',');
        r.train_loss = parse_double(field);
        std::getline(ss, field, ',');
        r.test_loss = parse_double(field);
        std::getline(ss, field, ',');
        r.test_accuracy = parse_double(field);
        std::getline(ss, field, ',');
        r.selected_count = std::stoi(field);
        std::getline(ss, field, ',');
        r.r_value = parse_double(field);
        std::getline(ss, field, ',');
        r.max_gain = parse_double(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string summary_json(const ExperimentResult& result, const ExperimentConfig& cfg) {
    nlohmann::ordered_json summary;
    summary["realizations"] = cfg.realizations;
    summary["rounds"] = cfg.train.rounds;
    summary["users"] = cfg.n_users;
    summary["methods"] = nlohmann::ordered_json::array();

    for (auto method : cfg.methods) {
        const std::string name = fedsim::method_name(method);
        std::vector<double> final_acc;
        std::vector<double> selected;
        int failed = 0;
        for (const auto& cell : result.cells) {
            if (cell.method == name && !cell.ok) ++failed;
        }
        for (const auto& row : result.rows) {
            if (row.method != name) continue;
            if (row.round == cfg.train.rounds - 1) final_acc.push_back(row.test_accuracy);
            selected.push_back(static_cast<double>(row.selected_count));
        }
        auto mean_std = [](const std::vector<double>& xs) {
            if (xs.empty()) return std::pair<double, double>{0.0, 0.0};
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= static_cast<double>(xs.size());
            return std::pair<double, double>{mean, std::sqrt(var)};
        };
        auto [acc_mean, acc_std] = mean_std(final_acc);
        auto [sel_mean, sel_std] = mean_std(selected);

        nlohmann::ordered_json entry;
        entry["method"] = name;
        entry["status"] = failed == 0 ? "ok" : "partial_failure";
        entry["failed_cells"] = failed;
        entry["final_accuracy_mean"] = acc_mean;
        entry["final_accuracy_std"] = acc_std;
        entry["selected_count_mean"] = sel_mean;
        entry["selected_count_std"] = sel_std;
        summary["methods"].push_back(entry);
    }
    summary["dc_method"] = "external baseline, not implemented";
    return summary.dump(2) + "\n";
}

void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream csv(fs::path(out_dir) / "results.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write results.csv under " + out_dir);
        csv << format_csv(result.rows);
    }
    {
        std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
        if (!js) throw std::runtime_error("cannot write summary.json under " + out_dir);
        js << summary_json(result, cfg);
    }
    for (const auto& [name, trace] : result.traces) {
        std::ofstream tr(fs::path(out_dir) / ("trace_" + name + ".csv"), std::ios::binary);
        tr << "outer_iter,inner_iter,aug_lagrangian,residual_inf,kappa,r_value\n";
        for (const auto& rec : trace) {
            tr << rec.outer << ',' << rec.inner << ',' << format_double(rec.aug_lagrangian)
               << ',' << format_double(rec.residual_inf) << ',' << format_double(rec.kappa)
               << ',' << format_double(rec.r_value) << '\n';
        }
    }
}

}  // namespace otafl::harness
