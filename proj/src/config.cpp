#include "blevaa/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace blevaa {

namespace {

using nlohmann::json;

// Reads the keys of one config object, rejecting any key that was not consumed.
class Section {
public:
    Section(const json& object, std::string name) : object_(object), name_(std::move(name)) {
        if (!object_.is_object()) throw std::invalid_argument("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& target) {
        known_.insert(key);
        if (!object_.contains(key)) return;
        try {
            target = object_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument("config key '" + name_ + "." + key + "' has the wrong type: " + e.what());
        }
    }

    Section child(const char* key) {
        known_.insert(key);
        static const json empty = json::object();
        return Section(object_.contains(key) ? object_.at(key) : empty, name_ + "." + key);
    }

    void finish() const {
        for (const auto& item : object_.items()) {
            if (!known_.count(item.key()))
                throw std::invalid_argument("unknown config key '" + (name_.empty() ? "" : name_ + ".") + item.key() + "'");
        }
    }

private:
    const json& object_;
    std::string name_;
    std::set<std::string> known_;
};

void read_grid(Section s, GridSpec& g) {
    s.read("start", g.start);
    s.read("stop", g.stop);
    s.read("step", g.step);
    s.finish();
}

json grid_json(const GridSpec& g) { return {{"start", g.start}, {"stop", g.stop}, {"step", g.step}}; }

NoiseMode noise_mode_from_string(const std::string& s) {
    if (s == "shared") return NoiseMode::shared;
    if (s == "per_direction") return NoiseMode::per_direction;
    throw std::invalid_argument("noise_mode must be 'shared' or 'per_direction'");
}

}  // namespace

void ExperimentConfig::validate() const {
    radio.validate();
    scenario.validate();
    music.validate(radio);
    train.validate();
    if (sweep.snr_db.empty()) throw std::invalid_argument("sweep.snr_db must not be empty");
    if (sweep.trials < 1) throw std::invalid_argument("sweep.trials must be positive");
    if (sweep.methods.empty()) throw std::invalid_argument("sweep.methods must not be empty");
    for (const auto& m : sweep.methods)
        if (m != "oracle" && m != "learned" && m != "twoway" && m != "continuity")
            throw std::invalid_argument("unknown sweep method '" + m + "'");
    if (sweep.error_metric != "los" && sweep.error_metric != "all_paths")
        throw std::invalid_argument("sweep.error_metric must be 'los' or 'all_paths'");
    if (sweep.threads < 0) throw std::invalid_argument("sweep.threads must be non-negative");
    if (model.row_widths.empty() || model.col_widths.empty())
        throw std::invalid_argument("model widths must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    Section top(root, "");

    Section radio = top.child("radio");
    radio.read("num_positions", c.radio.num_positions);
    radio.read("num_subcarriers", c.radio.num_subcarriers);
    radio.read("subcarrier_spacing_hz", c.radio.subcarrier_spacing_hz);
    radio.read("carrier_wavelength_m", c.radio.carrier_wavelength_m);
    radio.finish();

    Section sc = top.child("scenario");
    ScenarioConfig& s = c.scenario;
    sc.read("area_side_m", s.area_side_m);
    sc.read("distance_min_m", s.distance_min_m);
    sc.read("distance_max_m", s.distance_max_m);
    sc.read("nlos_min", s.nlos_min);
    sc.read("nlos_max", s.nlos_max);
    sc.read("spacing_min_wavelengths", s.spacing_min_wavelengths);
    sc.read("spacing_max_wavelengths", s.spacing_max_wavelengths);
    sc.read("direction_min_rad", s.direction_min_rad);
    sc.read("direction_max_rad", s.direction_max_rad);
    sc.read("nlos_amplitude_min", s.nlos_amplitude_min);
    sc.read("nlos_amplitude_max", s.nlos_amplitude_max);
    sc.read("snr_db", s.snr_db);
    sc.read("dataset_snr_min_db", s.dataset_snr_min_db);
    sc.read("dataset_snr_max_db", s.dataset_snr_max_db);
    sc.read("displacement_noise_m", s.displacement_noise_m);
    sc.read("direction_noise_rad", s.direction_noise_rad);
    sc.read("seed", s.seed);
    sc.finish();

    Section mu = top.child("music");
    mu.read("model_order", c.music.model_order);
    mu.read("subband_length", c.music.subband_length);
    read_grid(mu.child("doa_grid"), c.music.doa_grid);
    read_grid(mu.child("toa_grid"), c.music.toa_grid);
    mu.read("forward_backward", c.music.forward_backward);
    mu.read("refine", c.music.refine);
    mu.finish();

    Section tr = top.child("train");
    tr.read("learning_rate", c.train.learning_rate);
    tr.read("batch_size", c.train.batch_size);
    tr.read("epochs", c.train.epochs);
    tr.read("patience", c.train.patience);
    tr.read("seed", c.train.seed);
    tr.finish();

    Section mo = top.child("model");
    mo.read("row_widths", c.model.row_widths);
    mo.read("col_widths", c.model.col_widths);
    mo.read("kernel", c.model.kernel);
    mo.finish();

    Section sw = top.child("sweep");
    sw.read("snr_db", c.sweep.snr_db);
    sw.read("trials", c.sweep.trials);
    sw.read("methods", c.sweep.methods);
    sw.read("seed", c.sweep.seed);
    sw.read("error_metric", c.sweep.error_metric);
    sw.read("threads", c.sweep.threads);
    sw.finish();

    std::string mode = "shared";
    top.read("noise_mode", mode);
    c.noise_mode = noise_mode_from_string(mode);
    top.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const ExperimentConfig& c) {
    const ScenarioConfig& s = c.scenario;
    json j;
    j["radio"] = {{"num_positions", c.radio.num_positions},
                  {"num_subcarriers", c.radio.num_subcarriers},
                  {"subcarrier_spacing_hz", c.radio.subcarrier_spacing_hz},
                  {"carrier_wavelength_m", c.radio.carrier_wavelength_m}};
    j["scenario"] = {{"area_side_m", s.area_side_m},
                     {"distance_min_m", s.distance_min_m},
                     {"distance_max_m", s.distance_max_m},
                     {"nlos_min", s.nlos_min},
                     {"nlos_max", s.nlos_max},
                     {"spacing_min_wavelengths", s.spacing_min_wavelengths},
                     {"spacing_max_wavelengths", s.spacing_max_wavelengths},
                     {"direction_min_rad", s.direction_min_rad},
                     {"direction_max_rad", s.direction_max_rad},
                     {"nlos_amplitude_min", s.nlos_amplitude_min},
                     {"nlos_amplitude_max", s.nlos_amplitude_max},
                     {"snr_db", s.snr_db},
                     {"dataset_snr_min_db", s.dataset_snr_min_db},
                     {"dataset_snr_max_db", s.dataset_snr_max_db},
                     {"displacement_noise_m", s.displacement_noise_m},
                     {"direction_noise_rad", s.direction_noise_rad},
                     {"seed", s.seed}};
    j["music"] = {{"model_order", c.music.model_order},
                  {"subband_length", c.music.subband_length},
                  {"doa_grid", grid_json(c.music.doa_grid)},
                  {"toa_grid", grid_json(c.music.toa_grid)},
                  {"forward_backward", c.music.forward_backward},
                  {"refine", c.music.refine}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"patience", c.train.patience},
                  {"seed", c.train.seed}};
    j["model"] = {{"row_widths", c.model.row_widths}, {"col_widths", c.model.col_widths}, {"kernel", c.model.kernel}};
    j["sweep"] = {{"snr_db", c.sweep.snr_db},         {"trials", c.sweep.trials},
                  {"methods", c.sweep.methods},       {"seed", c.sweep.seed},
                  {"error_metric", c.sweep.error_metric}, {"threads", c.sweep.threads}};
    j["noise_mode"] = c.noise_mode == NoiseMode::shared ? "shared" : "per_direction";
    return j.dump(2);
}

}  // namespace blevaa
