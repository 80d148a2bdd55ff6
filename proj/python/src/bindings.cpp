#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdio>

#include "blevaa/config.hpp"
#include "blevaa/crlb.hpp"
#include "blevaa/dataset.hpp"
#include "blevaa/features.hpp"
#include "blevaa/signal_model.hpp"
#include "blevaa/superres.hpp"
#include "blevaa/sweep.hpp"

namespace py = pybind11;
using namespace blevaa;

namespace {

// Sign matrices cross the boundary as plain int arrays.
SignMatrix to_signs(const Eigen::MatrixXi& v) { return SignMatrix(v); }

SignProbabilities to_probs(const Eigen::MatrixXd& row, const Eigen::MatrixXd& col) { return {row, col}; }

py::dict estimates_dict(const EstimateSet& e) {
    std::vector<double> doa, toa, peak;
    for (const auto& it : e.items) {
        doa.push_back(it.doa_rad);
        toa.push_back(it.toa_s);
        peak.push_back(it.peak);
    }
    py::dict d;
    d["doa_rad"] = doa;
    d["toa_s"] = toa;
    d["peak"] = peak;
    d["degenerate"] = e.degenerate;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Virtual-antenna-array ranging from two-way channel measurements";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
    py::register_exception<SingularFisherError>(m, "SingularFisherError", PyExc_ArithmeticError);
    py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", PyExc_RuntimeError);

    py::class_<RadioConfig>(m, "RadioConfig")
        .def(py::init<>())
        .def_readwrite("num_positions", &RadioConfig::num_positions)
        .def_readwrite("num_subcarriers", &RadioConfig::num_subcarriers)
        .def_readwrite("subcarrier_spacing_hz", &RadioConfig::subcarrier_spacing_hz)
        .def_readwrite("carrier_wavelength_m", &RadioConfig::carrier_wavelength_m)
        .def("validate", &RadioConfig::validate);

    py::class_<VaaGeometry>(m, "VaaGeometry")
        .def(py::init<>())
        .def(py::init([](std::vector<double> d, std::vector<double> phi) { return VaaGeometry{std::move(d), std::move(phi)}; }),
             py::arg("displacement_m"), py::arg("direction_rad"))
        .def_readwrite("displacement_m", &VaaGeometry::displacement_m)
        .def_readwrite("direction_rad", &VaaGeometry::direction_rad)
        .def_static("from_positions", &VaaGeometry::from_positions, py::arg("x_m"), py::arg("y_m"))
        .def("validate", &VaaGeometry::validate);

    py::class_<Path>(m, "Path")
        .def(py::init([](double doa, double toa, cdouble gain) { return Path{doa, toa, gain}; }), py::arg("doa_rad"),
             py::arg("toa_s"), py::arg("gain") = cdouble(1.0, 0.0))
        .def_readwrite("doa_rad", &Path::doa_rad)
        .def_readwrite("toa_s", &Path::toa_s)
        .def_readwrite("gain", &Path::gain)
        .def("__repr__", [](const Path& p) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "Path(doa_rad=%g, toa_s=%g, gain=(%g%+gj))", p.doa_rad, p.toa_s,
                          p.gain.real(), p.gain.imag());
            return std::string(buf);
        });

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("geometry", &Scenario::geometry)
        .def_readonly("paths", &Scenario::paths)
        .def_readonly("ue_x_m", &Scenario::ue_x_m)
        .def_readonly("ue_y_m", &Scenario::ue_y_m);

    m.def("gen_scenario", [](std::uint64_t seed, const RadioConfig& radio, int nlos_min, int nlos_max) {
        ScenarioConfig cfg;
        cfg.nlos_min = nlos_min;
        cfg.nlos_max = nlos_max;
        std::mt19937_64 rng(seed);
        return gen_scenario(cfg, radio, rng);
    }, py::arg("seed"), py::arg("radio") = RadioConfig{}, py::arg("nlos_min") = 1, py::arg("nlos_max") = 3);

    // signal model
    m.def("noise_std_from_snr_db", &noise_std_from_snr_db);
    m.def("noiseless_cfr", &noiseless_cfr, py::arg("geometry"), py::arg("radio"), py::arg("paths"));
    m.def("synthesize_cfr", [](const VaaGeometry& g, const RadioConfig& radio, const PathSet& paths, double noise_std,
                               std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return synthesize_cfr(g, radio, paths, noise_std, rng);
    }, py::arg("geometry"), py::arg("radio"), py::arg("paths"), py::arg("noise_std"), py::arg("seed"));

    // two-way exchange
    m.def("random_lo_phases", [](Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return random_lo_phases(rows, cols, rng).phases;
    });
    m.def("apply_lo_offsets", [](const CfrMatrix& y, const Eigen::MatrixXd& phases, const std::string& direction) {
        if (direction != "reflector" && direction != "initiator")
            throw std::invalid_argument("direction must be 'reflector' or 'initiator'");
        return apply_lo_offsets(y, LoPhaseMatrix{phases},
                                direction == "reflector" ? LinkDirection::reflector : LinkDirection::initiator);
    }, py::arg("y"), py::arg("phases"), py::arg("direction"));
    m.def("two_way_cfr", &two_way_cfr, py::arg("reflector"), py::arg("initiator"));
    m.def("half_phase_sqrt", &half_phase_sqrt);
    m.def("true_sign_matrix", [](const CfrMatrix& y, const CfrMatrix& root) { return true_sign_matrix(y, root).values(); });

    // sign recovery
    m.def("make_labels", [](const Eigen::MatrixXi& signs) {
        const LabelMatrices l = make_labels(to_signs(signs));
        return py::make_tuple(l.q, l.p);
    }, "Returns (q, p) label matrices.");
    m.def("resolve_signs", [](const Eigen::MatrixXd& row, const Eigen::MatrixXd& col) {
        return resolve_signs(to_probs(row, col)).values();
    }, py::arg("row_probs"), py::arg("col_probs"));
    m.def("vote_first_column", [](const Eigen::MatrixXd& row, const Eigen::MatrixXd& col) {
        return vote_first_column(to_probs(row, col));
    }, py::arg("row_probs"), py::arg("col_probs"));
    m.def("continuity_probabilities", [](const CfrMatrix& two_way) {
        const SignProbabilities p = continuity_probabilities(two_way);
        return py::make_tuple(p.row, p.col);
    });
    m.def("oracle_predictor", [](const Eigen::MatrixXi& signs, double flip_rate, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const SignProbabilities p = oracle_predictor(to_signs(signs), flip_rate, rng);
        return py::make_tuple(p.row, p.col);
    }, py::arg("signs"), py::arg("flip_rate"), py::arg("seed"));
    m.def("recover_one_way", [](const CfrMatrix& root, const Eigen::MatrixXi& signs) {
        return recover_one_way(root, to_signs(signs));
    });
    m.def("sign_accuracy", [](const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
        return sign_accuracy(to_signs(a), to_signs(b));
    });

    // super-resolution
    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](double start, double stop, double step) { return GridSpec{start, stop, step}; }))
        .def_readwrite("start", &GridSpec::start)
        .def_readwrite("stop", &GridSpec::stop)
        .def_readwrite("step", &GridSpec::step)
        .def("nodes", &GridSpec::nodes);

    py::class_<MusicConfig>(m, "MusicConfig")
        .def(py::init<>())
        .def_readwrite("model_order", &MusicConfig::model_order)
        .def_readwrite("subband_length", &MusicConfig::subband_length)
        .def_readwrite("doa_grid", &MusicConfig::doa_grid)
        .def_readwrite("toa_grid", &MusicConfig::toa_grid)
        .def_readwrite("forward_backward", &MusicConfig::forward_backward)
        .def_readwrite("refine", &MusicConfig::refine);

    m.def("smoothed_joint_covariance", &smoothed_joint_covariance, py::arg("y"), py::arg("subband_length"),
          py::arg("forward_backward") = false);
    m.def("music_spectrum", [](const CfrMatrix& y, const VaaGeometry& g, const RadioConfig& radio,
                               const MusicConfig& mcfg, double scale) {
        const Pseudospectrum p =
            music_spectrum(smoothed_joint_covariance(y, mcfg.subband_length, mcfg.forward_backward), g, radio, mcfg,
                           SteeringScale{scale});
        return py::make_tuple(p.doa_rad, p.toa_s, p.power);
    }, py::arg("y"), py::arg("geometry"), py::arg("radio"), py::arg("music"), py::arg("steering_scale") = 1.0,
       "Returns (doa_rad, toa_s, power) with power indexed [doa, toa].");
    m.def("estimate_one_way", [](const CfrMatrix& y, const VaaGeometry& g, const RadioConfig& radio,
                                 const MusicConfig& mcfg) { return estimates_dict(estimate_one_way(y, g, radio, mcfg)); });
    m.def("estimate_two_way_baseline", [](const CfrMatrix& two, const VaaGeometry& g, const RadioConfig& radio,
                                          const MusicConfig& mcfg) {
        return estimates_dict(estimate_two_way_baseline(two, g, radio, mcfg));
    });

    // bounds
    m.def("compute_crlb", [](const VaaGeometry& g, const RadioConfig& radio, const PathSet& paths, double noise_std) {
        const CrlbBounds b = compute_crlb(g, radio, paths, noise_std);
        py::dict d;
        d["doa_rad2"] = b.doa_rad2;
        d["toa_s2"] = b.toa_s2;
        return d;
    });
    m.def("fisher_information", [](const VaaGeometry& g, const RadioConfig& radio, const PathSet& paths,
                                   double noise_std) {
        return fisher_information(mean_jacobian(g, radio, paths), noise_std).values();
    });

    // predictors
    py::class_<PredictorModel>(m, "PredictorModel")
        .def_static("load", &PredictorModel::load)
        .def_static("from_json", &PredictorModel::from_json)
        .def("to_json", &PredictorModel::to_json)
        .def("save", &PredictorModel::save)
        .def_property_readonly("role", [](const PredictorModel& p) { return to_string(p.role()); })
        .def_property_readonly("input_channels", &PredictorModel::input_channels)
        .def_property_readonly("parameter_count", &PredictorModel::parameter_count)
        .def("predict", [](const PredictorModel& p, const Eigen::MatrixXd& f) { return predict(p, f); });
    m.def("create_model", [](const std::string& role, int channels, std::vector<int> widths, std::uint64_t seed) {
        return PredictorModel::create(predictor_role_from_string(role), channels, std::move(widths), seed);
    }, py::arg("role"), py::arg("input_channels"), py::arg("widths"), py::arg("seed"));
    m.def("extract_features", [](const CfrMatrix& two, const VaaGeometry& g, const RadioConfig& radio,
                                 const std::string& axis, Eigen::Index index) {
        if (axis != "row" && axis != "column") throw std::invalid_argument("axis must be 'row' or 'column'");
        return extract_features(two, g, radio, axis == "row" ? SliceAxis::row : SliceAxis::column, index);
    });
    m.def("learned_probabilities", [](const CfrMatrix& two, const VaaGeometry& g, const RadioConfig& radio,
                                      const PredictorModel& row, const PredictorModel& col) {
        const SignProbabilities p = learned_probabilities(two, g, radio, row, col);
        return py::make_tuple(p.row, p.col);
    });

    // harness
    m.def("default_config_json", [] { return config_to_json(ExperimentConfig{}); });
    m.def("run_sweep", [](const std::string& config_json, const std::string& row_model, const std::string& col_model) {
        const ExperimentConfig cfg = parse_config(config_json);
        PredictorModel row, col;
        SweepModels models;
        if (!row_model.empty()) row = PredictorModel::load(row_model), models.row = &row;
        if (!col_model.empty()) col = PredictorModel::load(col_model), models.col = &col;
        py::gil_scoped_release release;
        return run_sweep(cfg, models).to_csv();
    }, py::arg("config_json") = "{}", py::arg("row_model") = "", py::arg("col_model") = "",
       "Runs a Monte-Carlo sweep and returns the CSV text.");
    m.def("crlb_csv", [](const std::string& config_json) { return crlb_csv(crlb_curve(parse_config(config_json))); },
          py::arg("config_json") = "{}");
    m.def("generate_dataset", [](std::size_t count, std::uint64_t seed, const std::filesystem::path& out) {
        const ExperimentConfig cfg;
        save_dataset(generate_dataset(count, seed, cfg.scenario, cfg.radio), out);
    }, py::arg("count"), py::arg("seed"), py::arg("out_dir"));
}
