#include "blevaa/dataset.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "blevaa/features.hpp"
#include "blevaa/signal_model.hpp"

namespace blevaa {

namespace {

using nlohmann::ordered_json;

constexpr std::uint64_t kSplitStream = 0x5350;   // "SP"
constexpr std::uint64_t kRecordStream = 0x5245;  // "RE"

std::runtime_error io_error(const std::filesystem::path& path, const std::string& what) {
    return std::runtime_error(path.string() + ": " + what);
}

ordered_json int_matrix_json(const Eigen::MatrixXi& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index n = 0; n < m.rows(); ++n) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(n, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXi int_matrix_from(const ordered_json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw std::invalid_argument(std::string(name) + " has the wrong number of rows");
    Eigen::MatrixXi m(rows, cols);
    for (Eigen::Index n = 0; n < rows; ++n) {
        const auto& row = j[static_cast<std::size_t>(n)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument(std::string(name) + " has the wrong number of columns");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const int v = row[static_cast<std::size_t>(k)].get<int>();
            if (v != 0 && v != 1) throw std::invalid_argument(std::string(name) + " entries must be 0 or 1");
            m(n, k) = v;
        }
    }
    return m;
}

ordered_json record_json(const DatasetRecord& r) {
    ordered_json y2 = ordered_json::array();
    for (Eigen::Index n = 0; n < r.two_way.rows(); ++n) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index m = 0; m < r.two_way.cols(); ++m)
            row.push_back(ordered_json::array({r.two_way(n, m).real(), r.two_way(n, m).imag()}));
        y2.push_back(std::move(row));
    }
    ordered_json truth;
    truth["theta"] = ordered_json::array();
    truth["tau"] = ordered_json::array();
    truth["c_re"] = ordered_json::array();
    truth["c_im"] = ordered_json::array();
    for (const Path& p : r.truth) {
        truth["theta"].push_back(p.doa_rad);
        truth["tau"].push_back(p.toa_s);
        truth["c_re"].push_back(p.gain.real());
        truth["c_im"].push_back(p.gain.imag());
    }
    ordered_json j;
    j["y2"] = std::move(y2);
    j["q"] = int_matrix_json(r.labels.q);
    j["p"] = int_matrix_json(r.labels.p);
    j["geometry"] = {{"d", r.geometry.displacement_m}, {"phi", r.geometry.direction_rad}};
    j["truth"] = std::move(truth);
    j["snr_db"] = r.snr_db;
    j["seed"] = r.seed;
    return j;
}

DatasetRecord record_from(const ordered_json& j, const RadioConfig& radio) {
    const Eigen::Index rows = radio.num_positions;
    const Eigen::Index cols = radio.num_subcarriers;
    DatasetRecord r;
    const auto& y2 = j.at("y2");
    if (!y2.is_array() || static_cast<Eigen::Index>(y2.size()) != rows)
        throw std::invalid_argument("y2 has the wrong number of rows");
    r.two_way.resize(rows, cols);
    for (Eigen::Index n = 0; n < rows; ++n) {
        const auto& row = y2[static_cast<std::size_t>(n)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument("y2 has the wrong number of columns");
        for (Eigen::Index m = 0; m < cols; ++m) {
            const auto& z = row[static_cast<std::size_t>(m)];
            if (!z.is_array() || z.size() != 2) throw std::invalid_argument("y2 entries must be [re, im] pairs");
            r.two_way(n, m) = cdouble(z[0].get<double>(), z[1].get<double>());
        }
    }
    r.labels.q = int_matrix_from(j.at("q"), rows, cols, "q");
    r.labels.p = int_matrix_from(j.at("p"), rows, cols, "p");
    r.geometry.displacement_m = j.at("geometry").at("d").get<std::vector<double>>();
    r.geometry.direction_rad = j.at("geometry").at("phi").get<std::vector<double>>();
    r.geometry.validate(radio);
    const auto& t = j.at("truth");
    const auto theta = t.at("theta").get<std::vector<double>>();
    const auto tau = t.at("tau").get<std::vector<double>>();
    const auto c_re = t.at("c_re").get<std::vector<double>>();
    const auto c_im = t.at("c_im").get<std::vector<double>>();
    if (tau.size() != theta.size() || c_re.size() != theta.size() || c_im.size() != theta.size())
        throw std::invalid_argument("truth arrays differ in length");
    for (std::size_t l = 0; l < theta.size(); ++l) r.truth.push_back({theta[l], tau[l], cdouble(c_re[l], c_im[l])});
    r.snr_db = j.at("snr_db").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

std::vector<std::size_t> indices_from(const ordered_json& j, std::size_t count, const char* name) {
    auto v = j.at(name).get<std::vector<std::size_t>>();
    for (std::size_t i : v)
        if (i >= count) throw std::invalid_argument(std::string("split index out of range in ") + name);
    return v;
}

}  // namespace

Realization simulate_realization(Scenario scenario, const RadioConfig& radio, double noise_std, NoiseMode mode,
                                 std::mt19937_64& rng) {
    Realization r;
    r.noise_std = noise_std;
    const CfrMatrix clean = noiseless_cfr(scenario.geometry, radio, scenario.paths);
    const LoPhaseMatrix lo = random_lo_phases(clean.rows(), clean.cols(), rng);
    if (mode == NoiseMode::shared) {
        r.one_way = clean;
        if (noise_std > 0.0) r.one_way += complex_noise(clean.rows(), clean.cols(), noise_std, rng);
        r.two_way = measure_two_way(r.one_way, lo, 0.0, NoiseMode::shared, rng).two_way;
    } else {
        r.one_way = clean;
        r.two_way = measure_two_way(clean, lo, noise_std, NoiseMode::per_direction, rng).two_way;
    }
    r.two_way_sqrt = half_phase_sqrt(r.two_way);
    r.signs = true_sign_matrix(r.one_way, r.two_way_sqrt);
    r.scenario = std::move(scenario);
    return r;
}

DatasetSplit split_indices(std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, kSplitStream));
    // Fisher-Yates with explicit draws so the permutation does not depend on the standard library.
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(kTrainFraction * static_cast<double>(count) + 1e-9);
    const auto n_val = static_cast<std::size_t>(kValidationFraction * static_cast<double>(count) + 1e-9);
    DatasetSplit s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                        order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    return s;
}

Dataset generate_dataset(std::size_t count, std::uint64_t seed, const ScenarioConfig& scenario,
                         const RadioConfig& radio, NoiseMode mode) {
    if (count < 10) throw std::invalid_argument("a dataset needs at least 10 records");
    scenario.validate();
    radio.validate();
    Dataset d;
    d.radio = radio;
    d.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        DatasetRecord r;
        r.seed = derive_seed(seed, kRecordStream, i);
        std::mt19937_64 rng(r.seed);
        Scenario s = gen_scenario(scenario, radio, rng);
        r.snr_db = std::uniform_real_distribution<double>(scenario.dataset_snr_min_db, scenario.dataset_snr_max_db)(rng);
        Realization z = simulate_realization(std::move(s), radio, noise_std_from_snr_db(r.snr_db), mode, rng);
        r.two_way = std::move(z.two_way);
        r.labels = make_labels(z.signs);
        r.geometry = std::move(z.scenario.geometry);
        r.truth = std::move(z.scenario.paths);
        d.records.push_back(std::move(r));
    }
    d.split = split_indices(count, seed);
    return d;
}

Dataset resynthesize(const Dataset& dataset, const std::vector<std::size_t>& indices, double snr_db,
                     std::uint64_t seed, NoiseMode mode) {
    Dataset d;
    d.radio = dataset.radio;
    const double noise_std = noise_std_from_snr_db(snr_db);
    for (std::size_t idx : indices) {
        const DatasetRecord& src = dataset.records.at(idx);
        DatasetRecord r;
        r.seed = derive_seed(seed, kRecordStream, src.seed);
        r.snr_db = snr_db;
        std::mt19937_64 rng(r.seed);
        Scenario s;
        s.geometry = src.geometry;
        s.paths = src.truth;
        Realization z = simulate_realization(std::move(s), d.radio, noise_std, mode, rng);
        r.two_way = std::move(z.two_way);
        r.labels = make_labels(z.signs);
        r.geometry = std::move(z.scenario.geometry);
        r.truth = std::move(z.scenario.paths);
        d.split.test.push_back(d.records.size());
        d.records.push_back(std::move(r));
    }
    return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error(dir, "cannot create directory: " + ec.message());

    const auto records_path = dir / "records.jsonl";
    std::ofstream out(records_path, std::ios::binary);
    if (!out) throw io_error(records_path, "cannot open for writing");
    for (const auto& r : dataset.records) out << record_json(r).dump() << '\n';
    out.close();
    if (!out) throw io_error(records_path, "write failed");

    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["count"] = dataset.records.size();
    manifest["radio"] = {{"num_positions", dataset.radio.num_positions},
                         {"num_subcarriers", dataset.radio.num_subcarriers},
                         {"subcarrier_spacing_hz", dataset.radio.subcarrier_spacing_hz},
                         {"carrier_wavelength_m", dataset.radio.carrier_wavelength_m}};
    manifest["train"] = dataset.split.train;
    manifest["validation"] = dataset.split.validation;
    manifest["test"] = dataset.split.test;
    const auto split_path = dir / "split.json";
    std::ofstream sout(split_path, std::ios::binary);
    if (!sout) throw io_error(split_path, "cannot open for writing");
    sout << manifest.dump(2) << '\n';
    sout.close();
    if (!sout) throw io_error(split_path, "write failed");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto split_path = dir / "split.json";
    std::ifstream sin(split_path);
    if (!sin) throw io_error(split_path, "cannot open");
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(sin);
    } catch (const std::exception& e) {
        throw io_error(split_path, e.what());
    }

    Dataset d;
    std::size_t count = 0;
    try {
        const auto& radio = manifest.at("radio");
        d.radio.num_positions = radio.at("num_positions").get<int>();
        d.radio.num_subcarriers = radio.at("num_subcarriers").get<int>();
        d.radio.subcarrier_spacing_hz = radio.at("subcarrier_spacing_hz").get<double>();
        d.radio.carrier_wavelength_m = radio.at("carrier_wavelength_m").get<double>();
        d.radio.validate();
        count = manifest.at("count").get<std::size_t>();
        d.split.train = indices_from(manifest, count, "train");
        d.split.validation = indices_from(manifest, count, "validation");
        d.split.test = indices_from(manifest, count, "test");
    } catch (const std::exception& e) {
        throw io_error(split_path, e.what());
    }

    const auto records_path = dir / "records.jsonl";
    std::ifstream in(records_path);
    if (!in) throw io_error(records_path, "cannot open");
    d.records.reserve(count);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            d.records.push_back(record_from(ordered_json::parse(line), d.radio));
        } catch (const std::exception& e) {
            throw io_error(records_path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (d.records.size() != count)
        throw io_error(records_path, "expected " + std::to_string(count) + " records, found " +
                                         std::to_string(d.records.size()));
    return d;
}

SignMatrix signs_from_labels(const LabelMatrices& labels) {
    const Eigen::Index rows = labels.q.rows();
    const Eigen::Index cols = labels.q.cols();
    if (labels.p.rows() != rows || labels.p.cols() != cols) throw DimensionError("q and p differ in shape");
    SignMatrix s(rows, cols);
    for (Eigen::Index n = 0; n < rows; ++n) {
        const int first = labels.p(n, 0) == 1 ? 1 : -1;
        for (Eigen::Index m = 0; m < cols; ++m) s.set(n, m, labels.q(n, m) == 1 ? first : -first);
    }
    return s;
}

std::vector<Sample> make_samples(const Dataset& dataset, const std::vector<std::size_t>& indices, SliceAxis axis) {
    std::vector<Sample> out;
    const bool row = axis == SliceAxis::row;
    for (std::size_t idx : indices) {
        const DatasetRecord& r = dataset.records.at(idx);
        const Eigen::Index count = row ? r.two_way.rows() : r.two_way.cols();
        for (Eigen::Index i = 0; i < count; ++i) {
            Sample s;
            s.features = extract_features(r.two_way, r.geometry, dataset.radio, axis, i);
            s.targets = row ? Eigen::VectorXd(r.labels.q.row(i).transpose().cast<double>())
                            : Eigen::VectorXd(r.labels.p.col(i).cast<double>());
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

SignAccuracyReport accumulate(const Dataset& dataset, const std::vector<std::size_t>& indices,
                              const std::function<SignProbabilities(const DatasetRecord&)>& predictor) {
    SignAccuracyReport rep;
    double row_hits = 0.0, col_hits = 0.0, sign_hits = 0.0, total = 0.0;
    for (std::size_t idx : indices) {
        const DatasetRecord& r = dataset.records.at(idx);
        const SignProbabilities probs = predictor(r);
        for (Eigen::Index n = 0; n < r.two_way.rows(); ++n) {
            for (Eigen::Index m = 0; m < r.two_way.cols(); ++m) {
                row_hits += (decide_sign(probs.row(n, m)) > 0) == (r.labels.q(n, m) == 1);
                col_hits += (decide_sign(probs.col(n, m)) > 0) == (r.labels.p(n, m) == 1);
            }
        }
        const double entries = static_cast<double>(r.two_way.size());
        sign_hits += sign_accuracy(resolve_signs(probs), signs_from_labels(r.labels)) * entries;
        total += entries;
        ++rep.records;
    }
    if (total > 0.0) {
        rep.row_accuracy = row_hits / total;
        rep.column_accuracy = col_hits / total;
        rep.sign_accuracy = sign_hits / total;
    }
    return rep;
}

}  // namespace

SignAccuracyReport evaluate_learned(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                    const PredictorModel& row_model, const PredictorModel& col_model) {
    return accumulate(dataset, indices, [&](const DatasetRecord& r) {
        return learned_probabilities(r.two_way, r.geometry, dataset.radio, row_model, col_model);
    });
}

SignAccuracyReport evaluate_continuity(const Dataset& dataset, const std::vector<std::size_t>& indices) {
    return accumulate(dataset, indices, [](const DatasetRecord& r) { return continuity_probabilities(r.two_way); });
}

}  // namespace blevaa
