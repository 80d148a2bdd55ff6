#include "blevaa/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "blevaa/crlb.hpp"
#include "blevaa/features.hpp"
#include "blevaa/signal_model.hpp"

namespace blevaa {

namespace {

constexpr double kRadToDeg = 180.0 / kPi;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

std::string format_snr(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Runs body(i) for i in [0, count) over `threads` workers with a static interleaved partition.
template <typename Body>
void parallel_for(int count, int threads, Body body) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += threads) body(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct CrlbSample {
    double doa_deg2 = 0.0;
    double toa_ns2 = 0.0;
    bool valid = false;
};

CrlbSample crlb_sample(const Scenario& s, const RadioConfig& radio, double noise_std, const std::string& metric) {
    CrlbSample out;
    try {
        const CrlbBounds b = compute_crlb(s.geometry, radio, s.paths, noise_std);
        const std::size_t count = metric == "los" ? 1 : s.paths.size();
        for (std::size_t l = 0; l < count; ++l) {
            out.doa_deg2 += b.doa_deg2(l);
            out.toa_ns2 += b.toa_ns2(l);
        }
        out.doa_deg2 /= static_cast<double>(count);
        out.toa_ns2 /= static_cast<double>(count);
        out.valid = std::isfinite(out.doa_deg2) && std::isfinite(out.toa_ns2);
    } catch (const SingularFisherError&) {
        out.valid = false;
    }
    return out;
}

void check_methods(const std::vector<std::string>& methods, const SweepModels& models) {
    for (const auto& m : methods) {
        if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
            throw std::invalid_argument("unknown method '" + m + "'");
        if (m == "learned" && (models.row == nullptr || models.col == nullptr))
            throw std::invalid_argument("method 'learned' needs both a row and a column model");
    }
}

}  // namespace

MeanSe mse(const std::vector<double>& squared_errors) {
    if (squared_errors.empty()) throw std::invalid_argument("mse of an empty error list");
    const double n = static_cast<double>(squared_errors.size());
    double sum = 0.0;
    for (double e : squared_errors) sum += e;
    MeanSe out;
    out.mean = sum / n;
    if (squared_errors.size() > 1) {
        double ss = 0.0;
        for (double e : squared_errors) ss += (e - out.mean) * (e - out.mean);
        out.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

EstimateSet run_method(const std::string& method, const Realization& realization, const VaaGeometry& geometry,
                       const RadioConfig& radio, const MusicConfig& mcfg, const SweepModels& models) {
    if (method == "twoway") return estimate_two_way_baseline(realization.two_way, geometry, radio, mcfg);
    SignMatrix signs;
    if (method == "oracle") {
        signs = realization.signs;
    } else if (method == "learned") {
        if (models.row == nullptr || models.col == nullptr)
            throw std::invalid_argument("method 'learned' needs both a row and a column model");
        signs = resolve_signs(learned_probabilities(realization.two_way, geometry, radio, *models.row, *models.col));
    } else if (method == "continuity") {
        signs = resolve_signs(continuity_probabilities(realization.two_way));
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    return estimate_one_way(recover_one_way(realization.two_way_sqrt, signs), geometry, radio, mcfg);
}

SquaredError matched_error(const EstimateSet& estimates, const Path& truth, const MusicConfig& mcfg) {
    if (estimates.items.empty()) throw std::invalid_argument("no estimates to match");
    double best = std::numeric_limits<double>::infinity();
    SquaredError out;
    for (const Estimate& e : estimates.items) {
        const double dt = (e.doa_rad - truth.doa_rad) / mcfg.doa_grid.step;
        const double dd = (e.toa_s - truth.toa_s) / mcfg.toa_grid.step;
        const double dist = dt * dt + dd * dd;
        if (dist < best) {
            best = dist;
            const double ddeg = (e.doa_rad - truth.doa_rad) * kRadToDeg;
            const double dns = (e.toa_s - truth.toa_s) * 1e9;
            out = {ddeg * ddeg, dns * dns};
        }
    }
    return out;
}

SquaredError trial_error(const EstimateSet& estimates, const PathSet& truth, const MusicConfig& mcfg,
                         const std::string& metric) {
    if (truth.empty()) throw std::invalid_argument("no true paths");
    if (metric == "los") return matched_error(estimates, truth.front(), mcfg);
    if (metric != "all_paths") throw std::invalid_argument("unknown error metric '" + metric + "'");
    SquaredError sum;
    for (const Path& p : truth) {
        const SquaredError e = matched_error(estimates, p, mcfg);
        sum.doa_deg2 += e.doa_deg2;
        sum.toa_ns2 += e.toa_ns2;
    }
    sum.doa_deg2 /= static_cast<double>(truth.size());
    sum.toa_ns2 /= static_cast<double>(truth.size());
    return sum;
}

const SweepRow& SweepResult::at(double snr_db, const std::string& method) const {
    for (const auto& r : rows)
        if (r.snr_db == snr_db && r.method == method) return r;
    throw std::out_of_range("no sweep row for " + method + " at " + format_snr(snr_db) + " dB");
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    os << "snr_db,method,mse_doa_deg2,se_doa,mse_toa_ns2,se_toa,trials,crlb_doa_deg2,crlb_toa_ns2\n";
    for (const auto& r : rows) {
        os << format_snr(r.snr_db) << ',' << r.method << ',' << format_number(r.mse_doa_deg2) << ','
           << format_number(r.se_doa) << ',' << format_number(r.mse_toa_ns2) << ',' << format_number(r.se_toa)
           << ',' << r.trials << ',' << format_number(r.crlb_doa_deg2) << ',' << format_number(r.crlb_toa_ns2)
           << '\n';
    }
    return os.str();
}

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepModels& models) {
    cfg.validate();
    check_methods(cfg.sweep.methods, models);
    const auto& methods = cfg.sweep.methods;
    const int trials = cfg.sweep.trials;
    const std::size_t n_methods = methods.size();

    SweepResult result;
    for (std::size_t si = 0; si < cfg.sweep.snr_db.size(); ++si) {
        const double snr = cfg.sweep.snr_db[si];
        const double noise_std = noise_std_from_snr_db(snr);
        // errors[trial][method]
        std::vector<std::vector<SquaredError>> errors(static_cast<std::size_t>(trials),
                                                      std::vector<SquaredError>(n_methods));
        std::vector<CrlbSample> bounds(static_cast<std::size_t>(trials));

        parallel_for(trials, cfg.sweep.threads, [&](int t) {
            std::mt19937_64 rng(derive_seed(cfg.sweep.seed, si, static_cast<std::uint64_t>(t)));
            Scenario scenario = gen_scenario(cfg.scenario, cfg.radio, rng);
            const Realization z = simulate_realization(std::move(scenario), cfg.radio, noise_std, cfg.noise_mode, rng);
            const VaaGeometry geometry = perturb_geometry(z.scenario.geometry, cfg.scenario.displacement_noise_m,
                                                          cfg.scenario.direction_noise_rad, rng);
            MusicConfig mcfg = cfg.music;
            mcfg.model_order = static_cast<int>(z.scenario.paths.size());
            const auto ti = static_cast<std::size_t>(t);
            for (std::size_t k = 0; k < n_methods; ++k) {
                const EstimateSet est = run_method(methods[k], z, geometry, cfg.radio, mcfg, models);
                errors[ti][k] = trial_error(est, z.scenario.paths, mcfg, cfg.sweep.error_metric);
            }
            bounds[ti] = crlb_sample(z.scenario, cfg.radio, noise_std, cfg.sweep.error_metric);
        });

        double crlb_doa = 0.0, crlb_toa = 0.0;
        int crlb_count = 0;
        for (const auto& b : bounds) {
            if (!b.valid) continue;
            crlb_doa += b.doa_deg2;
            crlb_toa += b.toa_ns2;
            ++crlb_count;
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = 0; k < n_methods; ++k) {
            SweepRow row;
            row.snr_db = snr;
            row.method = methods[k];
            row.trials = trials;
            for (const auto& per_trial : errors) {
                row.doa_errors.push_back(per_trial[k].doa_deg2);
                row.toa_errors.push_back(per_trial[k].toa_ns2);
            }
            const MeanSe doa = mse(row.doa_errors);
            const MeanSe toa = mse(row.toa_errors);
            row.mse_doa_deg2 = doa.mean;
            row.se_doa = doa.se;
            row.mse_toa_ns2 = toa.mean;
            row.se_toa = toa.se;
            row.crlb_doa_deg2 = crlb_count > 0 ? crlb_doa / crlb_count : nan;
            row.crlb_toa_ns2 = crlb_count > 0 ? crlb_toa / crlb_count : nan;
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::vector<CrlbPoint> crlb_curve(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<CrlbPoint> out;
    for (std::size_t si = 0; si < cfg.sweep.snr_db.size(); ++si) {
        CrlbPoint pt;
        pt.snr_db = cfg.sweep.snr_db[si];
        const double noise_std = noise_std_from_snr_db(pt.snr_db);
        for (int t = 0; t < cfg.sweep.trials; ++t) {
            // Same scenario stream as run_sweep, so the curves line up trial by trial.
            std::mt19937_64 rng(derive_seed(cfg.sweep.seed, si, static_cast<std::uint64_t>(t)));
            const Scenario s = gen_scenario(cfg.scenario, cfg.radio, rng);
            const CrlbSample b = crlb_sample(s, cfg.radio, noise_std, cfg.sweep.error_metric);
            if (!b.valid) continue;
            pt.doa_deg2 += b.doa_deg2;
            pt.toa_ns2 += b.toa_ns2;
            ++pt.realizations;
        }
        if (pt.realizations > 0) {
            pt.doa_deg2 /= pt.realizations;
            pt.toa_ns2 /= pt.realizations;
        } else {
            pt.doa_deg2 = pt.toa_ns2 = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(pt);
    }
    return out;
}

std::string crlb_csv(const std::vector<CrlbPoint>& points) {
    std::ostringstream os;
    os << "snr_db,crlb_doa_deg2,crlb_toa_ns2,realizations\n";
    for (const auto& p : points)
        os << format_snr(p.snr_db) << ',' << format_number(p.doa_deg2) << ',' << format_number(p.toa_ns2) << ','
           << p.realizations << '\n';
    return os.str();
}

std::string spectrum_csv(const Pseudospectrum& spectrum) {
    std::ostringstream os;
    os << "theta_deg,tau_ns,P\n";
    char buf[128];
    for (std::size_t i = 0; i < spectrum.doa_rad.size(); ++i) {
        for (std::size_t k = 0; k < spectrum.toa_s.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.9e\n", spectrum.doa_rad[i] * kRadToDeg,
                          spectrum.toa_s[k] * 1e9,
                          spectrum.power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
            os << buf;
        }
    }
    return os.str();
}

Pseudospectrum single_realization_spectrum(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    Scenario scenario = gen_scenario(cfg.scenario, cfg.radio, rng);
    const Realization z = simulate_realization(std::move(scenario), cfg.radio,
                                               noise_std_from_snr_db(cfg.scenario.snr_db), cfg.noise_mode, rng);
    MusicConfig mcfg = cfg.music;
    mcfg.model_order = static_cast<int>(z.scenario.paths.size());
    const CfrMatrix y = recover_one_way(z.two_way_sqrt, z.signs);
    return music_spectrum(smoothed_joint_covariance(y, mcfg.subband_length, mcfg.forward_backward),
                          z.scenario.geometry, cfg.radio, mcfg);
}

}  // namespace blevaa
