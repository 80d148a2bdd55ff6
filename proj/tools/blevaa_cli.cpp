// blevaa: dataset generation, training and evaluation sweeps for VAA ranging.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "blevaa/config.hpp"
#include "blevaa/dataset.hpp"
#include "blevaa/features.hpp"
#include "blevaa/sweep.hpp"

using namespace blevaa;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

const std::vector<std::size_t>& split_by_name(const Dataset& d, const std::string& name) {
    if (name == "train") return d.split.train;
    if (name == "validation") return d.split.validation;
    if (name == "test") return d.split.test;
    throw std::invalid_argument("unknown split '" + name + "'");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual-antenna-array ranging toolkit"};
    app.require_subcommand(1);

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "Simulate a labelled dataset with a 60/20/20 split");
    std::size_t gen_count = 8000;
    std::uint64_t gen_seed = 1;
    std::string gen_out, gen_config;
    gen->add_option("--count", gen_count, "Number of records (>= 10)")->required();
    gen->add_option("--seed", gen_seed, "Master seed")->required();
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--config", gen_config, "Experiment config (radio and scenario sections are used)");

    // train
    auto* tr = app.add_subcommand("train", "Train the row or column sign predictor");
    std::string tr_role, tr_dataset, tr_out, tr_config;
    TrainConfig tcfg;
    tr->add_option("--role", tr_role, "row or col")->required()->check(CLI::IsMember({"row", "col"}));
    tr->add_option("--dataset", tr_dataset, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Output weight file")->required();
    tr->add_option("--config", tr_config, "Experiment config (train and model sections are used)");
    auto* lr_opt = tr->add_option("--lr", tcfg.learning_rate, "Learning rate");
    auto* batch_opt = tr->add_option("--batch", tcfg.batch_size, "Mini-batch size");
    auto* epochs_opt = tr->add_option("--epochs", tcfg.epochs, "Maximum epochs");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Monte-Carlo MSE sweep over SNR");
    std::string sw_config, sw_row, sw_col, sw_methods, sw_out;
    int sw_trials = 0, sw_threads = -1;
    sw->add_option("--config", sw_config, "Experiment config");
    sw->add_option("--row-model", sw_row, "Row predictor weights (needed for 'learned')");
    sw->add_option("--col-model", sw_col, "Column predictor weights (needed for 'learned')");
    sw->add_option("--methods", sw_methods, "Comma list of oracle,learned,twoway,continuity");
    sw->add_option("--trials", sw_trials, "Override trials per SNR");
    sw->add_option("--threads", sw_threads, "Worker threads (0 = all cores)");
    sw->add_option("--out", sw_out, "Output CSV (default stdout)");

    // crlb
    auto* cr = app.add_subcommand("crlb", "Mean Cramer-Rao bound per SNR");
    std::string cr_config, cr_out;
    cr->add_option("--config", cr_config, "Experiment config");
    cr->add_option("--out", cr_out, "Output CSV (default stdout)");

    // spectrum
    auto* sp = app.add_subcommand("spectrum", "Dump the pseudospectrum of one realization");
    std::uint64_t sp_seed = 1;
    std::string sp_config, sp_out;
    sp->add_option("--seed", sp_seed, "Realization seed")->required();
    sp->add_option("--config", sp_config, "Experiment config");
    sp->add_option("--out", sp_out, "Output CSV (default stdout)");

    // eval
    auto* ev = app.add_subcommand("eval", "Sign accuracy of trained predictors against the continuity baseline");
    std::string ev_dataset, ev_row, ev_col, ev_split = "test";
    double ev_snr = 0.0;
    std::uint64_t ev_seed = 1;
    ev->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    ev->add_option("--row-model", ev_row, "Row predictor weights")->required();
    ev->add_option("--col-model", ev_col, "Column predictor weights")->required();
    ev->add_option("--split", ev_split, "train, validation or test")->check(CLI::IsMember({"train", "validation", "test"}));
    auto* snr_opt = ev->add_option("--snr", ev_snr, "Re-simulate the split's scenarios at this SNR (dB)");
    ev->add_option("--seed", ev_seed, "Seed for re-simulation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const ExperimentConfig cfg = config_or_default(gen_config);
            const auto t0 = std::chrono::steady_clock::now();
            const Dataset d = generate_dataset(gen_count, gen_seed, cfg.scenario, cfg.radio, cfg.noise_mode);
            save_dataset(d, gen_out);
            std::fprintf(stderr, "wrote %zu records (%zu/%zu/%zu) to %s in %.1fs\n", d.records.size(),
                         d.split.train.size(), d.split.validation.size(), d.split.test.size(), gen_out.c_str(),
                         seconds_since(t0));
        } else if (tr->parsed()) {
            const ExperimentConfig cfg = config_or_default(tr_config);
            TrainConfig train_cfg = cfg.train;
            if (lr_opt->count()) train_cfg.learning_rate = tcfg.learning_rate;
            if (batch_opt->count()) train_cfg.batch_size = tcfg.batch_size;
            if (epochs_opt->count()) train_cfg.epochs = tcfg.epochs;

            const PredictorRole role = predictor_role_from_string(tr_role);
            const SliceAxis axis = role == PredictorRole::row ? SliceAxis::row : SliceAxis::column;
            const Dataset d = load_dataset(tr_dataset);
            const auto training = make_samples(d, d.split.train, axis);
            const auto validation = make_samples(d, d.split.validation, axis);
            const auto& widths = role == PredictorRole::row ? cfg.model.row_widths : cfg.model.col_widths;
            PredictorModel model =
                PredictorModel::create(role, feature_channels(axis), widths, train_cfg.seed, cfg.model.kernel);
            std::fprintf(stderr, "%s model: %zu parameters, %zu training / %zu validation slices\n", tr_role.c_str(),
                         model.parameter_count(), training.size(), validation.size());
            const auto t0 = std::chrono::steady_clock::now();
            const TrainResult result =
                train(std::move(model), training, validation, train_cfg, [&](int epoch, double tl, double vl, double acc) {
                    std::fprintf(stderr, "epoch %3d  train %.4f  val %.4f  acc %.4f  (%.0fs)\n", epoch + 1, tl, vl, acc,
                                 seconds_since(t0));
                });
            result.model.save(tr_out);
            std::fprintf(stderr, "best epoch %d, saved %s\n", result.history.best_epoch + 1, tr_out.c_str());
        } else if (sw->parsed()) {
            ExperimentConfig cfg = config_or_default(sw_config);
            if (!sw_methods.empty()) cfg.sweep.methods = split_list(sw_methods);
            if (sw_trials > 0) cfg.sweep.trials = sw_trials;
            if (sw_threads >= 0) cfg.sweep.threads = sw_threads;
            PredictorModel row, col;
            SweepModels models;
            if (!sw_row.empty()) {
                row = PredictorModel::load(sw_row);
                models.row = &row;
            }
            if (!sw_col.empty()) {
                col = PredictorModel::load(sw_col);
                models.col = &col;
            }
            write_text(sw_out, run_sweep(cfg, models).to_csv());
        } else if (cr->parsed()) {
            write_text(cr_out, crlb_csv(crlb_curve(config_or_default(cr_config))));
        } else if (sp->parsed()) {
            write_text(sp_out, spectrum_csv(single_realization_spectrum(config_or_default(sp_config), sp_seed)));
        } else if (ev->parsed()) {
            Dataset d = load_dataset(ev_dataset);
            std::vector<std::size_t> indices = split_by_name(d, ev_split);
            if (snr_opt->count()) {
                d = resynthesize(d, indices, ev_snr, ev_seed);
                indices = d.split.test;
            }
            const PredictorModel row = PredictorModel::load(ev_row);
            const PredictorModel col = PredictorModel::load(ev_col);
            const SignAccuracyReport learned = evaluate_learned(d, indices, row, col);
            const SignAccuracyReport cont = evaluate_continuity(d, indices);
            std::printf("method,records,row_accuracy,column_accuracy,sign_accuracy\n");
            std::printf("learned,%zu,%.6f,%.6f,%.6f\n", learned.records, learned.row_accuracy,
                        learned.column_accuracy, learned.sign_accuracy);
            std::printf("continuity,%zu,%.6f,%.6f,%.6f\n", cont.records, cont.row_accuracy, cont.column_accuracy,
                        cont.sign_accuracy);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
