// Command-line entry point: train, sweep, eval and gen-data.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>

#include "cavat/checkpoint.hpp"
#include "cavat/harness.hpp"

namespace {

using namespace cavat;

void apply_overrides(TrainConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
}

void print_summary(const RunRecord& rec) {
    const auto stats = summarize(rec.final_rows());
    std::cout << "config " << rec.config_hash << "  csv " << rec.csv_path.string() << "\n"
              << "DSC    " << stats.dsc.mean << " (" << stats.dsc.std << ")\n"
              << "HD     " << stats.hd.mean << " (" << stats.hd.std << ")\n"
              << "N-conn " << stats.n_conn.mean << " (" << stats.n_conn.std << ")\n"
              << "wall   " << rec.wall_seconds << " s\n";
}

std::string canonical_param(const std::string& p) {
    if (p == "γ") return "gamma";
    if (p == "λ") return "lambda";
    if (p == "ε") return "epsilon";
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aware virtual adversarial training lab"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Train one model per seed and log validation metrics");
    std::string train_config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<double> gamma, labeled_ratio;
    std::optional<std::string> out;
    std::vector<std::string> train_sets;
    train->add_option("--config", train_config, "Config file (key = value lines)")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Run a single seed");
    train->add_option("--method", method, "baseline, entropy_min, vat, mean_teacher, cavat, cavat_no_perturb, mt_cavat");
    train->add_option("--gamma", gamma, "Constraint weight");
    train->add_option("--labeled-ratio", labeled_ratio, "Fraction of training images that are labeled");
    train->add_option("--out", out, "Output directory");
    train->add_option("--set", train_sets, "Override any config key (key=value), repeatable");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "One run per value of a hyper-parameter");
    std::string sweep_config, param;
    std::vector<std::string> values, sweep_sets;
    std::optional<std::string> sweep_out;
    sweep_cmd->add_option("--config", sweep_config, "Config file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--param", param, "gamma, lambda, epsilon, m, l or k")->required();
    sweep_cmd->add_option("--values", values, "Values to try")->required();
    sweep_cmd->add_option("--out", sweep_out, "Output directory");
    sweep_cmd->add_option("--set", sweep_sets, "Override any config key (key=value), repeatable");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
    std::string ckpt_path, data_dir, split = "validation";
    int draws = 5, adjacency = 4;
    std::uint64_t eval_seed = 0;
    eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--split", split, "validation, labeled, unlabeled or all")
        ->check(CLI::IsMember({"validation", "labeled", "unlabeled", "all"}));
    eval->add_option("--draws", draws, "Seed draws per image for N-conn");
    eval->add_option("--adjacency", adjacency, "4 or 8")->check(CLI::IsMember({4, 8}));
    eval->add_option("--seed", eval_seed, "Seed for the N-conn draws");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic connected-shape dataset");
    // --h is the image height here, so help is long-form only.
    gen->set_help_flag("--help", "Print this help message and exit");
    int n = 500;
    ShapeParams shapes;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    double gen_ratio = 0.05, gen_val = 0.2;
    gen->add_option("--n", n, "Number of images")->check(CLI::PositiveNumber);
    gen->add_option("--h", shapes.height, "Image height");
    gen->add_option("--w", shapes.width, "Image width");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--noise", shapes.noise_sigma, "Gaussian noise std");
    gen->add_option("--clutter", shapes.clutter_spots, "Bright distractor spots per image");
    gen->add_option("--labeled-ratio", gen_ratio, "Labeled fraction written to the manifest");
    gen->add_option("--val-fraction", gen_val, "Validation fraction written to the manifest");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            TrainConfig cfg = load_config(train_config);
            if (seed) cfg.seeds = {*seed};
            if (method) set_config_value(cfg, "method", *method);
            if (gamma) cfg.weights.gamma = *gamma;
            if (labeled_ratio) cfg.labeled_ratio = *labeled_ratio;
            if (out) cfg.out_dir = *out;
            apply_overrides(cfg, train_sets);
            print_summary(run_experiment(cfg));
        } else if (*sweep_cmd) {
            TrainConfig cfg = load_config(sweep_config);
            if (sweep_out) cfg.out_dir = *sweep_out;
            apply_overrides(cfg, sweep_sets);
            const auto records = sweep(cfg, canonical_param(param), values);
            for (std::size_t i = 0; i < records.size(); ++i) {
                std::cout << "== " << canonical_param(param) << " = " << values[i] << "\n";
                print_summary(records[i]);
            }
        } else if (*eval) {
            const auto ckpt = load_checkpoint(ckpt_path);
            Dataset ds = read_dataset(data_dir);
            normalize_images(ds);
            std::vector<int> ids;
            if (split == "validation") ids = ds.split.validation;
            else if (split == "labeled") ids = ds.split.labeled;
            else if (split == "unlabeled") ids = ds.split.unlabeled;
            if (split == "all" || (ids.empty() && split == "validation")) {
                ids.clear();
                for (std::size_t i = 0; i < ds.samples.size(); ++i) ids.push_back(static_cast<int>(i));
            }
            std::vector<Sample> samples;
            for (int id : ids) samples.push_back(ds.samples[id]);
            MetricConfig mcfg;
            mcfg.n_conn_draws = draws;
            mcfg.adjacency = adjacency_from_int(adjacency);
            Rng rng(eval_seed);
            const auto report = evaluate_network(Network(ckpt.config), ckpt.params, samples, mcfg, rng);
            std::cout << "images " << samples.size() << "\n"
                      << "DSC    " << report.dsc << "\n"
                      << "HD     " << report.hd << " (missing " << report.hd_missing << ")\n"
                      << "N-conn " << report.n_conn << "\n";
        } else if (*gen) {
            Rng rng(gen_seed);
            Dataset ds = gen_shapes(n, shapes, rng);
            Rng split_rng(mix_seed(gen_seed, 99));
            split_dataset(ds, gen_ratio, gen_val, split_rng);
            write_dataset(gen_out, ds);
            std::cout << "wrote " << ds.samples.size() << " images to " << gen_out << "\n";
        }
    } catch (const cavat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
