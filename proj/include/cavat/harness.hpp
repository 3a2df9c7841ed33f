#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cavat/config.hpp"
#include "cavat/metrics.hpp"

namespace cavat {

inline constexpr const char* kCsvHeader =
    "step,method,seed,lambda,gamma,epsilon,m,l,k,dsc,hd,n_conn,loss_sup,loss_lds,loss_cons,lr,wall_s";

struct CsvRow {
    std::int64_t step = 0;
    std::string method;
    std::uint64_t seed = 0;
    double lambda = 0, gamma = 0, epsilon = 0;
    int m = 0, l = 0, k = 0;
    double dsc = 0, hd = 0, n_conn = 0;
    double loss_sup = 0, loss_lds = 0, loss_cons = 0;
    double lr = 0, wall_s = 0;

    std::string to_csv() const;
};

struct RunRecord {
    std::string config_hash;
    std::vector<CsvRow> rows;
    double wall_seconds = 0.0;
    std::vector<std::filesystem::path> checkpoints;
    std::filesystem::path csv_path;

    /// Last evaluation row for each seed, in seed order.
    std::vector<CsvRow> final_rows() const;
};

struct SummaryStats {
    MeanStd dsc, hd, n_conn;
};
SummaryStats summarize(const std::vector<CsvRow>& final_rows);

/// Loads the dataset named by the config (or generates it), splits it and
/// normalizes every image.
Dataset prepare_dataset(const TrainConfig& cfg);

/// Trains one model per seed, evaluating on the validation split every
/// eval_every steps. Writes metrics.csv, config.txt, summary.txt and one
/// checkpoint per seed under cfg.out_dir. A non-finite loss aborts the run,
/// writes diagnostic.txt and throws NumericalFailure.
RunRecord run_experiment(const TrainConfig& cfg);
RunRecord run_experiment(const TrainConfig& cfg, const Dataset& prepared);

/// Keys accepted by sweep().
std::vector<std::string> sweep_parameters();

/// One run per value of `param` (gamma, lambda, epsilon, m, l or k), each in
/// its own subdirectory. Writes sweep.csv with one row per value and seed.
std::vector<RunRecord> sweep(const TrainConfig& cfg, const std::string& param, const std::vector<std::string>& values);

/// Metrics of a trained network on a set of samples.
MetricReport evaluate_network(const Network& net, const NetworkParams& params, const std::vector<Sample>& samples,
                              const MetricConfig& metric_cfg, Rng& rng);

/// Parses a CSV written by run_experiment.
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

}  // namespace cavat
