#include "cavat/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "cavat/checkpoint.hpp"
#include "text_io.hpp"

namespace cavat {

namespace {

// Stream ids for the per-seed random generators.
enum Stream : std::uint64_t { kInit = 1, kBatches = 2, kMethod = 3, kEval = 4 };

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return detail::format_double(v);
}

double parse_num(const std::string& file, std::size_t line, std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    if (!detail::parse_double(s, v)) throw ParseError(file, line, "bad number '" + std::string(s) + "'");
    return v;
}

std::vector<Sample> pick(const Dataset& ds, const std::vector<int>& ids) {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(ds.samples[id]);
    return out;
}

struct Accum {
    double sup = 0, lds = 0, cons = 0;
    int n = 0;
    void add(const LossBreakdown& b) {
        sup += b.sup;
        lds += b.lds;
        cons += b.cons;
        ++n;
    }
};

[[noreturn]] void abort_run(const TrainConfig& cfg, std::uint64_t seed, std::int64_t step, const LossBreakdown& b,
                            const std::string& tensor) {
    std::ostringstream d;
    d << "status = aborted\n"
      << "reason = non-finite loss or gradient\n"
      << "tensor = " << tensor << "\n"
      << "seed = " << seed << "\n"
      << "step = " << step << "\n"
      << "loss_total = " << num(b.total) << "\n"
      << "loss_sup = " << num(b.sup) << "\n"
      << "loss_lds = " << num(b.lds) << "\n"
      << "loss_cons = " << num(b.cons) << "\n"
      << "loss_other = " << num(b.other) << "\n";
    for (const auto& t : b.grad.tensors()) {
        double s = 0.0;
        for (double v : t.values) s += v * v;
        d << "grad_norm." << t.name << " = " << num(std::sqrt(s)) << "\n";
    }
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_atomically(cfg.out_dir / "diagnostic.txt", d.str());
    throw NumericalFailure(tensor, "training aborted at step " + std::to_string(step));
}

void check_step(const TrainConfig& cfg, std::uint64_t seed, std::int64_t step, const LossBreakdown& b) {
    if (!std::isfinite(b.total)) abort_run(cfg, seed, step, b, "loss");
    for (const auto& t : b.grad.tensors())
        for (double v : t.values)
            if (!std::isfinite(v)) abort_run(cfg, seed, step, b, t.name);
}

std::string unreproducible_note() {
    return "# epsilon, xi, power_iters, warmup_steps, total_steps and batch sizes are not given by the method\n"
           "# description; the values used here are configuration choices.\n";
}

}  // namespace

std::string CsvRow::to_csv() const {
    std::ostringstream o;
    o << step << ',' << method << ',' << seed << ',' << num(lambda) << ',' << num(gamma) << ',' << num(epsilon) << ','
      << m << ',' << l << ',' << k << ',' << num(dsc) << ',' << num(hd) << ',' << num(n_conn) << ',' << num(loss_sup)
      << ',' << num(loss_lds) << ',' << num(loss_cons) << ',' << num(lr) << ',' << num(wall_s);
    return o.str();
}

std::vector<CsvRow> RunRecord::final_rows() const {
    std::vector<CsvRow> out;
    for (const auto& row : rows) {
        if (!out.empty() && out.back().seed == row.seed) out.back() = row;
        else out.push_back(row);
    }
    return out;
}

SummaryStats summarize(const std::vector<CsvRow>& rows) {
    std::vector<double> d, h, n;
    for (const auto& r : rows) {
        d.push_back(r.dsc);
        if (!std::isnan(r.hd)) h.push_back(r.hd);
        n.push_back(r.n_conn);
    }
    return {mean_std(d), mean_std(h), mean_std(n)};
}

Dataset prepare_dataset(const TrainConfig& cfg) {
    Dataset ds;
    if (!cfg.data_dir.empty()) {
        ds = read_dataset(cfg.data_dir);
    } else {
        Rng gen(cfg.data_seed);
        ds = gen_shapes(cfg.data_n, cfg.shapes, gen);
    }
    // The config's ratio and split seed always decide the split; a manifest split is informational.
    Rng split_rng(cfg.split_seed);
    split_dataset(ds, cfg.labeled_ratio, cfg.val_fraction, split_rng);
    normalize_images(ds);
    return ds;
}

MetricReport evaluate_network(const Network& net, const NetworkParams& params, const std::vector<Sample>& samples,
                              const MetricConfig& metric_cfg, Rng& rng) {
    std::vector<DiscreteMask> preds, gts;
    preds.reserve(samples.size());
    gts.reserve(samples.size());
    for (const auto& s : samples) {
        preds.push_back(argmax(net.forward(s.image, params)));
        gts.push_back(s.mask);
    }
    return evaluate_masks(preds, gts, metric_cfg, rng);
}

RunRecord run_experiment(const TrainConfig& cfg) { return run_experiment(cfg, prepare_dataset(cfg)); }

RunRecord run_experiment(const TrainConfig& cfg, const Dataset& ds) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);

    const Network net(cfg.net);
    const auto constraint = make_constraint(cfg.constraint, cfg.connectivity);
    const MethodContext ctx{net, cfg.weights, *constraint, cfg.mc, cfg.adv};
    const auto labeled = pick(ds, ds.split.labeled);
    const auto unlabeled_samples = pick(ds, ds.split.unlabeled);
    const auto validation = pick(ds, ds.split.validation.empty() ? ds.split.labeled : ds.split.validation);
    if (labeled.empty()) throw ConfigError("dataset split has no labeled images");

    MetricConfig metric_cfg;
    metric_cfg.n_conn_draws = cfg.n_conn_draws;
    metric_cfg.adjacency = cfg.connectivity.adjacency;
    metric_cfg.foreground_label = cfg.connectivity.foreground_label;

    RunRecord record;
    record.config_hash = config_hash(cfg);
    record.csv_path = cfg.out_dir / "metrics.csv";

    for (const std::uint64_t seed : cfg.seeds) {
        Rng init_rng(mix_seed(seed, kInit));
        Rng batch_rng(mix_seed(seed, kBatches));
        Rng method_rng(mix_seed(seed, kMethod));
        NetworkParams params = net.init_params(init_rng);
        NetworkParams teacher = params;
        auto opt = OptimizerState::for_params(params, cfg.adam, cfg.schedule());
        const auto seed_start = std::chrono::steady_clock::now();
        Accum acc;

        std::vector<Sample> lab_batch(cfg.labeled_batch);
        std::vector<Image> unl_batch(unlabeled_samples.empty() ? 0 : cfg.unlabeled_batch);
        for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
            for (auto& s : lab_batch) s = labeled[batch_rng.uniform_index(labeled.size())];
            for (auto& x : unl_batch) x = unlabeled_samples[batch_rng.uniform_index(unlabeled_samples.size())].image;

            LossBreakdown loss;
            try {
                loss = method_loss(cfg.method, lab_batch, unl_batch, params,
                                   cfg.method.uses_teacher() ? &teacher : nullptr, ctx, method_rng);
            } catch (const NumericalFailure& e) {
                LossBreakdown partial;
                partial.total = std::numeric_limits<double>::quiet_NaN();
                abort_run(cfg, seed, step, partial, e.tensor());
            }
            check_step(cfg, seed, step, loss);
            acc.add(loss);
            optimizer_step(params, loss.grad, opt);
            if (cfg.method.uses_teacher()) ema_update(teacher, params, cfg.method.ema_decay);

            if (step % cfg.eval_every == 0 || step == cfg.total_steps) {
                Rng eval_rng(mix_seed(mix_seed(seed, kEval), static_cast<std::uint64_t>(step)));
                const auto report = evaluate_network(net, params, validation, metric_cfg, eval_rng);
                CsvRow row;
                row.step = step;
                row.method = to_string(cfg.method.id);
                row.seed = seed;
                row.lambda = cfg.weights.lambda;
                row.gamma = cfg.weights.gamma;
                row.epsilon = cfg.adv.epsilon;
                row.m = cfg.mc.samples;
                row.l = cfg.connectivity.seed_window;
                row.k = cfg.connectivity.violation_window;
                row.dsc = report.dsc;
                row.hd = report.hd;
                row.n_conn = report.n_conn;
                row.loss_sup = acc.sup / acc.n;
                row.loss_lds = acc.lds / acc.n;
                row.loss_cons = acc.cons / acc.n;
                row.lr = lr_at(step, opt.schedule);
                if (cfg.log_wall_time)
                    row.wall_s =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - seed_start).count();
                record.rows.push_back(row);
                acc = {};
            }
        }
        if (cfg.write_checkpoint) {
            const auto path = cfg.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".txt");
            save_checkpoint(path, {cfg.net, params});
            record.checkpoints.push_back(path);
        }
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    std::string csv = std::string(kCsvHeader) + "\n";
    for (const auto& r : record.rows) csv += r.to_csv() + "\n";
    detail::write_atomically(record.csv_path, csv);
    detail::write_atomically(cfg.out_dir / "config.txt",
                             "# config hash " + record.config_hash + "\n" + unreproducible_note() + config_to_text(cfg));

    const auto stats = summarize(record.final_rows());
    std::ostringstream s;
    s << "# config hash " << record.config_hash << "\n"
      << unreproducible_note() << "method = " << to_string(cfg.method.id) << "\n"
      << "seeds = " << cfg.seeds.size() << "\n"
      << "labeled = " << labeled.size() << "\n"
      << "unlabeled = " << unlabeled_samples.size() << "\n"
      << "validation = " << validation.size() << "\n"
      << "unlabeled_batch = " << cfg.unlabeled_batch << "\n"
      << "labeled_batch = " << cfg.labeled_batch << "\n"
      << "n_conn_draws = " << cfg.n_conn_draws << "\n"
      << "adjacency = " << static_cast<int>(cfg.connectivity.adjacency) << "\n"
      << "dsc_mean = " << num(stats.dsc.mean) << "\n"
      << "dsc_std = " << num(stats.dsc.std) << "\n"
      << "hd_mean = " << num(stats.hd.mean) << "\n"
      << "hd_std = " << num(stats.hd.std) << "\n"
      << "n_conn_mean = " << num(stats.n_conn.mean) << "\n"
      << "n_conn_std = " << num(stats.n_conn.std) << "\n"
      << "wall_s = " << num(record.wall_seconds) << "\n";
    detail::write_atomically(cfg.out_dir / "summary.txt", s.str());
    return record;
}

std::vector<std::string> sweep_parameters() { return {"gamma", "lambda", "epsilon", "m", "l", "k"}; }

std::vector<RunRecord> sweep(const TrainConfig& cfg, const std::string& param, const std::vector<std::string>& values) {
    const auto allowed = sweep_parameters();
    if (std::find(allowed.begin(), allowed.end(), param) == allowed.end())
        throw ConfigError("cannot sweep over '" + param + "'");
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const Dataset ds = prepare_dataset(cfg);
    std::vector<RunRecord> records;
    std::string table = "param,value,seed,dsc,hd,n_conn\n";
    for (const auto& value : values) {
        TrainConfig run_cfg = cfg;
        set_config_value(run_cfg, param, value);
        run_cfg.out_dir = cfg.out_dir / (param + "=" + value);
        records.push_back(run_experiment(run_cfg, ds));
        for (const auto& row : records.back().final_rows())
            table += param + "," + value + "," + std::to_string(row.seed) + "," + num(row.dsc) + "," + num(row.hd) +
                     "," + num(row.n_conn) + "\n";
    }
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_atomically(cfg.out_dir / "sweep.csv", table);
    return records;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    detail::LineReader in(path);
    if (detail::trim(in.require("CSV header")) != kCsvHeader) throw in.error("unexpected CSV header");
    std::vector<CsvRow> rows;
    std::string line;
    while (in.next(line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<std::string_view> f;
        std::string_view s(line);
        for (std::size_t pos; (pos = s.find(',')) != std::string_view::npos; s.remove_prefix(pos + 1))
            f.push_back(s.substr(0, pos));
        f.push_back(s);
        if (f.size() != 17) throw in.error("expected 17 columns");
        CsvRow r;
        const auto& file = in.file();
        const auto ln = in.line();
        if (!detail::parse_int(f[0], r.step) || !detail::parse_int(f[2], r.seed) || !detail::parse_int(f[6], r.m) ||
            !detail::parse_int(f[7], r.l) || !detail::parse_int(f[8], r.k))
            throw in.error("bad integer column");
        r.method = std::string(f[1]);
        r.lambda = parse_num(file, ln, f[3]);
        r.gamma = parse_num(file, ln, f[4]);
        r.epsilon = parse_num(file, ln, f[5]);
        r.dsc = parse_num(file, ln, f[9]);
        r.hd = parse_num(file, ln, f[10]);
        r.n_conn = parse_num(file, ln, f[11]);
        r.loss_sup = parse_num(file, ln, f[12]);
        r.loss_lds = parse_num(file, ln, f[13]);
        r.loss_cons = parse_num(file, ln, f[14]);
        r.lr = parse_num(file, ln, f[15]);
        r.wall_s = parse_num(file, ln, f[16]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace cavat
