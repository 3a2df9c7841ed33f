// Thin numpy-facing wrapper over the C++ core. Masks are 2-D integer arrays,
// probability maps are (H, W, C) float arrays.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cavat/checkpoint.hpp"
#include "cavat/config.hpp"
#include "cavat/constraints.hpp"
#include "cavat/data.hpp"
#include "cavat/harness.hpp"
#include "cavat/losses.hpp"
#include "cavat/metrics.hpp"
#include "cavat/net.hpp"

namespace py = pybind11;
using namespace cavat;

namespace {

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <class T, class In>
Grid<T> to_grid(const Array<In>& a) {
    if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<T> v(a.data(), a.data() + a.size());
    return Grid<T>(h, w, std::move(v));
}

template <class T>
py::array_t<T> from_grid(const Grid<T>& g) {
    py::array_t<T> out({g.height(), g.width()});
    std::copy(g.values().begin(), g.values().end(), out.mutable_data());
    return out;
}

BinaryMask to_binary(const Array<std::int64_t>& a, int foreground_label = 1) {
    return foreground(to_grid<std::int32_t>(a), foreground_label);
}

ProbMap to_probs(const Array<double>& a) {
    if (a.ndim() != 3) throw InvalidArgument("expected an (H, W, C) array");
    ProbMap p(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), p.values().begin());
    p.validate();
    return p;
}

template <class M>
py::array_t<double> from_probs(const M& p) {
    py::array_t<double> out({p.height(), p.width(), p.classes()});
    std::copy(p.values().begin(), p.values().end(), out.mutable_data());
    return out;
}

ConnectivityConfig conn_cfg(int l, int k, int adjacency) {
    ConnectivityConfig c;
    c.seed_window = l;
    c.violation_window = k;
    c.adjacency = adjacency_from_int(adjacency);
    c.validate();
    return c;
}

py::dict row_dict(const CsvRow& r) {
    py::dict d;
    d["step"] = r.step;
    d["method"] = r.method;
    d["seed"] = r.seed;
    d["lambda"] = r.lambda;
    d["gamma"] = r.gamma;
    d["epsilon"] = r.epsilon;
    d["m"] = r.m;
    d["l"] = r.l;
    d["k"] = r.k;
    d["dsc"] = r.dsc;
    d["hd"] = r.hd;
    d["n_conn"] = r.n_conn;
    d["loss_sup"] = r.loss_sup;
    d["loss_lds"] = r.loss_lds;
    d["loss_cons"] = r.loss_cons;
    d["lr"] = r.lr;
    d["wall_s"] = r.wall_s;
    return d;
}

py::dict run_dict(const RunRecord& rec) {
    py::list rows;
    for (const auto& r : rec.rows) rows.append(row_dict(r));
    py::dict d;
    d["config_hash"] = rec.config_hash;
    d["rows"] = rows;
    d["csv_path"] = rec.csv_path;
    d["checkpoints"] = rec.checkpoints;
    d["wall_seconds"] = rec.wall_seconds;
    return d;
}

py::dict dataset_dict(const Dataset& ds) {
    const auto n = static_cast<py::ssize_t>(ds.samples.size());
    const int h = n ? ds.samples[0].image.height() : 0;
    const int w = n ? ds.samples[0].image.width() : 0;
    py::array_t<double> images({n, static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
    py::array_t<std::int32_t> masks({n, static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w)});
    auto* ip = images.mutable_data();
    auto* mp = masks.mutable_data();
    for (const auto& s : ds.samples) {
        ip = std::copy(s.image.values().begin(), s.image.values().end(), ip);
        mp = std::copy(s.mask.values().begin(), s.mask.values().end(), mp);
    }
    py::dict d;
    d["images"] = images;
    d["masks"] = masks;
    d["classes"] = ds.classes;
    d["seed"] = ds.seed;
    d["labeled"] = ds.split.labeled;
    d["unlabeled"] = ds.split.unlabeled;
    d["validation"] = ds.split.validation;
    return d;
}

struct PyNetwork {
    Network net;
    NetworkParams params;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Constraint-aware virtual adversarial training core";

    // Base first: pybind11 tries translators newest-first.
    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<InvalidSeed>(m, "InvalidSeed", base.ptr());
    py::register_exception<InvalidDistribution>(m, "InvalidDistribution", base.ptr());
    py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<GenerationFailure>(m, "GenerationFailure", base.ptr());
    py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    m.attr("CSV_HEADER") = kCsvHeader;
    m.attr("CHECKPOINT_MAGIC") = kCheckpointMagic;

    // grid
    m.def("box_sum", [](const Array<double>& a, int window) {
        return from_grid(box_sum(to_grid<double>(a), window));
    }, py::arg("grid"), py::arg("window"));
    m.def("flood_fill", [](const Array<std::int64_t>& mask, std::pair<int, int> seed, int adjacency) {
        std::vector<std::pair<int, int>> out;
        for (auto c : flood_fill(to_binary(mask), Coord{seed.first, seed.second}, adjacency_from_int(adjacency)))
            out.emplace_back(c.row, c.col);
        return out;
    }, py::arg("mask"), py::arg("seed"), py::arg("adjacency") = 4);
    m.def("is_connected", [](const Array<std::int64_t>& mask, int adjacency) {
        return is_connected(to_binary(mask), adjacency_from_int(adjacency));
    }, py::arg("mask"), py::arg("adjacency") = 4);
    m.def("sample_mask", [](const Array<double>& probs, std::uint64_t seed) {
        Rng rng(seed);
        return from_grid(sample_mask(to_probs(probs), rng));
    }, py::arg("probs"), py::arg("seed"));

    // constraints
    m.def("select_seed", [](const Array<std::int64_t>& mask, int l, std::uint64_t seed) -> py::object {
        Rng rng(seed);
        auto s = select_seed(to_binary(mask), conn_cfg(l, 3, 4), rng);
        if (!s) return py::none();
        return py::make_tuple(s->row, s->col);
    }, py::arg("mask"), py::arg("l") = 5, py::arg("seed") = 0);
    m.def("connectivity_reward", [](const Array<std::int64_t>& mask, int l, int k, int adjacency,
                                    std::uint64_t seed) {
        Rng rng(seed);
        return from_grid(connectivity_reward(to_binary(mask), conn_cfg(l, k, adjacency), rng));
    }, py::arg("mask"), py::arg("l") = 5, py::arg("k") = 3, py::arg("adjacency") = 4, py::arg("seed") = 0);
    m.def("connectivity_reward_at", [](const Array<std::int64_t>& mask, std::pair<int, int> seed, int k,
                                       int adjacency) {
        return from_grid(connectivity_reward_at(to_binary(mask), Coord{seed.first, seed.second},
                                                conn_cfg(1, k, adjacency)));
    }, py::arg("mask"), py::arg("seed"), py::arg("k") = 3, py::arg("adjacency") = 4);

    // losses
    m.def("cross_entropy", [](const Array<double>& p, const Array<std::int64_t>& y) {
        const auto probs = to_probs(p);
        const auto mask = to_grid<std::int32_t>(y);
        return py::make_tuple(cross_entropy(probs, mask), from_probs(cross_entropy_grad(probs, mask)));
    }, py::arg("probs"), py::arg("labels"));
    m.def("kl_lds", [](const Array<double>& clean, const Array<double>& adv) {
        const auto c = to_probs(clean);
        const auto a = to_probs(adv);
        return py::make_tuple(kl_lds(c, a), from_probs(kl_lds_grad(c, a)));
    }, py::arg("clean"), py::arg("adv"));
    m.def("entropy_min", [](const Array<double>& p) {
        const auto probs = to_probs(p);
        return py::make_tuple(entropy_min(probs), from_probs(entropy_min_grad(probs)));
    }, py::arg("probs"));
    m.def("reinforce_connectivity", [](const Array<double>& p, int samples, int l, int k, int adjacency,
                                       std::optional<double> baseline, std::uint64_t seed) {
        MonteCarloConfig mc;
        mc.samples = samples;
        mc.baseline = baseline;
        mc.validate();
        const ConnectivityConstraint constraint(conn_cfg(l, k, adjacency));
        Rng rng(seed);
        auto r = reinforce_constraint(to_probs(p), constraint, mc, rng);
        return py::make_tuple(r.value, from_probs(r.grad), r.mean_reward);
    }, py::arg("probs"), py::arg("samples") = 10, py::arg("l") = 5, py::arg("k") = 3, py::arg("adjacency") = 4,
       py::arg("baseline") = py::none(), py::arg("seed") = 0);

    // metrics
    m.def("dsc", [](const Array<std::int64_t>& pred, const Array<std::int64_t>& gt) {
        return dsc(to_binary(pred), to_binary(gt));
    }, py::arg("pred"), py::arg("gt"));
    m.def("hausdorff", [](const Array<std::int64_t>& a, const Array<std::int64_t>& b, double row, double col) {
        return hausdorff(to_binary(a), to_binary(b), Spacing{row, col});
    }, py::arg("a"), py::arg("b"), py::arg("row_spacing") = 1.0, py::arg("col_spacing") = 1.0);
    m.def("n_conn", [](const Array<std::int64_t>& pred, std::uint64_t seed, int adjacency) {
        Rng rng(seed);
        return n_conn(to_binary(pred), rng, adjacency_from_int(adjacency));
    }, py::arg("pred"), py::arg("seed") = 0, py::arg("adjacency") = 4);

    // data
    m.def("gen_shapes", [](int n, int h, int w, std::uint64_t seed, int clutter) {
        ShapeParams sp;
        sp.height = h;
        sp.width = w;
        sp.clutter_spots = clutter;
        Rng rng(seed);
        return dataset_dict(gen_shapes(n, sp, rng));
    }, py::arg("n"), py::arg("h") = 32, py::arg("w") = 32, py::arg("seed") = 1, py::arg("clutter") = 0);
    m.def("read_dataset", [](const std::filesystem::path& dir) { return dataset_dict(read_dataset(dir)); },
          py::arg("dir"));

    // network
    py::class_<PyNetwork>(m, "Network")
        .def(py::init([](std::vector<int> hidden, int classes, std::uint64_t seed) {
                 Network net(NetConfig{std::move(hidden), classes, 3});
                 Rng rng(seed);
                 auto params = net.init_params(rng);
                 return PyNetwork{std::move(net), std::move(params)};
             }),
             py::arg("hidden") = std::vector<int>{8, 16}, py::arg("classes") = 2, py::arg("seed") = 0)
        .def_static("load", [](const std::filesystem::path& path) {
            auto ck = load_checkpoint(path);
            return PyNetwork{Network(ck.config), std::move(ck.params)};
        }, py::arg("path"))
        .def("save", [](const PyNetwork& n, const std::filesystem::path& path) {
            save_checkpoint(path, Checkpoint{n.net.config(), n.params});
        }, py::arg("path"))
        .def("forward", [](const PyNetwork& n, const Array<double>& image) {
            return from_probs(n.net.forward(to_grid<double>(image), n.params));
        }, py::arg("image"))
        .def("predict", [](const PyNetwork& n, const Array<double>& image) {
            return from_grid(argmax(n.net.forward(to_grid<double>(image), n.params)));
        }, py::arg("image"))
        .def_property_readonly("hidden", [](const PyNetwork& n) { return n.net.config().hidden; })
        .def_property_readonly("classes", [](const PyNetwork& n) { return n.net.config().classes; })
        .def_property_readonly("parameter_count", [](const PyNetwork& n) { return n.params.parameter_count(); });

    // config and harness
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_static("load", &load_config, py::arg("path"))
        .def("set", &set_config_value, py::arg("key"), py::arg("value"))
        .def("get", &get_config_value, py::arg("key"))
        .def("validate", &TrainConfig::validate)
        .def("to_text", &config_to_text)
        .def("hash", &config_hash)
        .def_static("keys", &config_keys);

    m.def("run_experiment", [](const TrainConfig& cfg) {
        RunRecord rec;
        {
            py::gil_scoped_release release;
            rec = run_experiment(cfg);
        }
        return run_dict(rec);
    }, py::arg("config"));
    m.def("sweep", [](const TrainConfig& cfg, const std::string& param, const std::vector<std::string>& values) {
        std::vector<RunRecord> recs;
        {
            py::gil_scoped_release release;
            recs = sweep(cfg, param, values);
        }
        py::list out;
        for (const auto& r : recs) out.append(run_dict(r));
        return out;
    }, py::arg("config"), py::arg("param"), py::arg("values"));
    m.def("read_csv", [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& r : read_csv(path)) out.append(row_dict(r));
        return out;
    }, py::arg("path"));
}
