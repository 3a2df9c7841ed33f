#include "cavat/config.hpp"

#include <cstdio>
#include <functional>
#include <sstream>

#include "text_io.hpp"

namespace cavat {

namespace {

struct Field {
    const char* key;
    std::function<void(TrainConfig&, const std::string&)> set;
    std::function<std::string(const TrainConfig&)> get;
};

[[noreturn]] void bad(const std::string& key, const std::string& value) {
    throw ConfigError("bad value '" + value + "' for '" + key + "'");
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out{};
    if (!detail::parse_int(detail::trim(v), out)) bad(key, v);
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    if (!detail::parse_double(detail::trim(v), out)) bad(key, v);
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    const auto t = detail::trim(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad(key, v);
}

// Lists accept commas and/or whitespace as separators.
std::vector<std::string_view> list_items(const std::string& v) {
    std::vector<std::string_view> out;
    std::string_view s(v);
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ',' || s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ',' && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string real(double v) { return detail::format_double(v); }
std::string boolean(bool b) { return b ? "true" : "false"; }

#define CAVAT_REAL(name, member) \
    Field { name, [](TrainConfig& c, const std::string& v) { c.member = to_real(name, v); }, \
            [](const TrainConfig& c) { return real(c.member); } }
#define CAVAT_INT(name, member) \
    Field { name, [](TrainConfig& c, const std::string& v) { c.member = to_int<decltype(c.member)>(name, v); }, \
            [](const TrainConfig& c) { return std::to_string(c.member); } }
#define CAVAT_BOOL(name, member) \
    Field { name, [](TrainConfig& c, const std::string& v) { c.member = to_bool(name, v); }, \
            [](const TrainConfig& c) { return boolean(c.member); } }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"method", [](TrainConfig& c, const std::string& v) { c.method.id = parse_method(std::string(detail::trim(v))); },
         [](const TrainConfig& c) { return to_string(c.method.id); }},
        CAVAT_REAL("lambda", weights.lambda),
        CAVAT_REAL("gamma", weights.gamma),
        CAVAT_REAL("epsilon", adv.epsilon),
        {"xi",
         [](TrainConfig& c, const std::string& v) {
             if (detail::trim(v) == "auto") c.adv.xi.reset();
             else c.adv.xi = to_real("xi", v);
         },
         [](const TrainConfig& c) { return c.adv.xi ? real(*c.adv.xi) : std::string("auto"); }},
        CAVAT_INT("power_iters", adv.power_iters),
        CAVAT_INT("m", mc.samples),
        CAVAT_BOOL("shared_seed_stream", mc.shared_seed_stream),
        {"reward_baseline",
         [](TrainConfig& c, const std::string& v) {
             if (detail::trim(v) == "none") c.mc.baseline.reset();
             else c.mc.baseline = to_real("reward_baseline", v);
         },
         [](const TrainConfig& c) { return c.mc.baseline ? real(*c.mc.baseline) : std::string("none"); }},
        CAVAT_INT("l", connectivity.seed_window),
        CAVAT_INT("k", connectivity.violation_window),
        {"adjacency",
         [](TrainConfig& c, const std::string& v) {
             c.connectivity.adjacency = adjacency_from_int(to_int<int>("adjacency", v));
         },
         [](const TrainConfig& c) { return std::to_string(static_cast<int>(c.connectivity.adjacency)); }},
        {"constraint", [](TrainConfig& c, const std::string& v) { c.constraint = std::string(detail::trim(v)); },
         [](const TrainConfig& c) { return c.constraint; }},
        CAVAT_REAL("ema_decay", method.ema_decay),
        CAVAT_REAL("mt_noise", method.consistency_noise),
        {"hidden",
         [](TrainConfig& c, const std::string& v) {
             c.net.hidden.clear();
             for (auto item : list_items(v)) c.net.hidden.push_back(to_int<int>("hidden", std::string(item)));
         },
         [](const TrainConfig& c) { return join(c.net.hidden); }},
        CAVAT_INT("kernel", net.kernel),
        CAVAT_REAL("lr", lr),
        CAVAT_REAL("lr_floor", lr_floor),
        CAVAT_INT("warmup_steps", warmup_steps),
        CAVAT_INT("total_steps", total_steps),
        CAVAT_BOOL("rectified_adam", adam.rectified),
        CAVAT_REAL("adam_beta1", adam.beta1),
        CAVAT_REAL("adam_beta2", adam.beta2),
        CAVAT_REAL("adam_eps", adam.eps),
        CAVAT_REAL("weight_decay", adam.weight_decay),
        CAVAT_INT("labeled_batch", labeled_batch),
        CAVAT_INT("unlabeled_batch", unlabeled_batch),
        {"data_dir", [](TrainConfig& c, const std::string& v) { c.data_dir = std::string(detail::trim(v)); },
         [](const TrainConfig& c) { return c.data_dir.string(); }},
        CAVAT_INT("data_n", data_n),
        CAVAT_INT("data_height", shapes.height),
        CAVAT_INT("data_width", shapes.width),
        CAVAT_INT("data_seed", data_seed),
        CAVAT_REAL("data_noise", shapes.noise_sigma),
        CAVAT_REAL("data_offset", shapes.foreground_offset),
        CAVAT_REAL("data_gradient", shapes.gradient_amplitude),
        CAVAT_INT("data_clutter", shapes.clutter_spots),
        CAVAT_REAL("data_clutter_offset", shapes.clutter_offset),
        CAVAT_REAL("data_min_radius", shapes.min_radius),
        CAVAT_REAL("data_max_radius", shapes.max_radius),
        CAVAT_INT("data_min_discs", shapes.min_discs),
        CAVAT_INT("data_max_discs", shapes.max_discs),
        CAVAT_REAL("labeled_ratio", labeled_ratio),
        CAVAT_REAL("val_fraction", val_fraction),
        CAVAT_INT("split_seed", split_seed),
        {"seeds",
         [](TrainConfig& c, const std::string& v) {
             c.seeds.clear();
             for (auto item : list_items(v)) c.seeds.push_back(to_int<std::uint64_t>("seeds", std::string(item)));
         },
         [](const TrainConfig& c) { return join(c.seeds); }},
        {"out_dir", [](TrainConfig& c, const std::string& v) { c.out_dir = std::string(detail::trim(v)); },
         [](const TrainConfig& c) { return c.out_dir.string(); }},
        CAVAT_INT("eval_every", eval_every),
        CAVAT_INT("n_conn_draws", n_conn_draws),
        CAVAT_BOOL("log_wall_time", log_wall_time),
        CAVAT_BOOL("write_checkpoint", write_checkpoint),
    };
    return table;
}

#undef CAVAT_REAL
#undef CAVAT_INT
#undef CAVAT_BOOL

const Field& find_field(const std::string& key) {
    for (const auto& f : fields())
        if (key == f.key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.key);
    return out;
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
    const auto& field = find_field(key);
    try {
        field.set(cfg, value);
    } catch (const InvalidArgument& e) {
        throw ConfigError("bad value '" + value + "' for '" + key + "': " + e.what());
    }
}

std::string get_config_value(const TrainConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

void TrainConfig::validate() const {
    method.validate();
    weights.validate();
    mc.validate();
    adv.validate();
    connectivity.validate();
    shapes.validate();
    Network{net};
    (void)make_constraint(constraint, connectivity);
    if (total_steps < 1 || warmup_steps < 0 || warmup_steps > total_steps)
        throw ConfigError("need total_steps >= 1 and 0 <= warmup_steps <= total_steps");
    if (!(lr > 0.0) || lr_floor < 0.0) throw ConfigError("lr must be > 0 and lr_floor >= 0");
    if (labeled_batch < 1 || unlabeled_batch < 0) throw ConfigError("batch sizes must be positive");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (!data_dir.empty() && !std::filesystem::exists(data_dir / "manifest.txt"))
        throw ConfigError("dataset not found: " + data_dir.string());
}

TrainConfig load_config(const std::filesystem::path& path) {
    detail::LineReader in(path);
    TrainConfig cfg;
    std::string line;
    while (in.next(line)) {
        auto t = detail::trim(line);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = detail::trim(t.substr(0, hash));
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw in.error("expected 'key = value'");
        try {
            set_config_value(cfg, std::string(detail::trim(t.substr(0, eq))), std::string(detail::trim(t.substr(eq + 1))));
        } catch (const Error& e) {
            throw in.error(e.what());
        }
    }
    return cfg;
}

std::string config_to_text(const TrainConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
    return out;
}

std::string config_hash(const TrainConfig& cfg) {
    // The output location does not change the experiment.
    TrainConfig c = cfg;
    c.out_dir.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_text(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cavat
