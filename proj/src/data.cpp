#include "cavat/data.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "text_io.hpp"

namespace cavat {

void ShapeParams::validate() const {
    if (height < 16 || width < 16) throw InvalidArgument("shape images must be at least 16x16");
    if (!(min_area > 0.0 && min_area <= max_area && max_area <= 1.0))
        throw InvalidArgument("area band must satisfy 0 < min <= max <= 1");
    if (min_discs < 1 || max_discs < min_discs) throw InvalidArgument("disc count range is invalid");
    if (!(min_radius > 0.0 && max_radius >= min_radius)) throw InvalidArgument("disc radius range is invalid");
    if (noise_sigma < 0.0 || clutter_spots < 0 || max_retries < 1) throw InvalidArgument("invalid generator params");
}

namespace {

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void paint_disc(BinaryMask& mask, double cy, double cx, double radius) {
    const double r2 = radius * radius;
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            const double dy = r - cy;
            const double dx = c - cx;
            if (dy * dy + dx * dx <= r2) mask(r, c) = 1;
        }
}

BinaryMask random_blob(const ShapeParams& p, Rng& rng) {
    BinaryMask mask(p.height, p.width);
    const int discs = p.min_discs + static_cast<int>(rng.uniform_index(p.max_discs - p.min_discs + 1));
    const double margin = p.max_radius;
    paint_disc(mask, uniform_in(rng, margin, p.height - 1 - margin), uniform_in(rng, margin, p.width - 1 - margin),
               uniform_in(rng, p.min_radius, p.max_radius));
    for (int d = 1; d < discs; ++d) {
        // Centre the next disc on an existing foreground pixel so the union stays connected.
        std::vector<Coord> fg;
        for (int r = 0; r < mask.height(); ++r)
            for (int c = 0; c < mask.width(); ++c)
                if (mask(r, c)) fg.push_back({r, c});
        const Coord centre = fg[rng.uniform_index(fg.size())];
        paint_disc(mask, centre.row, centre.col, uniform_in(rng, p.min_radius, p.max_radius));
    }
    return mask;
}

Sample render(const BinaryMask& blob, const ShapeParams& p, Rng& rng) {
    Sample s{Image(p.height, p.width), DiscreteMask(p.height, p.width)};
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double gy = std::sin(angle);
    const double gx = std::cos(angle);
    const double extent = std::abs(gy) * (p.height - 1) + std::abs(gx) * (p.width - 1);
    BinaryMask clutter(p.height, p.width);
    for (int k = 0; k < p.clutter_spots; ++k) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const double cy = uniform_in(rng, 0.0, p.height - 1.0);
            const double cx = uniform_in(rng, 0.0, p.width - 1.0);
            BinaryMask spot(p.height, p.width);
            paint_disc(spot, cy, cx, p.clutter_radius);
            // Keep spots clear of the blob so the mask stays a single region.
            const auto near = box_sum(blob, 5);
            bool clear = true;
            for (std::size_t i = 0; i < spot.size() && clear; ++i) clear = !(spot[i] && near[i] > 0);
            if (!clear) continue;
            for (std::size_t i = 0; i < spot.size(); ++i) clutter[i] |= spot[i];
            break;
        }
    }
    for (int r = 0; r < p.height; ++r)
        for (int c = 0; c < p.width; ++c) {
            const double ramp = extent > 0 ? (gy * r + gx * c) / extent : 0.0;
            double v = p.gradient_amplitude * ramp + p.noise_sigma * rng.normal();
            if (blob(r, c)) v += p.foreground_offset;
            else if (clutter(r, c)) v += p.clutter_offset;
            s.image(r, c) = v;
            s.mask(r, c) = blob(r, c) ? 1 : 0;
        }
    return s;
}

}  // namespace

Dataset gen_shapes(int n, const ShapeParams& params, Rng& rng) {
    if (n < 1) throw InvalidArgument("gen_shapes needs n >= 1");
    params.validate();
    Dataset ds;
    ds.params = params;
    ds.seed = rng.seed();
    const std::uint64_t base = rng.next_u64();
    const double pixels = static_cast<double>(params.height) * params.width;
    for (int i = 0; i < n; ++i) {
        Rng local(mix_seed(base, static_cast<std::uint64_t>(i)));
        bool ok = false;
        for (int attempt = 0; attempt < params.max_retries && !ok; ++attempt) {
            const BinaryMask blob = random_blob(params, local);
            const double area = static_cast<double>(count_foreground(blob)) / pixels;
            if (area < params.min_area || area > params.max_area || !is_connected(blob)) continue;
            ds.samples.push_back(render(blob, params, local));
            ok = true;
        }
        if (!ok) {
            throw GenerationFailure("could not generate a connected shape in the area band for image " +
                                    std::to_string(i) + " after " + std::to_string(params.max_retries) + " tries");
        }
    }
    return ds;
}

void split_dataset(Dataset& ds, double labeled_ratio, double val_fraction, Rng& rng) {
    if (!(labeled_ratio > 0.0 && labeled_ratio <= 1.0)) throw InvalidArgument("labeled ratio must be in (0, 1]");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidArgument("validation fraction must be in [0, 1)");
    const int n = static_cast<int>(ds.samples.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

    const int n_val = static_cast<int>(std::lround(val_fraction * n));
    const int n_train = n - n_val;
    if (n_train < 1) throw InvalidArgument("split leaves no training images");
    int n_lab = static_cast<int>(std::lround(labeled_ratio * n_train));
    if (n_lab < 1) {
        std::clog << "warning: labeled ratio " << labeled_ratio << " gives no labeled images; using 1\n";
        n_lab = 1;
    }
    n_lab = std::min(n_lab, n_train);

    SplitManifest m;
    m.validation.assign(order.begin(), order.begin() + n_val);
    m.labeled.assign(order.begin() + n_val, order.begin() + n_val + n_lab);
    m.unlabeled.assign(order.begin() + n_val + n_lab, order.end());
    std::sort(m.validation.begin(), m.validation.end());
    std::sort(m.labeled.begin(), m.labeled.end());
    std::sort(m.unlabeled.begin(), m.unlabeled.end());
    ds.split = std::move(m);
}

Image normalize_image(const Image& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x.values()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x.values()) var += (v - mean) * (v - mean);
    var /= n;
    Image out = x;
    const double sd = std::sqrt(var);
    for (double& v : out.values()) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return out;
}

void normalize_images(Dataset& ds) {
    for (auto& s : ds.samples) s.image = normalize_image(s.image);
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string sample_name(int i) {
    std::ostringstream os;
    os << std::setw(5) << std::setfill('0') << i << ".txt";
    return os.str();
}

template <class T, class Parse>
Grid<T> read_grid(const std::filesystem::path& path, Parse parse) {
    detail::LineReader in(path);
    int h = 0, w = 0, ch = 0;
    {
        const std::string text = in.require("'H W C' header");
        const auto tok = detail::split_ws(text);
        if (tok.size() != 3 || !detail::parse_int(tok[0], h) || !detail::parse_int(tok[1], w) ||
            !detail::parse_int(tok[2], ch))
            throw in.error("expected header 'H W C'");
        if (h <= 0 || w <= 0) throw in.error("grid dimensions must be positive");
        if (ch != 1) throw in.error("only single-channel grids are supported");
    }
    std::vector<T> values;
    values.reserve(static_cast<std::size_t>(h) * w);
    for (int r = 0; r < h; ++r) {
        const std::string line = in.require("grid row");
        const auto tok = detail::split_ws(line);
        if (static_cast<int>(tok.size()) != w)
            throw in.error("expected " + std::to_string(w) + " values, found " + std::to_string(tok.size()));
        for (const auto& t : tok) {
            T v{};
            if (!parse(t, v)) throw in.error("bad value '" + std::string(t) + "'");
            values.push_back(v);
        }
    }
    std::string extra;
    while (in.next(extra))
        if (!detail::trim(extra).empty()) throw in.error("trailing content after grid");
    return Grid<T>(h, w, std::move(values));
}

template <class T, class Format>
void write_grid(const std::filesystem::path& path, const Grid<T>& g, Format fmt) {
    std::string out = std::to_string(g.height()) + " " + std::to_string(g.width()) + " 1\n";
    for (int r = 0; r < g.height(); ++r) {
        for (int c = 0; c < g.width(); ++c) {
            if (c) out += ' ';
            out += fmt(g(r, c));
        }
        out += '\n';
    }
    detail::write_atomically(path, out);
}

std::string join_ids(const std::vector<int>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " " : "") + std::to_string(ids[i]);
    return s;
}

}  // namespace

Image read_image_file(const std::filesystem::path& path) {
    return read_grid<double>(path, [](std::string_view t, double& v) { return detail::parse_double(t, v); });
}

DiscreteMask read_mask_file(const std::filesystem::path& path) {
    return read_grid<std::int32_t>(path, [](std::string_view t, std::int32_t& v) { return detail::parse_int(t, v); });
}

void write_image_file(const std::filesystem::path& path, const Image& image) {
    write_grid(path, image, [](double v) { return detail::format_double(v); });
}

void write_mask_file(const std::filesystem::path& path, const DiscreteMask& mask) {
    write_grid(path, mask, [](std::int32_t v) { return std::to_string(v); });
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");
    const auto& p = ds.params;
    std::ostringstream m;
    m << "format = cavat-dataset\n"
      << "version = 1\n"
      << "count = " << ds.samples.size() << "\n"
      << "height = " << (ds.samples.empty() ? p.height : ds.samples[0].image.height()) << "\n"
      << "width = " << (ds.samples.empty() ? p.width : ds.samples[0].image.width()) << "\n"
      << "classes = " << ds.classes << "\n"
      << "seed = " << ds.seed << "\n"
      << "gen.min_area = " << detail::format_double(p.min_area) << "\n"
      << "gen.max_area = " << detail::format_double(p.max_area) << "\n"
      << "gen.min_discs = " << p.min_discs << "\n"
      << "gen.max_discs = " << p.max_discs << "\n"
      << "gen.min_radius = " << detail::format_double(p.min_radius) << "\n"
      << "gen.max_radius = " << detail::format_double(p.max_radius) << "\n"
      << "gen.foreground_offset = " << detail::format_double(p.foreground_offset) << "\n"
      << "gen.noise_sigma = " << detail::format_double(p.noise_sigma) << "\n"
      << "gen.gradient_amplitude = " << detail::format_double(p.gradient_amplitude) << "\n"
      << "gen.clutter_spots = " << p.clutter_spots << "\n"
      << "gen.clutter_offset = " << detail::format_double(p.clutter_offset) << "\n"
      << "gen.clutter_radius = " << detail::format_double(p.clutter_radius) << "\n"
      << "labeled = " << join_ids(ds.split.labeled) << "\n"
      << "unlabeled = " << join_ids(ds.split.unlabeled) << "\n"
      << "validation = " << join_ids(ds.split.validation) << "\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        write_image_file(dir / "images" / sample_name(static_cast<int>(i)), ds.samples[i].image);
        write_mask_file(dir / "masks" / sample_name(static_cast<int>(i)), ds.samples[i].mask);
    }
    detail::write_atomically(dir / "manifest.txt", m.str());
}

namespace {

struct ManifestEntry {
    std::string value;
    std::size_t line;
};

}  // namespace

Dataset read_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.txt";
    detail::LineReader in(manifest_path);
    std::map<std::string, ManifestEntry> kv;
    std::string line;
    while (in.next(line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw in.error("expected 'key = value'");
        const std::string key(detail::trim(t.substr(0, eq)));
        if (key.empty()) throw in.error("empty key");
        if (kv.count(key)) throw in.error("duplicate key '" + key + "'");
        kv[key] = {std::string(detail::trim(t.substr(eq + 1))), in.line()};
    }
    const auto file = manifest_path.string();
    auto get = [&](const std::string& key) -> const ManifestEntry& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(file, 0, "missing key '" + key + "'");
        return it->second;
    };
    auto get_int = [&](const std::string& key, auto& out) {
        const auto& e = get(key);
        if (!detail::parse_int(e.value, out)) throw ParseError(file, e.line, "bad integer for '" + key + "'");
    };
    auto get_real = [&](const std::string& key, double& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        if (!detail::parse_double(it->second.value, out))
            throw ParseError(file, it->second.line, "bad number for '" + key + "'");
    };
    auto get_ids = [&](const std::string& key, std::vector<int>& out, int count) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        for (const auto& tok : detail::split_ws(it->second.value)) {
            int id = 0;
            if (!detail::parse_int(tok, id) || id < 0 || id >= count)
                throw ParseError(file, it->second.line, "bad sample id in '" + key + "'");
            out.push_back(id);
        }
    };

    if (get("format").value != "cavat-dataset") throw ParseError(file, get("format").line, "unknown format");
    int version = 0;
    get_int("version", version);
    if (version != 1) throw ParseError(file, get("version").line, "unsupported dataset version");

    Dataset ds;
    int count = 0, h = 0, w = 0;
    get_int("count", count);
    get_int("height", h);
    get_int("width", w);
    get_int("classes", ds.classes);
    if (count < 0 || h <= 0 || w <= 0 || ds.classes < 2) throw ParseError(file, 0, "invalid dataset dimensions");
    if (kv.count("seed")) get_int("seed", ds.seed);
    ds.params.height = h;
    ds.params.width = w;
    if (kv.count("gen.min_discs")) get_int("gen.min_discs", ds.params.min_discs);
    if (kv.count("gen.max_discs")) get_int("gen.max_discs", ds.params.max_discs);
    if (kv.count("gen.clutter_spots")) get_int("gen.clutter_spots", ds.params.clutter_spots);
    get_real("gen.min_area", ds.params.min_area);
    get_real("gen.max_area", ds.params.max_area);
    get_real("gen.min_radius", ds.params.min_radius);
    get_real("gen.max_radius", ds.params.max_radius);
    get_real("gen.foreground_offset", ds.params.foreground_offset);
    get_real("gen.noise_sigma", ds.params.noise_sigma);
    get_real("gen.gradient_amplitude", ds.params.gradient_amplitude);
    get_real("gen.clutter_offset", ds.params.clutter_offset);
    get_real("gen.clutter_radius", ds.params.clutter_radius);
    get_ids("labeled", ds.split.labeled, count);
    get_ids("unlabeled", ds.split.unlabeled, count);
    get_ids("validation", ds.split.validation, count);

    ds.samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        Sample s{read_image_file(dir / "images" / sample_name(i)), read_mask_file(dir / "masks" / sample_name(i))};
        if (s.image.height() != h || s.image.width() != w || !s.mask.same_shape(s.image))
            throw ParseError((dir / "images" / sample_name(i)).string(), 1, "grid shape differs from manifest");
        for (auto v : s.mask.values())
            if (v < 0 || v >= ds.classes)
                throw ParseError((dir / "masks" / sample_name(i)).string(), 0, "label out of range");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace cavat
