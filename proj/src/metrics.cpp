#include "cavat/metrics.hpp"

#include <cmath>
#include <limits>

namespace cavat {

double dsc(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_shape(gt)) throw InvalidArgument("dsc: mask shapes differ");
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        a += pred[i] != 0;
        b += gt[i] != 0;
        both += pred[i] && gt[i];
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

namespace {

// Squared distance from every pixel to the nearest pixel of `target`:
// exact per-row distances, then a brute-force minimum down each column.
Grid<double> squared_distance_to(const BinaryMask& target, Spacing sp) {
    const int h = target.height();
    const int w = target.width();
    constexpr double inf = std::numeric_limits<double>::infinity();
    Grid<double> row_dist(h, w, inf);
    for (int r = 0; r < h; ++r) {
        int last = -1;
        for (int c = 0; c < w; ++c) {
            if (target(r, c)) last = c;
            if (last >= 0) row_dist(r, c) = c - last;
        }
        last = -1;
        for (int c = w - 1; c >= 0; --c) {
            if (target(r, c)) last = c;
            if (last >= 0) row_dist(r, c) = std::min(row_dist(r, c), static_cast<double>(last - c));
        }
    }
    Grid<double> out(h, w, inf);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) {
            double best = inf;
            for (int rr = 0; rr < h; ++rr) {
                const double g = row_dist(rr, c);
                if (g == inf) continue;
                const double dr = (r - rr) * sp.row;
                const double dc = g * sp.col;
                best = std::min(best, dr * dr + dc * dc);
            }
            out(r, c) = best;
        }
    }
    return out;
}

double directed(const BinaryMask& from, const BinaryMask& to, Spacing sp) {
    const auto dist = squared_distance_to(to, sp);
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i)
        if (from[i]) worst = std::max(worst, dist[i]);
    return std::sqrt(worst);
}

}  // namespace

double hausdorff(const BinaryMask& a, const BinaryMask& b, Spacing spacing) {
    if (!a.same_shape(b)) throw InvalidArgument("hausdorff: mask shapes differ");
    if (count_foreground(a) == 0 || count_foreground(b) == 0)
        throw UndefinedMetric("hausdorff distance is undefined for an empty mask");
    return std::max(directed(a, b, spacing), directed(b, a, spacing));
}

double n_conn(const BinaryMask& pred, Rng& rng, Adjacency adjacency) {
    std::vector<Coord> fg;
    for (int r = 0; r < pred.height(); ++r)
        for (int c = 0; c < pred.width(); ++c)
            if (pred(r, c)) fg.push_back({r, c});
    if (fg.empty()) return 0.0;
    const Coord seed = fg[rng.uniform_index(fg.size())];
    const auto comp = count_foreground(component_mask(pred, seed, adjacency));
    return 100.0 * static_cast<double>(fg.size() - comp) / static_cast<double>(fg.size());
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    out.count = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

ImageMetrics image_metrics(const DiscreteMask& pred, const DiscreteMask& gt, const MetricConfig& cfg, Rng& rng) {
    const auto p = foreground(pred, cfg.foreground_label);
    const auto g = foreground(gt, cfg.foreground_label);
    ImageMetrics m;
    m.dsc = dsc(p, g);
    if (count_foreground(p) > 0 && count_foreground(g) > 0) m.hd = hausdorff(p, g, cfg.spacing);
    std::vector<double> draws;
    for (int i = 0; i < std::max(1, cfg.n_conn_draws); ++i) draws.push_back(n_conn(p, rng, cfg.adjacency));
    m.n_conn = mean_std(draws);
    return m;
}

MetricReport evaluate_masks(std::span<const DiscreteMask> preds, std::span<const DiscreteMask> gts,
                            const MetricConfig& cfg, Rng& rng) {
    if (preds.size() != gts.size()) throw InvalidArgument("prediction and ground-truth counts differ");
    MetricReport report;
    double dsc_sum = 0.0, hd_sum = 0.0, nconn_sum = 0.0;
    std::size_t hd_count = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto m = image_metrics(preds[i], gts[i], cfg, rng);
        dsc_sum += m.dsc;
        nconn_sum += m.n_conn.mean;
        if (m.hd) {
            hd_sum += *m.hd;
            ++hd_count;
        } else {
            ++report.hd_missing;
        }
        report.per_image.push_back(m);
    }
    if (!preds.empty()) {
        report.dsc = dsc_sum / static_cast<double>(preds.size());
        report.n_conn = nconn_sum / static_cast<double>(preds.size());
    }
    report.hd = hd_count ? hd_sum / static_cast<double>(hd_count) : std::numeric_limits<double>::quiet_NaN();
    return report;
}

}  // namespace cavat
