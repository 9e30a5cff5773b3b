#include "plgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace plgan {

namespace {

constexpr double kInf = 1e20;

void check_binary(const Tensor& m, const char* what) {
    if (m.ndim() != 2) throw ShapeError(std::string(what) + ": expected 2D mask, got " + m.shape_str());
    for (std::int64_t i = 0; i < m.numel(); ++i)
        if (m[i] != 0.0f && m[i] != 1.0f)
            throw DataError(std::string(what) + ": mask must be binary {0,1}");
}

// 1D squared-distance transform, lower envelope of parabolas.
void dt1d(const std::vector<double>& f, std::vector<double>& d, int n,
          std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = +kInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = +kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

Tensor squared_euclidean_dt(const Tensor& mask) {
    if (mask.ndim() != 2) throw ShapeError("squared_euclidean_dt: expected 2D mask");
    const int h = mask.rows(), w = mask.cols();
    std::vector<double> grid(static_cast<std::size_t>(h) * w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            grid[static_cast<std::size_t>(i) * w + j] = mask.at(i, j) != 0.0f ? 0.0 : kInf;

    const int n = std::max(h, w);
    std::vector<double> f(n), d(n), z(static_cast<std::size_t>(n) + 1);
    std::vector<int> v(n);

    // columns
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) f[i] = grid[static_cast<std::size_t>(i) * w + j];
        dt1d(f, d, h, v, z);
        for (int i = 0; i < h; ++i) grid[static_cast<std::size_t>(i) * w + j] = d[i];
    }
    // rows
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) f[j] = grid[static_cast<std::size_t>(i) * w + j];
        dt1d(f, d, w, v, z);
        for (int j = 0; j < w; ++j) grid[static_cast<std::size_t>(i) * w + j] = d[j];
    }

    Tensor out({h, w});
    for (std::int64_t i = 0; i < out.numel(); ++i)
        out[i] = static_cast<float>(grid[static_cast<std::size_t>(i)]);
    return out;
}

Tensor chebyshev_dt(const Tensor& mask) {
    if (mask.ndim() != 2) throw ShapeError("chebyshev_dt: expected 2D mask");
    const int h = mask.rows(), w = mask.cols();
    Tensor d({h, w});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            d.at(i, j) = mask.at(i, j) != 0.0f ? 0.0f : static_cast<float>(kInf);

    auto relax = [&](int i, int j, int pi, int pj) {
        if (pi < 0 || pi >= h || pj < 0 || pj >= w) return;
        d.at(i, j) = std::min(d.at(i, j), d.at(pi, pj) + 1.0f);
    };
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            relax(i, j, i - 1, j - 1);
            relax(i, j, i - 1, j);
            relax(i, j, i - 1, j + 1);
            relax(i, j, i, j - 1);
        }
    for (int i = h - 1; i >= 0; --i)
        for (int j = w - 1; j >= 0; --j) {
            relax(i, j, i + 1, j + 1);
            relax(i, j, i + 1, j);
            relax(i, j, i + 1, j - 1);
            relax(i, j, i, j + 1);
        }
    return d;
}

namespace {

struct EightMetrics {
    double precision, recall, iou, f1, f_beta, correctness, completeness, quality;
};

double safe_ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f_score(double p, double r, double beta) {
    const double b2 = beta * beta;
    const double den = b2 * p + r;
    return den == 0.0 ? 0.0 : (1.0 + b2) * p * r / den;
}

double quality_of(double corr, double comp) {
    const double den = comp - comp * corr + corr;
    return den == 0.0 ? 0.0 : comp * corr / den;
}

EightMetrics metrics_from_counts(const ConfusionCounts& c, const RelaxedCounts& r, double beta) {
    EightMetrics m{};
    const bool both_empty = (c.tp + c.fn == 0) && (c.tp + c.fp == 0);
    if (both_empty) {
        m.precision = m.recall = m.iou = m.f1 = m.f_beta = 1.0;
    } else {
        m.precision = safe_ratio(c.tp, c.tp + c.fp);
        m.recall = safe_ratio(c.tp, c.tp + c.fn);
        m.iou = safe_ratio(c.tp, c.tp + c.fp + c.fn);
        m.f1 = f_score(m.precision, m.recall, 1.0);
        m.f_beta = f_score(m.precision, m.recall, beta);
    }
    const bool both_empty_r = r.total_pred == 0 && r.total_gt == 0;
    if (both_empty_r) {
        m.correctness = m.completeness = m.quality = 1.0;
    } else {
        m.correctness = safe_ratio(r.matched_pred, r.total_pred);
        m.completeness = safe_ratio(r.matched_gt, r.total_gt);
        m.quality = quality_of(m.correctness, m.completeness);
    }
    return m;
}

} // namespace

PixelMetrics pixel_metrics(const Tensor& pred, const Tensor& gt, double beta) {
    check_binary(pred, "pixel_metrics(pred)");
    check_binary(gt, "pixel_metrics(gt)");
    require_same_shape(pred, gt, "pixel_metrics");

    ConfusionCounts c;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        const bool p = pred[i] != 0.0f, g = gt[i] != 0.0f;
        if (p && g) ++c.tp;
        else if (p && !g) ++c.fp;
        else if (!p && g) ++c.fn;
        else ++c.tn;
    }
    const EightMetrics m = metrics_from_counts(c, RelaxedCounts{}, beta);
    return PixelMetrics{m.precision, m.recall, m.iou, m.f1, m.f_beta, c};
}

RelaxedMetrics relaxed_metrics(const Tensor& pred, const Tensor& gt, double d,
                               PixelDistance distance) {
    check_binary(pred, "relaxed_metrics(pred)");
    check_binary(gt, "relaxed_metrics(gt)");
    require_same_shape(pred, gt, "relaxed_metrics");
    if (d < 0) throw DataError("relaxed_metrics: tolerance must be >= 0");

    RelaxedCounts rc;
    rc.tolerance_px = d;

    // within(x) compares against the distance transform of the other mask;
    // squared-distance comparison keeps the Euclidean test exact on the grid.
    const bool euclid = distance == PixelDistance::euclidean;
    const double limit = euclid ? d * d : d;
    const Tensor dt_gt = euclid ? squared_euclidean_dt(gt) : chebyshev_dt(gt);
    const Tensor dt_pred = euclid ? squared_euclidean_dt(pred) : chebyshev_dt(pred);

    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        if (pred[i] != 0.0f) {
            ++rc.total_pred;
            if (static_cast<double>(dt_gt[i]) <= limit) ++rc.matched_pred;
        }
        if (gt[i] != 0.0f) {
            ++rc.total_gt;
            if (static_cast<double>(dt_pred[i]) <= limit) ++rc.matched_gt;
        }
    }
    const EightMetrics m = metrics_from_counts(ConfusionCounts{}, rc, 1.0);
    return RelaxedMetrics{m.correctness, m.completeness, m.quality, rc};
}

MetricsReport evaluate_dataset(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                               const EvalConfig& cfg, const std::vector<std::string>& ids) {
    if (preds.empty()) throw DataError("evaluate_dataset: empty input lists");
    if (preds.size() != gts.size())
        throw DataError("evaluate_dataset: pred/gt list length mismatch (" +
                        std::to_string(preds.size()) + " vs " + std::to_string(gts.size()) + ")");

    MetricsReport rep;
    rep.config = cfg;
    rep.relaxed.tolerance_px = cfg.tolerance_px;

    for (std::size_t k = 0; k < preds.size(); ++k) {
        const PixelMetrics pm = pixel_metrics(preds[k], gts[k], cfg.beta);
        const RelaxedMetrics rm = relaxed_metrics(preds[k], gts[k], cfg.tolerance_px, cfg.distance);
        ImageMetrics im;
        im.id = k < ids.size() ? ids[k] : std::to_string(k);
        im.precision = pm.precision; im.recall = pm.recall; im.iou = pm.iou;
        im.f1 = pm.f1; im.f_beta = pm.f_beta;
        im.correctness = rm.correctness; im.completeness = rm.completeness; im.quality = rm.quality;
        im.counts = pm.counts;
        im.relaxed = rm.counts;
        rep.counts += pm.counts;
        rep.relaxed += rm.counts;
        rep.per_image.push_back(std::move(im));
    }

    if (cfg.aggregation == Aggregation::micro) {
        const EightMetrics m = metrics_from_counts(rep.counts, rep.relaxed, cfg.beta);
        rep.precision = m.precision; rep.recall = m.recall; rep.iou = m.iou;
        rep.f1 = m.f1; rep.f_beta = m.f_beta;
        rep.correctness = m.correctness; rep.completeness = m.completeness; rep.quality = m.quality;
    } else {
        const double n = static_cast<double>(rep.per_image.size());
        for (const ImageMetrics& im : rep.per_image) {
            rep.precision += im.precision / n;
            rep.recall += im.recall / n;
            rep.iou += im.iou / n;
            rep.f1 += im.f1 / n;
            rep.f_beta += im.f_beta / n;
            rep.correctness += im.correctness / n;
            rep.completeness += im.completeness / n;
            rep.quality += im.quality / n;
        }
    }
    return rep;
}

std::string to_string(Aggregation a) { return a == Aggregation::micro ? "micro" : "macro"; }
std::string to_string(PixelDistance d) {
    return d == PixelDistance::euclidean ? "euclidean" : "chebyshev";
}

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "micro") return Aggregation::micro;
    if (name == "macro") return Aggregation::macro;
    throw ConfigError("unknown aggregation: " + name);
}

PixelDistance pixel_distance_from_string(const std::string& name) {
    if (name == "euclidean") return PixelDistance::euclidean;
    if (name == "chebyshev") return PixelDistance::chebyshev;
    throw ConfigError("unknown distance: " + name);
}

namespace {

nlohmann::json counts_json(const ConfusionCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

nlohmann::json relaxed_json(const RelaxedCounts& r) {
    return {{"matched_pred", r.matched_pred},
            {"total_pred", r.total_pred},
            {"matched_gt", r.matched_gt},
            {"total_gt", r.total_gt},
            {"tolerance_px", r.tolerance_px}};
}

template <typename T>
nlohmann::json eight_json(const T& m) {
    return {{"precision", m.precision}, {"recall", m.recall},   {"iou", m.iou},
            {"f1", m.f1},               {"f_beta", m.f_beta},   {"correctness", m.correctness},
            {"completeness", m.completeness}, {"quality", m.quality}};
}

} // namespace

std::string metrics_report_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["config"] = {{"tolerance_px", rep.config.tolerance_px},
                   {"beta", rep.config.beta},
                   {"aggregation", to_string(rep.config.aggregation)},
                   {"distance", to_string(rep.config.distance)}};
    j["metrics"] = eight_json(rep);
    j["counts"] = counts_json(rep.counts);
    j["relaxed"] = relaxed_json(rep.relaxed);
    nlohmann::json per = nlohmann::json::array();
    for (const ImageMetrics& im : rep.per_image) {
        nlohmann::json ji;
        ji["id"] = im.id;
        ji["metrics"] = eight_json(im);
        ji["counts"] = counts_json(im.counts);
        ji["relaxed"] = relaxed_json(im.relaxed);
        per.push_back(std::move(ji));
    }
    j["per_image"] = std::move(per);
    return j.dump(2);
}

std::string metrics_report_csv(const MetricsReport& rep) {
    std::ostringstream os;
    os.precision(9);
    os << "precision,recall,iou,f1,f_beta,correctness,completeness,quality,"
          "tp,fp,fn,tn,matched_pred,total_pred,matched_gt,total_gt\n";
    os << rep.precision << ',' << rep.recall << ',' << rep.iou << ',' << rep.f1 << ','
       << rep.f_beta << ',' << rep.correctness << ',' << rep.completeness << ',' << rep.quality
       << ',' << rep.counts.tp << ',' << rep.counts.fp << ',' << rep.counts.fn << ','
       << rep.counts.tn << ',' << rep.relaxed.matched_pred << ',' << rep.relaxed.total_pred << ','
       << rep.relaxed.matched_gt << ',' << rep.relaxed.total_gt << '\n';
    return os.str();
}

} // namespace plgan
