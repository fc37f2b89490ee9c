#include "semigda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "semigda/common.hpp"

namespace semigda {

namespace {

constexpr double kFar = 1e20;  // effectively-infinite placeholder for the distance transform

void check_binary_pair(const Tensor& pred, const Tensor& gt, const char* where) {
    check_same_shape(pred, gt, where);
    if (pred.ndim() != 2) throw ShapeError(std::string(where) + ": expected (H,W) masks");
    for (const Tensor* t : {&pred, &gt})
        for (int64_t i = 0; i < t->numel(); ++i) {
            const double v = t->data()[i];
            if (v != 0.0 && v != 1.0)
                throw std::domain_error(std::string(where) + ": mask is not binary");
        }
}

int64_t count_fg(const Tensor& m) {
    int64_t n = 0;
    for (int64_t i = 0; i < m.numel(); ++i) n += (m.data()[i] == 1.0);
    return n;
}

int64_t count_inter(const Tensor& a, const Tensor& b) {
    int64_t n = 0;
    for (int64_t i = 0; i < a.numel(); ++i) n += (a.data()[i] == 1.0 && b.data()[i] == 1.0);
    return n;
}

// One pass of the exact squared Euclidean distance transform (lower envelope
// of parabolas). d[q] = min_p (q-p)^2 + f[p]; values stay exact integers.
void dt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kFar;
    z[1] = kFar;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[static_cast<std::size_t>(k)];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (k > 0 && s <= z[static_cast<std::size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = kFar;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(k) + 1] < double(q)) ++k;
        const int p = v[static_cast<std::size_t>(k)];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

// Exact squared distance to the nearest site (site = 1 in the input map).
Tensor edt_squared(const Tensor& sites) {
    const int h = static_cast<int>(sites.dim(0));
    const int w = static_cast<int>(sites.dim(1));
    Tensor grid({h, w});
    for (int64_t i = 0; i < sites.numel(); ++i)
        grid.data()[i] = sites.data()[i] == 1.0 ? 0.0 : kFar;

    const int nmax = std::max(h, w);
    std::vector<int> v(static_cast<std::size_t>(nmax));
    std::vector<double> z(static_cast<std::size_t>(nmax) + 1);
    std::vector<double> f(static_cast<std::size_t>(nmax)), d(static_cast<std::size_t>(nmax));

    for (int x = 0; x < w; ++x) {  // columns
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid.data()[y * w + x];
        dt1d(f.data(), d.data(), h, v, z);
        for (int y = 0; y < h; ++y) grid.data()[y * w + x] = d[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {  // rows
        dt1d(grid.data() + static_cast<int64_t>(y) * w, d.data(), w, v, z);
        std::copy(d.begin(), d.begin() + w, grid.data() + static_cast<int64_t>(y) * w);
    }
    return grid;
}

}  // namespace

Tensor boundary_map(const Tensor& mask) {
    const int64_t h = mask.dim(0), w = mask.dim(1);
    Tensor out({h, w});
    const double* m = mask.data();
    double* q = out.data();
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            if (m[y * w + x] != 1.0) {
                q[y * w + x] = 0.0;
                continue;
            }
            const bool interior = y > 0 && m[(y - 1) * w + x] == 1.0 &&
                                  y + 1 < h && m[(y + 1) * w + x] == 1.0 &&
                                  x > 0 && m[y * w + x - 1] == 1.0 &&
                                  x + 1 < w && m[y * w + x + 1] == 1.0;
            q[y * w + x] = interior ? 0.0 : 1.0;
        }
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("percentile of empty set");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double dice_score(const Tensor& pred, const Tensor& gt) {
    check_binary_pair(pred, gt, "dice_score");
    const int64_t a = count_fg(pred), b = count_fg(gt);
    if (a == 0 && b == 0) return 100.0;
    const int64_t i = count_inter(pred, gt);
    return 100.0 * 2.0 * double(i) / double(a + b);
}

double iou_score(const Tensor& pred, const Tensor& gt) {
    check_binary_pair(pred, gt, "iou_score");
    const int64_t a = count_fg(pred), b = count_fg(gt);
    if (a == 0 && b == 0) return 100.0;
    const int64_t i = count_inter(pred, gt);
    return 100.0 * double(i) / double(a + b - i);
}

double hd95(const Tensor& pred, const Tensor& gt) {
    check_binary_pair(pred, gt, "hd95");
    const int64_t h = pred.dim(0), w = pred.dim(1);
    const int64_t np = count_fg(pred), ng = count_fg(gt);
    if (np == 0 && ng == 0) return 0.0;
    if (np == 0 || ng == 0) return std::sqrt(double(h * h + w * w));

    const Tensor bp = boundary_map(pred);
    const Tensor bg = boundary_map(gt);
    const Tensor dist_to_gt = edt_squared(bg);
    const Tensor dist_to_pred = edt_squared(bp);

    std::vector<double> pool;
    for (int64_t i = 0; i < bp.numel(); ++i)
        if (bp.data()[i] == 1.0) pool.push_back(std::sqrt(dist_to_gt.data()[i]));
    for (int64_t i = 0; i < bg.numel(); ++i)
        if (bg.data()[i] == 1.0) pool.push_back(std::sqrt(dist_to_pred.data()[i]));
    return percentile(std::move(pool), 95.0);
}

MetricsReport aggregate_metrics(std::vector<SampleMetrics> per_sample) {
    if (per_sample.empty()) throw ConfigError("metrics aggregate: no samples");
    MetricsReport report;
    for (const auto& s : per_sample) {
        report.dice_pct += s.dice;
        report.iou_pct += s.iou;
        report.hd95 += s.hd95;
    }
    const double n = static_cast<double>(per_sample.size());
    report.dice_pct /= n;
    report.iou_pct /= n;
    report.hd95 /= n;
    report.per_sample = std::move(per_sample);
    return report;
}

namespace {
std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
}  // namespace

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "id,dice,iou,hd95\n";
    for (const auto& s : report.per_sample)
        out << s.id << ',' << fmt(s.dice) << ',' << fmt(s.iou) << ',' << fmt(s.hd95) << '\n';
    out << "mean," << fmt(report.dice_pct) << ',' << fmt(report.iou_pct) << ','
        << fmt(report.hd95) << '\n';
}

void write_metrics_json(const std::string& path, const MetricsReport& report) {
    nlohmann::json j;
    j["dice_pct"] = report.dice_pct;
    j["iou_pct"] = report.iou_pct;
    j["hd95"] = report.hd95;
    j["num_samples"] = report.per_sample.size();
    auto& arr = j["per_sample"] = nlohmann::json::array();
    for (const auto& s : report.per_sample)
        arr.push_back({{"id", s.id}, {"dice", s.dice}, {"iou", s.iou}, {"hd95", s.hd95}});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace semigda
