#include "hazekit/metrics.h"

#include <cmath>

#include "hazekit/util.h"

namespace hazekit::metrics {

double mse(const Tensor& a, const Tensor& b) {
    if (!(a.shape == b.shape)) throw_shape("mse shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    if (a.numel() == 0) throw_shape("mse of empty tensor");
    return kernels::sse_f64(a.data(), b.data(), a.v.size()) / static_cast<double>(a.numel());
}

double psnr_from_mse(double mse) {
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr_db(const Tensor& a, const Tensor& b) { return psnr_from_mse(mse(a, b)); }

Tensor gaussian_window(int k, double sigma) {
    if (k < 1 || k % 2 == 0) throw_config("gaussian window size must be odd and positive");
    if (sigma <= 0.0) throw_config("gaussian sigma must be > 0");
    Tensor w(Shape{1, 1, k, k});
    const int half = k / 2;
    double total = 0.0;
    std::vector<double> raw(static_cast<size_t>(k) * k);
    for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) {
            const double dy = y - half, dx = x - half;
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            raw[static_cast<size_t>(y) * k + x] = g;
            total += g;
        }
    for (size_t i = 0; i < raw.size(); ++i) w.v[i] = static_cast<float>(raw[i] / total);
    return w;
}

int build_ssim(Graph& g, int x, int y, const SsimConfig& cfg) {
    const Shape xs = g.val(x).shape;
    const Shape ys = g.val(y).shape;
    if (!(xs == ys)) throw_shape("ssim shape mismatch " + xs.str() + " vs " + ys.str());
    if (xs.h < cfg.window || xs.w < cfg.window)
        throw_shape("ssim needs images at least " + std::to_string(cfg.window) + " px on each side");

    // fold channels into the batch so one (1,1,k,k) window covers them all
    const Shape flat{xs.n * xs.c, 1, xs.h, xs.w};
    const int xr = g.reshape(x, flat);
    const int yr = g.reshape(y, flat);
    const int win = g.leaf(gaussian_window(cfg.window, cfg.sigma));
    const int zb = g.leaf(Tensor(Shape{1, 1, 1, 1}));

    const int mu_x = g.conv2d(xr, win, zb);
    const int mu_y = g.conv2d(yr, win, zb);
    const int m_xx = g.conv2d(g.mul(xr, xr), win, zb);
    const int m_yy = g.conv2d(g.mul(yr, yr), win, zb);
    const int m_xy = g.conv2d(g.mul(xr, yr), win, zb);

    const int mu_xx = g.mul(mu_x, mu_x);
    const int mu_yy = g.mul(mu_y, mu_y);
    const int mu_xy = g.mul(mu_x, mu_y);
    const int var_x = g.sub(m_xx, mu_xx);
    const int var_y = g.sub(m_yy, mu_yy);
    const int cov = g.sub(m_xy, mu_xy);

    const int num = g.mul(g.add_scalar(g.scale(mu_xy, 2.0f), cfg.c1),
                          g.add_scalar(g.scale(cov, 2.0f), cfg.c2));
    const int den = g.mul(g.add_scalar(g.add(mu_xx, mu_yy), cfg.c1),
                          g.add_scalar(g.add(var_x, var_y), cfg.c2));
    return g.mean(g.div(num, den));
}

double ssim(const Tensor& a, const Tensor& b, const SsimConfig& cfg) {
    Graph g;
    const int x = g.leaf(a);
    const int y = g.leaf(b);
    return static_cast<double>(g.val(build_ssim(g, x, y, cfg)).v[0]);
}

ImageMetrics compare(const Tensor& a, const Tensor& b) {
    ImageMetrics m;
    m.mse = mse(a, b);
    m.psnr = psnr_from_mse(m.mse);
    m.ssim = ssim(a, b);
    return m;
}

Tensor mscn(const Tensor& image) {
    const Shape s = image.shape;
    if (s.n != 1) throw_shape("mscn expects a single image");
    constexpr int kWin = 7, kHalf = 3;
    if (s.h < kWin || s.w < kWin) throw_shape("mscn needs at least a 7x7 image");

    // channel-mean grayscale, f64
    std::vector<double> gray(static_cast<size_t>(s.h) * s.w);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
            double acc = 0.0;
            for (int c = 0; c < s.c; ++c) acc += static_cast<double>(image.at(0, c, y, x));
            gray[static_cast<size_t>(y) * s.w + x] = acc / s.c;
        }

    const Tensor wt = gaussian_window(kWin, 7.0 / 6.0);
    const int oh = s.h - 2 * kHalf, ow = s.w - 2 * kHalf;
    Tensor out(Shape{1, 1, oh, ow});
    constexpr double kFloor = 1.0 / 255.0;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double mu = 0.0, m2 = 0.0;
            for (int ky = 0; ky < kWin; ++ky)
                for (int kx = 0; kx < kWin; ++kx) {
                    const double wv = static_cast<double>(wt.v[static_cast<size_t>(ky) * kWin + kx]);
                    const double gv = gray[static_cast<size_t>(y + ky) * s.w + (x + kx)];
                    mu += wv * gv;
                    m2 += wv * gv * gv;
                }
            const double var = m2 - mu * mu;
            const double sd = std::sqrt(var > 0.0 ? var : 0.0);
            const double center = gray[static_cast<size_t>(y + kHalf) * s.w + (x + kHalf)];
            out.at(0, 0, y, x) = static_cast<float>((center - mu) / (sd + kFloor));
        }
    return out;
}

int Histogram::peak_bin() const {
    int best = 0;
    for (int i = 1; i < kBins; ++i)
        if (mass[static_cast<size_t>(i)] > mass[static_cast<size_t>(best)]) best = i;
    return best;
}

bool Histogram::unimodal(double tol) const {
    // 3-tap moving average to iron out sampling noise before the shape test
    std::vector<double> s(kBins);
    for (int i = 0; i < kBins; ++i) {
        double acc = mass[static_cast<size_t>(i)];
        int cnt = 1;
        if (i > 0) {
            acc += mass[static_cast<size_t>(i - 1)];
            ++cnt;
        }
        if (i < kBins - 1) {
            acc += mass[static_cast<size_t>(i + 1)];
            ++cnt;
        }
        s[static_cast<size_t>(i)] = acc / cnt;
    }
    int peak = 0;
    for (int i = 1; i < kBins; ++i)
        if (s[static_cast<size_t>(i)] > s[static_cast<size_t>(peak)]) peak = i;
    for (int i = 1; i <= peak; ++i)
        if (s[static_cast<size_t>(i)] + tol < s[static_cast<size_t>(i - 1)]) return false;
    for (int i = peak + 1; i < kBins; ++i)
        if (s[static_cast<size_t>(i)] > s[static_cast<size_t>(i - 1)] + tol) return false;
    return true;
}

Histogram mscn_histogram(const std::vector<Tensor>& coefficient_maps) {
    Histogram h;
    h.centers.resize(Histogram::kBins);
    h.mass.assign(Histogram::kBins, 0.0);
    for (int i = 0; i < Histogram::kBins; ++i) h.centers[static_cast<size_t>(i)] = -3.0 + 0.06 * i;
    std::vector<int64_t> counts(Histogram::kBins, 0);
    for (const Tensor& t : coefficient_maps)
        for (float v : t.v) {
            int idx = static_cast<int>(std::floor((static_cast<double>(v) + 3.0 + 0.03) / 0.06));
            idx = idx < 0 ? 0 : (idx >= Histogram::kBins ? Histogram::kBins - 1 : idx);
            ++counts[static_cast<size_t>(idx)];
            ++h.samples;
        }
    if (h.samples == 0) throw_shape("histogram over empty coefficient set");
    for (int i = 0; i < Histogram::kBins; ++i)
        h.mass[static_cast<size_t>(i)] =
            static_cast<double>(counts[static_cast<size_t>(i)]) / static_cast<double>(h.samples);
    return h;
}

double MetricsReport::mean_psnr() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.psnr_db;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}
double MetricsReport::mean_ssim() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.ssim;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}
double MetricsReport::mean_mse() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.mse;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}
double MetricsReport::std_psnr() const {
    if (rows.size() < 2) return 0.0;
    const double m = mean_psnr();
    double acc = 0.0;
    for (const auto& r : rows) acc += (r.psnr_db - m) * (r.psnr_db - m);
    return std::sqrt(acc / static_cast<double>(rows.size()));
}

std::string MetricsReport::to_csv() const {
    Csv csv;
    csv.header = {"id", "epsilon", "attack_kind", "psnr_db", "ssim", "mse"};
    for (const auto& r : rows)
        csv.rows.push_back({r.id, fmt_float(r.epsilon), r.attack_kind, fmt_double(r.psnr_db),
                            fmt_double(r.ssim), fmt_double(r.mse)});
    return csv.to_string();
}

void MetricsReport::write_csv(const std::string& path) const { write_file_atomic(path, to_csv()); }

MetricsReport MetricsReport::read_csv(const std::string& path) {
    const auto data = read_file(path);
    const Csv csv = Csv::parse(std::string(data.begin(), data.end()));
    const int ci = csv.col("id"), ce = csv.col("epsilon"), ck = csv.col("attack_kind"),
              cp = csv.col("psnr_db"), cs = csv.col("ssim"), cm = csv.col("mse");
    if (ci < 0 || ce < 0 || ck < 0 || cp < 0 || cs < 0 || cm < 0)
        throw_format(path + ": missing metrics columns");
    MetricsReport rep;
    for (const auto& row : csv.rows) {
        MetricRow r;
        r.id = row[static_cast<size_t>(ci)];
        r.epsilon = std::stof(row[static_cast<size_t>(ce)]);
        r.attack_kind = row[static_cast<size_t>(ck)];
        r.psnr_db = std::stod(row[static_cast<size_t>(cp)]);
        r.ssim = std::stod(row[static_cast<size_t>(cs)]);
        r.mse = std::stod(row[static_cast<size_t>(cm)]);
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

}  // namespace hazekit::metrics
