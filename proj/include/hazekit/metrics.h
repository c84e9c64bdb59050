#pragma once

#include <string>
#include <vector>

#include "hazekit/graph.h"
#include "hazekit/tensor.h"

namespace hazekit::metrics {

// mean squared error over all elements, f64 accumulation
double mse(const Tensor& a, const Tensor& b);

// 10*log10(1/mse) for unit-range images; mse below 1e-10 reports the 100 dB cap
double psnr_from_mse(double mse);
double psnr_db(const Tensor& a, const Tensor& b);

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    float c1 = 1e-4f;   // (0.01*L)^2 with L = 1
    float c2 = 9e-4f;   // (0.03*L)^2
};

// (1,1,k,k) Gaussian conv weight normalized to unit sum
Tensor gaussian_window(int k, double sigma);

// Windowed SSIM on the tape (differentiable): per-channel maps over the
// valid region, averaged into one scalar node. Inputs are (N,C,H,W) nodes of
// equal shape with H,W >= window.
int build_ssim(Graph& g, int x, int y, const SsimConfig& cfg = {});

// plain value; same code path as the tape builder, so the metric and the
// attack loss can never drift apart
double ssim(const Tensor& a, const Tensor& b, const SsimConfig& cfg = {});

struct ImageMetrics {
    double psnr = 0.0, ssim = 0.0, mse = 0.0;
};
ImageMetrics compare(const Tensor& a, const Tensor& b);

// MSCN coefficients of one image: channel-mean grayscale, 7x7 Gaussian with
// sigma 7/6, local standard deviation floor C = 1/255, valid region only.
Tensor mscn(const Tensor& image);  // (1,C,H,W) -> (1,1,H-6,W-6)

// 101-bin histogram over [-3, 3]; bin centers -3 + 0.06*i so bin 50 sits at
// exactly 0; out-of-range coefficients land in the edge bins; masses sum to 1.
struct Histogram {
    static constexpr int kBins = 101;
    std::vector<double> centers;  // size 101
    std::vector<double> mass;     // size 101
    int64_t samples = 0;

    int peak_bin() const;
    // single rise-then-fall shape after light smoothing, tolerance in mass
    bool unimodal(double tol = 2e-3) const;
};

Histogram mscn_histogram(const std::vector<Tensor>& coefficient_maps);

// per-image metric rows + aggregates; the CSV schema is
// id,epsilon,attack_kind,psnr_db,ssim,mse
struct MetricRow {
    std::string id;
    float epsilon = 0.0f;
    std::string attack_kind;
    double psnr_db = 0.0, ssim = 0.0, mse = 0.0;
};

struct MetricsReport {
    std::vector<MetricRow> rows;

    double mean_psnr() const;
    double mean_ssim() const;
    double mean_mse() const;
    double std_psnr() const;

    std::string to_csv() const;
    void write_csv(const std::string& path) const;
    static MetricsReport read_csv(const std::string& path);
};

}  // namespace hazekit::metrics
