#ifndef IDCV_METRICS_HPP
#define IDCV_METRICS_HPP

#include <string>
#include <vector>

#include "idcv/field.hpp"

namespace idcv {

// 10*log10(1/MSE) for images in [0,1], capped at 100 dB when MSE < 1e-10
// so identical images do not produce infinities in aggregates.
double psnr(const Image& a, const Image& b);

// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1, evaluated at fully-valid window positions.
// Images must be at least 11x11.
double ssim(const Image& a, const Image& b);

struct MetricRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

MetricReport make_report(std::vector<MetricRow> rows);

// Tab-separated: one row per image plus a trailing "mean" row.
void write_report(const std::string& path, const MetricReport& report);
MetricReport read_report(const std::string& path);

} // namespace idcv

#endif
