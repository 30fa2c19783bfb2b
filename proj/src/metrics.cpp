#include "idcv/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace idcv {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: dimension mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(kWin * kWin);
        const int r = kWin / 2;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            for (int j = 0; j < kWin; ++j) {
                const double d2 = static_cast<double>((i - r) * (i - r) + (j - r) * (j - r));
                w[i * kWin + j] = std::exp(-d2 / (2.0 * kSigma * kSigma));
                sum += w[i * kWin + j];
            }
        }
        for (double& v : w) v /= sum;
        return w;
    }();
    return win;
}

} // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.height < kWin || a.width < kWin)
        throw std::invalid_argument("ssim: images must be at least 11x11");

    const std::vector<double>& win = gaussian_window();
    double total = 0.0;
    int count = 0;
    for (int i = 0; i + kWin <= a.height; ++i) {
        for (int j = 0; j + kWin <= a.width; ++j) {
            double mu_a = 0.0, mu_b = 0.0;
            for (int u = 0; u < kWin; ++u)
                for (int v = 0; v < kWin; ++v) {
                    const double wv = win[u * kWin + v];
                    mu_a += wv * a.at(i + u, j + v);
                    mu_b += wv * b.at(i + u, j + v);
                }
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (int u = 0; u < kWin; ++u)
                for (int v = 0; v < kWin; ++v) {
                    const double wv = win[u * kWin + v];
                    const double da = a.at(i + u, j + v) - mu_a;
                    const double db = b.at(i + u, j + v) - mu_b;
                    var_a += wv * da * da;
                    var_b += wv * db * db;
                    cov += wv * da * db;
                }
            const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
            total += num / den;
            ++count;
        }
    }
    return total / count;
}

MetricReport make_report(std::vector<MetricRow> rows) {
    MetricReport report;
    report.rows = std::move(rows);
    if (!report.rows.empty()) {
        for (const MetricRow& r : report.rows) {
            report.mean_psnr += r.psnr;
            report.mean_ssim += r.ssim;
        }
        report.mean_psnr /= static_cast<double>(report.rows.size());
        report.mean_ssim /= static_cast<double>(report.rows.size());
    }
    return report;
}

void write_report(const std::string& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << std::setprecision(17);
    for (const MetricRow& r : report.rows)
        out << r.name << '\t' << r.psnr << '\t' << r.ssim << '\n';
    out << "mean\t" << report.mean_psnr << '\t' << report.mean_ssim << '\n';
    if (!out) throw std::runtime_error("report: write failed for " + path);
}

MetricReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    MetricReport report;
    std::string line;
    bool saw_mean = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricRow row;
        std::string p, s;
        if (!std::getline(ls, row.name, '\t') || !std::getline(ls, p, '\t') ||
            !std::getline(ls, s))
            throw std::runtime_error("report: malformed line in " + path);
        row.psnr = std::stod(p);
        row.ssim = std::stod(s);
        if (row.name == "mean") {
            report.mean_psnr = row.psnr;
            report.mean_ssim = row.ssim;
            saw_mean = true;
        } else {
            if (saw_mean)
                throw std::runtime_error("report: rows after mean line in " + path);
            report.rows.push_back(std::move(row));
        }
    }
    if (!saw_mean) throw std::runtime_error("report: missing mean line in " + path);
    return report;
}

} // namespace idcv
