#include "sgnv/metrics/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sgnv/core/errors.hpp"

namespace sgnv {

namespace {

void check_shapes(const Image& a, const Image& b, const char* op) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw Error("metric_shape_mismatch",
                std::string(op) + ": image shapes differ");
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_shapes(a, b, "psnr");
  double se = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    se += d * d;
  }
  double mse = se / double(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, int window, double c1, double c2) {
  check_shapes(a, b, "ssim");
  if (a.width < window || a.height < window)
    throw Error("metric_too_small", "image smaller than the SSIM window");
  double total = 0.0;
  int64_t n_windows = 0;
  double inv_n = 1.0 / double(window * window);
  for (int c = 0; c < a.channels; ++c)
    for (int y0 = 0; y0 + window <= a.height; ++y0)
      for (int x0 = 0; x0 + window <= a.width; ++x0) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = y0; y < y0 + window; ++y)
          for (int x = x0; x < x0 + window; ++x) {
            double va = a.at(x, y, c), vb = b.at(x, y, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        double mua = sa * inv_n, mub = sb * inv_n;
        double vara = saa * inv_n - mua * mua;
        double varb = sbb * inv_n - mub * mub;
        double cov = sab * inv_n - mua * mub;
        double s = ((2 * mua * mub + c1) * (2 * cov + c2)) /
                   ((mua * mua + mub * mub + c1) * (vara + varb + c2));
        total += s;
        ++n_windows;
      }
  return total / double(n_windows);
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"index", r.index}, {"ssim", r.ssim}};
    if (std::isinf(r.psnr))
      row["psnr"] = "inf";
    else
      row["psnr"] = r.psnr;
    rows_json.push_back(row);
  }
  return {{"rows", rows_json},
          {"mean_psnr", mean_psnr},
          {"mean_ssim", mean_ssim},
          {"count", count},
          {"infinite_psnr_count", infinite_psnr_count},
          {"lpips", nullptr}};  // reserved, not computed
}

MetricReport evaluate(const std::vector<Image>& predictions,
                      const std::vector<Image>& ground_truth) {
  if (predictions.size() != ground_truth.size())
    throw Error("metric_count_mismatch",
                "prediction/ground-truth counts differ");
  MetricReport report;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int psnr_finite = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double p = psnr(predictions[i], ground_truth[i]);
    double s = ssim(predictions[i], ground_truth[i]);
    report.rows.push_back({int(i), p, s});
    ssim_sum += s;
    if (std::isinf(p)) {
      ++report.infinite_psnr_count;
    } else {
      psnr_sum += p;
      ++psnr_finite;
    }
  }
  report.count = int(predictions.size());
  report.mean_ssim = report.count ? ssim_sum / report.count : 0.0;
  report.mean_psnr = psnr_finite ? psnr_sum / psnr_finite : 0.0;
  return report;
}

void write_report(const MetricReport& report, const nlohmann::json& config,
                  const std::filesystem::path& path) {
  nlohmann::json j = {{"schema_version", 1},
                      {"ssim_window", 8},
                      {"config", config},
                      {"report", report.to_json()}};
  std::ofstream os(path);
  if (!os) throw Error("report_write", "cannot open " + path.string());
  os << j.dump(1) << "\n";
}

}  // namespace sgnv
