#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgnv/core/image.hpp"

namespace sgnv {

/// 10*log10(1/MSE) for images in [0,1]; +inf when identical.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM over uniform sliding windows, averaged across channels.
double ssim(const Image& a, const Image& b, int window = 8,
            double c1 = 0.01 * 0.01, double c2 = 0.03 * 0.03);

struct MetricReport {
  struct Row {
    int index;
    double psnr;
    double ssim;
  };
  std::vector<Row> rows;
  double mean_psnr = 0.0;  // infinite per-view values are excluded and counted
  double mean_ssim = 0.0;
  int count = 0;
  int infinite_psnr_count = 0;

  nlohmann::json to_json() const;
};

MetricReport evaluate(const std::vector<Image>& predictions,
                      const std::vector<Image>& ground_truth);

void write_report(const MetricReport& report, const nlohmann::json& config,
                  const std::filesystem::path& path);

}  // namespace sgnv
