#pragma once

#include <nlohmann/json.hpp>

#include "sgnv/core/nn.hpp"
#include "sgnv/geometry/point_cloud.hpp"

namespace sgnv {

struct GeometryConfig {
  int feature_dim = 32;
  int steps = 48;
  double radius = 0.08;
  int max_neighbors = 8;
  int mask_threshold = 1;
  double near = 0.2;
  double far = 6.0;
  int hidden = 64;
  int extractor_channels = 16;

  void validate() const {
    if (near >= far) throw Error("geometry_config", "near must be < far");
    if (steps < 1) throw Error("geometry_config", "steps must be >= 1");
    if (radius <= 0) throw Error("geometry_config", "radius must be > 0");
  }

  nlohmann::json to_json() const;
  static GeometryConfig from_json(const nlohmann::json& j);
};

/// Feature extractor (3-layer conv over each observed image) plus the
/// radiance/density MLP. Color goes through sigmoid, density through
/// softplus.
class GeometryModel {
 public:
  GeometryModel(const GeometryConfig& cfg, uint64_t seed);

  const GeometryConfig& cfg() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Per-pixel feature rows, [H*W, feature_dim]; same resolution as input.
  Var feature_map(const Image& image);

  /// Features for every cloud point, sampled from the source view's feature
  /// map at the source pixel. [P, feature_dim], differentiable w.r.t. the
  /// extractor weights.
  Var point_features(const NeuralPointCloud& cloud,
                     const std::vector<View>& observed);

  /// Aggregated sample features -> (rgb [S,3] in (0,1), sigma [S,1] >= 0).
  std::pair<Var, Var> radiance(const Var& aggregated);

 private:
  GeometryConfig cfg_;
  ParamStore params_;
  Conv fe1_, fe2_, fe3_;
  Linear mlp1_, mlp2_, mlp3_;
};

}  // namespace sgnv
