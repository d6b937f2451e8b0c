#include "sgnv/geometry/model.hpp"

namespace sgnv {

nlohmann::json GeometryConfig::to_json() const {
  return {{"feature_dim", feature_dim},
          {"steps", steps},
          {"radius", radius},
          {"max_neighbors", max_neighbors},
          {"mask_threshold", mask_threshold},
          {"near", near},
          {"far", far},
          {"hidden", hidden},
          {"extractor_channels", extractor_channels}};
}

GeometryConfig GeometryConfig::from_json(const nlohmann::json& j) {
  GeometryConfig c;
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.steps = j.value("steps", c.steps);
  c.radius = j.value("radius", c.radius);
  c.max_neighbors = j.value("max_neighbors", c.max_neighbors);
  c.mask_threshold = j.value("mask_threshold", c.mask_threshold);
  c.near = j.value("near", c.near);
  c.far = j.value("far", c.far);
  c.hidden = j.value("hidden", c.hidden);
  c.extractor_channels = j.value("extractor_channels", c.extractor_channels);
  return c;
}

GeometryModel::GeometryModel(const GeometryConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  int ch = cfg_.extractor_channels;
  fe1_ = Conv(params_, "extractor.conv1", 3, ch, 3, 1, 1, rng);
  fe2_ = Conv(params_, "extractor.conv2", ch, ch, 3, 1, 1, rng);
  fe3_ = Conv(params_, "extractor.conv3", ch, cfg_.feature_dim, 3, 1, 1, rng);
  mlp1_ = Linear(params_, "mlp.fc1", cfg_.feature_dim, cfg_.hidden, rng);
  mlp2_ = Linear(params_, "mlp.fc2", cfg_.hidden, cfg_.hidden, rng);
  mlp3_ = Linear(params_, "mlp.fc3", cfg_.hidden, 4, rng);
}

Var GeometryModel::feature_map(const Image& image) {
  int h = image.height, w = image.width;
  Tensor chw = image.to_chw();
  Var x = reshape(constant(std::move(chw)), {1, 3, h, w});
  Var y = relu(fe1_(x));
  y = relu(fe2_(y));
  y = fe3_(y);  // [1, d, h, w]
  // planar -> per-pixel rows
  return transpose(reshape(y, {cfg_.feature_dim, h * w}));
}

Var GeometryModel::point_features(const NeuralPointCloud& cloud,
                                  const std::vector<View>& observed) {
  if (observed.empty())
    throw Error("geometry_invalid", "no observed views");
  int hw = observed[0].image.width * observed[0].image.height;
  std::vector<Var> maps;
  maps.reserve(observed.size());
  for (const auto& v : observed) maps.push_back(feature_map(v.image));
  Var all = maps.size() == 1 ? maps[0] : concat_rows(maps);
  std::vector<int> idx;
  idx.reserve(cloud.source.size());
  for (auto [view, pixel] : cloud.source) {
    if (view < 0 || view >= int(observed.size()) || pixel < 0 || pixel >= hw)
      throw Error("cloud_provenance",
                  "point provenance outside the observed set");
    idx.push_back(view * hw + pixel);
  }
  return gather_rows(all, idx);
}

std::pair<Var, Var> GeometryModel::radiance(const Var& aggregated) {
  Var h = relu(mlp1_(aggregated));
  h = relu(mlp2_(h));
  Var out = mlp3_(h);  // [S,4]
  Var rgb = sigmoid(slice_cols(out, 0, 3));
  Var sigma = softplus(slice_cols(out, 3, 1));
  return {rgb, sigma};
}

}  // namespace sgnv
