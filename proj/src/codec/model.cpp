#include "sgnv/codec/model.hpp"

namespace sgnv {

std::vector<int> nearest_codes(const Tensor& latents, const Tensor& codebook) {
  int T = latents.dim(0), d = latents.dim(1), K = codebook.dim(0);
  if (codebook.dim(1) != d)
    throw Error("codec_invalid", "latent/codebook dimension mismatch");
  std::vector<int> out(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = 0; k < K; ++k) {
      double d2 = 0;
      for (int c = 0; c < d; ++c) {
        double diff = latents[int64_t(t) * d + c] - codebook[int64_t(k) * d + c];
        d2 += diff * diff;
      }
      if (d2 < best) {  // strict: ties keep the lowest index
        best = d2;
        best_k = k;
      }
    }
    out[size_t(t)] = best_k;
  }
  return out;
}

CodecModel::CodecModel(const CodecConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  for (int f = cfg_.downsample; f > 1; f /= 2) ++n_down_;
  int ch = cfg_.channels;
  enc_.emplace_back(params_, "encoder.in", 3, ch, 3, 1, 1, rng);
  for (int i = 0; i < n_down_; ++i)
    enc_.emplace_back(params_, "encoder.down" + std::to_string(i), ch, ch, 3,
                      2, 1, rng);
  enc_.emplace_back(params_, "encoder.out", ch, cfg_.code_dim, 3, 1, 1, rng);
  dec_.emplace_back(params_, "decoder.in", cfg_.code_dim, ch, 3, 1, 1, rng);
  for (int i = 0; i < n_down_; ++i)
    dec_.emplace_back(params_, "decoder.up" + std::to_string(i), ch, ch, 3, 1,
                      1, rng);
  dec_.emplace_back(params_, "decoder.out", ch, 3, 3, 1, 1, rng);
  codebook_ = params_.add(
      "codebook", init_normal({cfg_.codebook_size, cfg_.code_dim}, 0.5, rng));
}

Var CodecModel::encode_latents(const Var& images) {
  if (images->val.dim(0) != 1)
    throw Error("codec_invalid", "encode_latents: single-item batches only");
  Var y = relu(enc_[0](images));
  for (int i = 0; i < n_down_; ++i) y = relu(enc_[size_t(i) + 1](y));
  y = enc_.back()(y);  // [1, d, h, w]
  int h = y->val.dim(2), w = y->val.dim(3);
  // planar -> spatial-row-major latent rows [h*w, d]
  return transpose(reshape(y, {cfg_.code_dim, h * w}));
}

QuantizeResult CodecModel::quantize(const Var& latents, int h_tok, int w_tok) {
  if (!latents->val.all_finite())
    throw Error("codec_invalid", "latents must be finite");
  QuantizeResult qr;
  qr.tokens.tokens = nearest_codes(latents->val, codebook_->val);
  qr.tokens.h_tok = h_tok;
  qr.tokens.w_tok = w_tok;
  qr.quantized = gather_rows(codebook_, qr.tokens.tokens);
  Tensor delta(latents->val.shape());
  for (int64_t i = 0; i < delta.size(); ++i)
    delta[i] = qr.quantized->val[i] - latents->val[i];
  qr.straight_through = add(latents, constant(std::move(delta)));
  return qr;
}

Var CodecModel::decode_latents(const Var& latents, int n, int h_tok,
                               int w_tok) {
  // latent rows [n*h*w, d] -> [n, d, h, w]
  if (n != 1)
    throw Error("codec_invalid", "decode_latents: single-item batches only");
  Var y = reshape(transpose(latents), {1, cfg_.code_dim, h_tok, w_tok});
  y = relu(dec_[0](y));
  for (int i = 0; i < n_down_; ++i)
    y = relu(dec_[size_t(i) + 1](upsample_nearest2(y)));
  return sigmoid(dec_.back()(y));  // [1, 3, H, W]
}

std::pair<int, int> CodecModel::token_grid(int width, int height) const {
  int f = cfg_.downsample;
  if (width % f != 0 || height % f != 0) {
    int pw = (f - width % f) % f, ph = (f - height % f) % f;
    throw Error("codec_indivisible",
                "image dims " + std::to_string(width) + "x" +
                    std::to_string(height) + " not divisible by " +
                    std::to_string(f) + "; pad by " + std::to_string(pw) +
                    "x" + std::to_string(ph));
  }
  return {height / f, width / f};
}

TokenSequence CodecModel::encode_image(const Image& image) {
  auto [h_tok, w_tok] = token_grid(image.width, image.height);
  Var x = reshape(constant(image.to_chw()), {1, 3, image.height, image.width});
  Var z = encode_latents(x);
  TokenSequence ts;
  ts.tokens = nearest_codes(z->val, codebook_->val);
  ts.h_tok = h_tok;
  ts.w_tok = w_tok;
  return ts;
}

Image CodecModel::decode_tokens(const TokenSequence& tokens) {
  tokens.validate(cfg_.codebook_size);
  Var z = gather_rows(codebook_, tokens.tokens);
  Var img = decode_latents(z, 1, tokens.h_tok, tokens.w_tok);
  return Image::from_chw(
      Tensor({3, img->val.dim(2), img->val.dim(3)},
             std::vector<double>(img->val.raw().begin(),
                                 img->val.raw().end())));
}

CodecLoss CodecModel::loss(const std::vector<Image>& batch) {
  if (batch.empty()) throw Error("codec_invalid", "empty batch");
  // per-item graphs, averaged; keeps conv batching simple
  std::vector<Var> totals;
  double rec_sum = 0, code_sum = 0, commit_sum = 0;
  for (const auto& image : batch) {
    auto [h_tok, w_tok] = token_grid(image.width, image.height);
    Tensor chw = image.to_chw();
    Var x = reshape(constant(chw), {1, 3, image.height, image.width});
    Var z_e = encode_latents(x);
    QuantizeResult qr = quantize(z_e, h_tok, w_tok);
    Var x_hat = decode_latents(qr.straight_through, 1, h_tok, w_tok);

    Var rec = mean(mul(sub(x_hat, x), sub(x_hat, x)));
    Var sg_ze = constant(z_e->val);
    Var code = mean(mul(sub(sg_ze, qr.quantized), sub(sg_ze, qr.quantized)));
    Var sg_zq = constant(qr.quantized->val);
    Var commit = mean(mul(sub(z_e, sg_zq), sub(z_e, sg_zq)));
    rec_sum += rec->val[0];
    code_sum += code->val[0];
    commit_sum += commit->val[0];
    totals.push_back(add(add(rec, code), scale(commit, cfg_.beta)));
  }
  Var total = totals[0];
  for (size_t i = 1; i < totals.size(); ++i) total = add(total, totals[i]);
  CodecLoss out;
  out.total = scale(total, 1.0 / double(batch.size()));
  out.reconstruction = rec_sum / double(batch.size());
  out.codebook = code_sum / double(batch.size());
  out.commitment = commit_sum / double(batch.size());
  return out;
}

}  // namespace sgnv
