#pragma once

#include <nlohmann/json.hpp>

#include "sgnv/core/errors.hpp"
#include "sgnv/core/image.hpp"
#include "sgnv/core/nn.hpp"

namespace sgnv {

/// Discrete image tokens over a (h_tok, w_tok) grid, row-major.
struct TokenSequence {
  std::vector<int> tokens;
  int h_tok = 0, w_tok = 0;

  int length() const { return int(tokens.size()); }
  void validate(int codebook_size) const {
    if (int64_t(h_tok) * w_tok != int64_t(tokens.size()))
      throw Error("tokens_invalid", "token count does not match grid shape");
    for (int t : tokens)
      if (t < 0 || t >= codebook_size)
        throw Error("tokens_invalid",
                    "token " + std::to_string(t) + " outside codebook");
  }
};

struct CodecConfig {
  int codebook_size = 512;
  int code_dim = 64;
  int downsample = 8;  // power of two
  double beta = 0.25;
  int channels = 32;

  void validate() const {
    if (codebook_size < 2) throw Error("codec_config", "codebook_size < 2");
    int f = downsample;
    while (f > 1 && f % 2 == 0) f /= 2;
    if (f != 1) throw Error("codec_config", "downsample must be a power of 2");
  }

  nlohmann::json to_json() const {
    return {{"codebook_size", codebook_size}, {"code_dim", code_dim},
            {"downsample", downsample},       {"beta", beta},
            {"channels", channels}};
  }
  static CodecConfig from_json(const nlohmann::json& j) {
    CodecConfig c;
    c.codebook_size = j.value("codebook_size", c.codebook_size);
    c.code_dim = j.value("code_dim", c.code_dim);
    c.downsample = j.value("downsample", c.downsample);
    c.beta = j.value("beta", c.beta);
    c.channels = j.value("channels", c.channels);
    return c;
  }
};

/// Nearest-codeword assignment; ties go to the lowest index.
std::vector<int> nearest_codes(const Tensor& latents, const Tensor& codebook);

struct QuantizeResult {
  TokenSequence tokens;
  Var quantized;         // codebook rows (gradient reaches the codebook)
  Var straight_through;  // z_e + stopgrad(z_q - z_e); decoder input
};

struct CodecLoss {
  Var total;
  double reconstruction = 0, codebook = 0, commitment = 0;
};

class CodecModel {
 public:
  CodecModel(const CodecConfig& cfg, uint64_t seed);

  const CodecConfig& cfg() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  Var codebook() { return codebook_; }

  /// Latent rows [N*h*w, code_dim] for a batch [N,3,H,W].
  Var encode_latents(const Var& images);

  QuantizeResult quantize(const Var& latents, int h_tok, int w_tok);

  /// Latent rows -> image batch [N,3,H,W] with values in (0,1).
  Var decode_latents(const Var& latents, int n, int h_tok, int w_tok);

  TokenSequence encode_image(const Image& image);
  Image decode_tokens(const TokenSequence& tokens);

  /// Reconstruction + codebook + beta * commitment, each a mean over
  /// elements; straight-through gradient to the encoder.
  CodecLoss loss(const std::vector<Image>& batch);

 private:
  std::pair<int, int> token_grid(int width, int height) const;

  CodecConfig cfg_;
  ParamStore params_;
  std::vector<Conv> enc_;
  std::vector<Conv> dec_;
  Var codebook_;
  int n_down_ = 0;
};

}  // namespace sgnv
