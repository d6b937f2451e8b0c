#pragma once

#include <nlohmann/json.hpp>

#include "sgnv/codec/model.hpp"  // TokenSequence
#include "sgnv/generator/preview.hpp"

namespace sgnv {

struct GeneratorConfig {
  int d_model = 128;
  int enc_layers = 4;
  int dec_layers = 6;
  int heads = 4;
  int n_probed = 8;
  double temperature = 1.0;
  int codebook_size = 512;  // must match the codec
  int patch_stride = 8;     // conv patch embedder downsampling, power of 2
  int max_patches = 256;    // per-preview positional table size
  int max_tokens = 256;     // token positional table size

  void validate() const {
    if (d_model % heads != 0)
      throw Error("generator_config", "d_model must be divisible by heads");
    int f = patch_stride;
    while (f > 1 && f % 2 == 0) f /= 2;
    if (f != 1 || patch_stride < 2)
      throw Error("generator_config", "patch_stride must be a power of 2");
    if (codebook_size < 2)
      throw Error("generator_config", "codebook_size < 2");
  }

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

/// Multi-head attention block; heads are column slices of the projections.
struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1, d = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& ps, const std::string& name, int d_model,
                     int n_heads, Rng& rng);

  /// bias, when given, is an additive [Tq,Tk] score matrix (0 or -inf).
  Var operator()(const Var& q_in, const Var& kv_in,
                 const Tensor* bias = nullptr) const;
};

enum class SampleMode { kGreedy, kMultinomial };

struct NllResult {
  Var total;      // summed over positions
  Var per_token;  // total / T
};

/// Transformer view generator: conv patch embedder with segment and
/// within-preview positional embeddings, non-causal encoder over all context
/// patches, and a causal decoder with cross-attention that predicts the
/// query view's token sequence.
class GeneratorModel {
 public:
  GeneratorModel(const GeneratorConfig& cfg, uint64_t seed);

  const GeneratorConfig& cfg() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// One preview -> [n_p, d_model] patches; segment embedding of the
  /// preview's category and per-patch positional embedding already added.
  Var embed_preview(const Preview& preview);

  /// Context plus query previews -> latent [M, d_model]. Exactly one query
  /// preview must be present.
  Var encode_context(const std::vector<Preview>& previews);
  Var encode_context(const PreviewSet& previews);

  /// Teacher-forced causal log-probabilities, [T, codebook_size]; row t
  /// conditions on SOS and tokens before t only.
  Var token_logprobs(const std::vector<int>& tokens, const Var& h);

  NllResult sequence_nll(const std::vector<int>& tokens, const Var& h);

  TokenSequence sample_tokens(const Var& h, int h_tok, int w_tok,
                              SampleMode mode, double temperature,
                              uint64_t seed);

 private:
  struct EncLayer {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear ff1, ff2;
  };
  struct DecLayer {
    LayerNorm ln1, ln2, ln3;
    MultiHeadAttention self_attn, cross_attn;
    Linear ff1, ff2;
  };

  Var patch_conv(const Tensor& channels);
  Var decode_hidden(const std::vector<int>& prefix, const Var& h);

  GeneratorConfig cfg_;
  ParamStore params_;
  std::vector<Conv> patch_convs_;
  Var seg_emb_;        // [3, d]
  Var patch_pos_;      // [max_patches, d]
  Var token_emb_;      // [K, d]
  Var token_pos_;      // [max_tokens, d]
  Var sos_;            // [1, d]
  std::vector<EncLayer> enc_;
  std::vector<DecLayer> dec_;
  LayerNorm enc_final_, dec_final_;
  Linear head_;
};

}  // namespace sgnv
