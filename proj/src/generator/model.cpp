#include "sgnv/generator/model.hpp"

namespace sgnv {

nlohmann::json GeneratorConfig::to_json() const {
  return {{"d_model", d_model},
          {"enc_layers", enc_layers},
          {"dec_layers", dec_layers},
          {"heads", heads},
          {"n_probed", n_probed},
          {"temperature", temperature},
          {"codebook_size", codebook_size},
          {"patch_stride", patch_stride},
          {"max_patches", max_patches},
          {"max_tokens", max_tokens}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.enc_layers = j.value("enc_layers", c.enc_layers);
  c.dec_layers = j.value("dec_layers", c.dec_layers);
  c.heads = j.value("heads", c.heads);
  c.n_probed = j.value("n_probed", c.n_probed);
  c.temperature = j.value("temperature", c.temperature);
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.patch_stride = j.value("patch_stride", c.patch_stride);
  c.max_patches = j.value("max_patches", c.max_patches);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  return c;
}

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& name,
                                       int d_model, int n_heads, Rng& rng)
    : heads(n_heads), d(d_model) {
  q = Linear(ps, name + ".q", d_model, d_model, rng);
  k = Linear(ps, name + ".k", d_model, d_model, rng);
  v = Linear(ps, name + ".v", d_model, d_model, rng);
  o = Linear(ps, name + ".o", d_model, d_model, rng);
}

Var MultiHeadAttention::operator()(const Var& q_in, const Var& kv_in,
                                   const Tensor* bias) const {
  Var Q = q(q_in), K = k(kv_in), V = v(kv_in);
  int dh = d / heads;
  double inv_sqrt = 1.0 / std::sqrt(double(dh));
  std::vector<Var> outs;
  for (int hh = 0; hh < heads; ++hh) {
    Var Qh = slice_cols(Q, hh * dh, dh);
    Var Kh = slice_cols(K, hh * dh, dh);
    Var Vh = slice_cols(V, hh * dh, dh);
    Var scores = scale(matmul(Qh, transpose(Kh)), inv_sqrt);
    if (bias) scores = add(scores, constant(*bias));
    outs.push_back(matmul(softmax_rows(scores), Vh));
  }
  return o(concat_cols(outs));
}

GeneratorModel::GeneratorModel(const GeneratorConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  int d = cfg_.d_model;

  int n_conv = 0;
  for (int f = cfg_.patch_stride; f > 1; f /= 2) ++n_conv;
  int in_ch = 14;
  for (int i = 0; i < n_conv; ++i) {
    int out_ch = (i == n_conv - 1) ? d : std::max(8, d >> (n_conv - 1 - i));
    patch_convs_.emplace_back(params_, "patch.conv" + std::to_string(i),
                              in_ch, out_ch, 3, 2, 1, rng);
    in_ch = out_ch;
  }

  seg_emb_ = params_.add("seg_emb", init_normal({3, d}, 0.02, rng));
  patch_pos_ =
      params_.add("patch_pos", init_normal({cfg_.max_patches, d}, 0.02, rng));
  token_emb_ = params_.add(
      "token_emb", init_normal({cfg_.codebook_size, d}, 0.02, rng));
  token_pos_ =
      params_.add("token_pos", init_normal({cfg_.max_tokens, d}, 0.02, rng));
  sos_ = params_.add("sos", init_normal({1, d}, 0.02, rng));

  for (int l = 0; l < cfg_.enc_layers; ++l) {
    std::string nm = "enc" + std::to_string(l);
    EncLayer layer;
    layer.ln1 = LayerNorm(params_, nm + ".ln1", d);
    layer.attn = MultiHeadAttention(params_, nm + ".attn", d, cfg_.heads, rng);
    layer.ln2 = LayerNorm(params_, nm + ".ln2", d);
    layer.ff1 = Linear(params_, nm + ".ff1", d, 4 * d, rng);
    layer.ff2 = Linear(params_, nm + ".ff2", 4 * d, d, rng);
    enc_.push_back(std::move(layer));
  }
  enc_final_ = LayerNorm(params_, "enc_final", d);

  for (int l = 0; l < cfg_.dec_layers; ++l) {
    std::string nm = "dec" + std::to_string(l);
    DecLayer layer;
    layer.ln1 = LayerNorm(params_, nm + ".ln1", d);
    layer.self_attn =
        MultiHeadAttention(params_, nm + ".self", d, cfg_.heads, rng);
    layer.ln2 = LayerNorm(params_, nm + ".ln2", d);
    layer.cross_attn =
        MultiHeadAttention(params_, nm + ".cross", d, cfg_.heads, rng);
    layer.ln3 = LayerNorm(params_, nm + ".ln3", d);
    layer.ff1 = Linear(params_, nm + ".ff1", d, 4 * d, rng);
    layer.ff2 = Linear(params_, nm + ".ff2", 4 * d, d, rng);
    dec_.push_back(std::move(layer));
  }
  dec_final_ = LayerNorm(params_, "dec_final", d);
  head_ = Linear(params_, "head", d, cfg_.codebook_size, rng);
}

Var GeneratorModel::patch_conv(const Tensor& channels) {
  int h = channels.dim(1), w = channels.dim(2);
  if (h % cfg_.patch_stride != 0 || w % cfg_.patch_stride != 0)
    throw Error("generator_invalid",
                "preview dims not divisible by patch stride");
  Var y = reshape(constant(channels), {1, 14, h, w});
  for (size_t i = 0; i < patch_convs_.size(); ++i) {
    y = patch_convs_[i](y);
    if (i + 1 < patch_convs_.size()) y = relu(y);
  }
  int hp = y->val.dim(2), wp = y->val.dim(3);
  return transpose(reshape(y, {cfg_.d_model, hp * wp}));  // [n_p, d]
}

Var GeneratorModel::embed_preview(const Preview& preview) {
  Var patches = patch_conv(preview.to_channels());
  int n_p = patches->val.dim(0);
  if (n_p > cfg_.max_patches)
    throw Error("generator_invalid",
                "preview yields " + std::to_string(n_p) +
                    " patches, more than max_patches");
  Var seg = slice_rows(seg_emb_, int(preview.category), 1);
  std::vector<int> pos(static_cast<size_t>(n_p));
  for (int i = 0; i < n_p; ++i) pos[size_t(i)] = i;
  return add(add_rowvec(patches, seg), gather_rows(patch_pos_, pos));
}

Var GeneratorModel::encode_context(const std::vector<Preview>& previews) {
  if (previews.empty()) throw Error("generator_invalid", "no previews");
  int n_query = 0;
  for (const Preview& p : previews)
    if (p.category == PreviewCategory::kQuery) ++n_query;
  if (n_query != 1)
    throw Error("generator_invalid",
                "context must contain exactly one query preview, got " +
                    std::to_string(n_query));
  std::vector<Var> groups;
  for (const Preview& p : previews) groups.push_back(embed_preview(p));
  Var x = concat_rows(groups);
  for (const EncLayer& layer : enc_) {
    Var u = layer.ln1(x);
    x = add(x, layer.attn(u, u));
    Var f = layer.ln2(x);
    x = add(x, layer.ff2(relu(layer.ff1(f))));
  }
  return enc_final_(x);
}

Var GeneratorModel::encode_context(const PreviewSet& previews) {
  std::vector<Preview> all = previews.context;
  all.push_back(previews.query);
  return encode_context(all);
}

Var GeneratorModel::decode_hidden(const std::vector<int>& prefix,
                                  const Var& h) {
  int t_in = int(prefix.size()) + 1;
  if (t_in > cfg_.max_tokens)
    throw Error("generator_invalid", "sequence longer than max_tokens");
  std::vector<Var> rows{sos_};
  if (!prefix.empty()) rows.push_back(gather_rows(token_emb_, prefix));
  std::vector<int> pos(static_cast<size_t>(t_in));
  for (int i = 0; i < t_in; ++i) pos[size_t(i)] = i;
  Var x = add(concat_rows(rows), gather_rows(token_pos_, pos));

  Tensor causal({t_in, t_in});
  double neg_inf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < t_in; ++i)
    for (int j = i + 1; j < t_in; ++j) causal[int64_t(i) * t_in + j] = neg_inf;

  for (const DecLayer& layer : dec_) {
    Var u = layer.ln1(x);
    x = add(x, layer.self_attn(u, u, &causal));
    x = add(x, layer.cross_attn(layer.ln2(x), h));
    Var f = layer.ln3(x);
    x = add(x, layer.ff2(relu(layer.ff1(f))));
  }
  return head_(dec_final_(x));  // [t_in, K] logits
}

Var GeneratorModel::token_logprobs(const std::vector<int>& tokens,
                                   const Var& h) {
  if (tokens.empty()) throw Error("generator_invalid", "empty token sequence");
  for (int t : tokens)
    if (t < 0 || t >= cfg_.codebook_size)
      throw Error("tokens_invalid",
                  "token " + std::to_string(t) + " outside codebook");
  std::vector<int> prefix(tokens.begin(), tokens.end() - 1);
  return log_softmax_rows(decode_hidden(prefix, h));
}

NllResult GeneratorModel::sequence_nll(const std::vector<int>& tokens,
                                       const Var& h) {
  Var lp = token_logprobs(tokens, h);
  int T = int(tokens.size()), K = cfg_.codebook_size;
  Tensor onehot({T, K});
  for (int t = 0; t < T; ++t) onehot[int64_t(t) * K + tokens[size_t(t)]] = 1.0;
  NllResult out;
  out.total = scale(sum(mul(lp, constant(onehot))), -1.0);
  out.per_token = scale(out.total, 1.0 / double(T));
  return out;
}

TokenSequence GeneratorModel::sample_tokens(const Var& h, int h_tok,
                                            int w_tok, SampleMode mode,
                                            double temperature,
                                            uint64_t seed) {
  int T = h_tok * w_tok, K = cfg_.codebook_size;
  if (T <= 0) throw Error("generator_invalid", "empty token grid");
  if (mode == SampleMode::kMultinomial && temperature <= 0)
    throw Error("generator_invalid",
                "multinomial sampling needs temperature > 0");
  Rng rng(seed);
  std::vector<int> tokens;
  for (int t = 0; t < T; ++t) {
    Var logits = decode_hidden(tokens, h);
    int last = logits->val.dim(0) - 1;
    const double* row = logits->val.raw().data() + int64_t(last) * K;
    int pick = 0;
    if (mode == SampleMode::kGreedy) {
      for (int k = 1; k < K; ++k)
        if (row[k] > row[pick]) pick = k;  // ties keep the lowest index
    } else {
      double mx = row[0];
      for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
      std::vector<double> p(static_cast<size_t>(K));
      double z = 0;
      for (int k = 0; k < K; ++k) {
        p[size_t(k)] = std::exp((row[k] - mx) / temperature);
        z += p[size_t(k)];
      }
      double u = rng.uniform() * z, acc = 0;
      pick = K - 1;
      for (int k = 0; k < K; ++k) {
        acc += p[size_t(k)];
        if (u < acc) {
          pick = k;
          break;
        }
      }
    }
    tokens.push_back(pick);
  }
  TokenSequence out;
  out.tokens = std::move(tokens);
  out.h_tok = h_tok;
  out.w_tok = w_tok;
  return out;
}

}  // namespace sgnv
