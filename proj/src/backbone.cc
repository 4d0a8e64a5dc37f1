// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/backbone.h"

#include <cfenv>
#include <cmath>

#include "avtse/error.h"
#include "avtse/rng.h"

namespace avtse {

void BackboneConfig::Validate() const {
  AVTSE_REQUIRE(enc_kernel > 0 && enc_stride > 0 && model_dim > 0 &&
                    n_blocks > 0 && chunk_len > 0 && n_heads > 0 &&
                    visual_dim > 0,
                "backbone config values must all be positive");
  AVTSE_REQUIRE(enc_stride <= enc_kernel, "enc_stride must not exceed enc_kernel");
  AVTSE_REQUIRE(model_dim % n_heads == 0,
                "model_dim (" + std::to_string(model_dim) +
                    ") must be divisible by n_heads (" +
                    std::to_string(n_heads) + ")");
}

namespace {

Matrix UniformFanIn(int fan_in, int fan_out, Rng &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(fan_in, fan_out);
  for (double &v : m.values()) v = dist(rng);
  return m;
}

// `count` mutually orthonormal Gaussian vectors of length `len` (count <= len).
std::vector<std::vector<double>> Orthonormal(int count, int len, Rng &rng) {
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < count) {
    std::vector<double> v(len);
    for (double &x : v) x = Gaussian(rng);
    for (const auto &b : basis) {
      double dot = 0.0;
      for (int i = 0; i < len; ++i) dot += v[i] * b[i];
      for (int i = 0; i < len; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double &x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

void AddAttention(ModelParams &p, const std::string &prefix, int dim, Rng &rng) {
  for (const char *n : {"q", "k", "v", "o"}) {
    p.Set(prefix + ".w" + n, UniformFanIn(dim, dim, rng));
    p.Set(prefix + ".b" + n, Matrix(1, dim));
  }
}

void AddNorm(ModelParams &p, const std::string &prefix, int dim) {
  p.Set(prefix + ".gain", Matrix(1, dim, 1.0));
  p.Set(prefix + ".offset", Matrix(1, dim));
}

void AddFfn(ModelParams &p, const std::string &prefix, int dim, int hidden,
            Rng &rng) {
  p.Set(prefix + ".w1", UniformFanIn(dim, hidden, rng));
  p.Set(prefix + ".b1", Matrix(1, hidden));
  p.Set(prefix + ".w2", UniformFanIn(hidden, dim, rng));
  p.Set(prefix + ".b2", Matrix(1, dim));
}

std::string BlockPrefix(int b) { return "block" + std::to_string(b); }

}  // namespace

ModelParams InitParams(const BackboneConfig &cfg) {
  cfg.Validate();
  Rng rng(cfg.seed);
  ModelParams p;
  const int k = cfg.enc_kernel;
  const int n = cfg.model_dim;

  // Encoder filters come in sign-flipped pairs spanning an orthonormal basis
  // and the decoder holds the matching synthesis filters, so that with a
  // unit mask relu(a) - relu(-a) = a and overlap-add reproduces the input.
  const int half = n / 2;
  Matrix enc(k, n), dec(n, k);
  const double ola = static_cast<double>(cfg.enc_stride) / k;
  if (half > 0) {
    // Columns of `basis_km` (k x half) with orthonormal rows or columns.
    Matrix basis_km(k, half);
    if (half >= k) {
      auto rows = Orthonormal(k, half, rng);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < half; ++j) basis_km(i, j) = rows[i][j];
    } else {
      auto cols = Orthonormal(half, k, rng);
      for (int j = 0; j < half; ++j)
        for (int i = 0; i < k; ++i) basis_km(i, j) = cols[j][i];
    }
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < half; ++j) {
        enc(i, j) = basis_km(i, j);
        enc(i, j + half) = -basis_km(i, j);
        dec(j, i) = ola * basis_km(i, j);
        dec(j + half, i) = -ola * basis_km(i, j);
      }
    }
  }
  if (n % 2 == 1) {
    Matrix extra = UniformFanIn(k, 1, rng);
    for (int i = 0; i < k; ++i) {
      enc(i, n - 1) = extra(i, 0);
      dec(n - 1, i) = 0.0;
    }
  }
  p.Set("encoder.weight", std::move(enc));
  p.Set("encoder.bias", Matrix(1, n));
  p.Set("visual_proj.weight", UniformFanIn(cfg.visual_dim, n, rng));
  p.Set("visual_proj.bias", Matrix(1, n));
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string pre = BlockPrefix(b);
    AddAttention(p, pre + ".intra_attn", n, rng);
    AddNorm(p, pre + ".intra_norm1", n);
    AddFfn(p, pre + ".intra_ffn", n, cfg.ffn_dim(), rng);
    AddNorm(p, pre + ".intra_norm2", n);
    AddAttention(p, pre + ".cross_attn", n, rng);
    AddNorm(p, pre + ".cross_norm", n);
    AddAttention(p, pre + ".inter_attn", n, rng);
    AddNorm(p, pre + ".inter_norm1", n);
    AddFfn(p, pre + ".inter_ffn", n, cfg.ffn_dim(), rng);
    AddNorm(p, pre + ".inter_norm2", n);
  }
  p.Set("mask.weight", UniformFanIn(n, n, rng));
  p.Set("mask.bias", Matrix(1, n));
  p.Set("decoder.weight", std::move(dec));
  return p;
}

int NumEncoderFrames(int length, const BackboneConfig &cfg) {
  AVTSE_REQUIRE(length >= cfg.enc_kernel,
                "input of " + std::to_string(length) +
                    " samples is shorter than enc_kernel (" +
                    std::to_string(cfg.enc_kernel) + ")");
  return (length - cfg.enc_kernel) / cfg.enc_stride + 1;
}

Matrix EncodeAudio(const AudioClip &x, const ModelParams &params,
                   const BackboneConfig &cfg) {
  cfg.Validate();
  NumEncoderFrames(static_cast<int>(x.size()), cfg);
  ag::Graph g;
  ag::Var wave = g.Constant(x.AsRow());
  ag::Var enc =
      ag::Relu(ag::Linear(ag::Frame(wave, cfg.enc_kernel, cfg.enc_stride),
                          g.Constant(params.at("encoder.weight")),
                          g.Constant(params.at("encoder.bias"))));
  return enc.value();
}

std::vector<int> AlignIndices(int t_v, int t_a) {
  AVTSE_REQUIRE(t_v >= 1 && t_a >= 1, "AlignIndices needs positive lengths");
  std::vector<int> idx(t_a, 0);
  if (t_a == 1) return idx;
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  for (int t = 0; t < t_a; ++t) {
    const double pos = static_cast<double>(t) * (t_v - 1) / (t_a - 1);
    idx[t] = static_cast<int>(std::nearbyint(pos));
  }
  std::fesetround(saved);
  return idx;
}

Matrix AlignVisual(const VisualStream &v, int t_a) {
  const auto idx = AlignIndices(v.num_frames(), t_a);
  Matrix out(t_a, v.dim());
  for (int t = 0; t < t_a; ++t) {
    auto src = v.frames.row(idx[t]);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

namespace {

Matrix SinusoidalTable(int rows, int dim, int period) {
  Matrix pe(rows, dim);
  for (int r = 0; r < rows; ++r) {
    const double pos = r % period;
    for (int i = 0; i < dim; ++i) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(r, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return pe;
}

ag::Var Attention(const BoundParams &p, const std::string &pre, ag::Var query,
                  ag::Var context, int group, int heads,
                  std::span<const uint8_t> key_valid) {
  ag::Var q = ag::Linear(query, p[pre + ".wq"], p[pre + ".bq"]);
  ag::Var k = ag::Linear(context, p[pre + ".wk"], p[pre + ".bk"]);
  ag::Var v = ag::Linear(context, p[pre + ".wv"], p[pre + ".bv"]);
  ag::Var o = ag::GroupedAttention(q, k, v, group, heads, key_valid);
  return ag::Linear(o, p[pre + ".wo"], p[pre + ".bo"]);
}

ag::Var Norm(const BoundParams &p, const std::string &pre, ag::Var x) {
  return ag::LayerNorm(x, p[pre + ".gain"], p[pre + ".offset"]);
}

ag::Var FeedForward(const BoundParams &p, const std::string &pre, ag::Var x) {
  ag::Var h = ag::Relu(ag::Linear(x, p[pre + ".w1"], p[pre + ".b1"]));
  return ag::Linear(h, p[pre + ".w2"], p[pre + ".b2"]);
}

}  // namespace

ForwardOutputs Forward(ag::Graph &g, const BoundParams &p,
                       const BackboneConfig &cfg, const AudioClip &mixture,
                       const VisualStream &visual, const ForwardOptions &opts) {
  cfg.Validate();
  const int length = static_cast<int>(mixture.size());
  NumEncoderFrames(length, cfg);
  AVTSE_REQUIRE(visual.dim() == cfg.visual_dim,
                "visual stream dim " + std::to_string(visual.dim()) +
                    " does not match visual_dim " +
                    std::to_string(cfg.visual_dim));
  AVTSE_REQUIRE(visual.num_frames() >= 1 && visual.fps > 0.0,
                "visual stream is empty");
  const double audio_dur = mixture.duration();
  const double visual_dur = visual.num_frames() / visual.fps;
  AVTSE_REQUIRE(std::abs(audio_dur - visual_dur) <= 1.0 / visual.fps + 1e-9,
                "audio (" + std::to_string(audio_dur) + " s) and visual (" +
                    std::to_string(visual_dur) +
                    " s) durations differ by more than one visual frame");

  // Zero-pad the tail so the frames cover every input sample.
  const int k = cfg.enc_kernel;
  const int s = cfg.enc_stride;
  const int t_a = (length - k + s - 1) / s + 1;
  const int padded_len = (t_a - 1) * s + k;
  Matrix padded(1, padded_len);
  std::copy(mixture.samples().begin(), mixture.samples().end(), padded.data());

  ag::Var wave = g.Constant(std::move(padded));
  ag::Var enc = ag::Relu(ag::Linear(ag::Frame(wave, k, s), p["encoder.weight"],
                                    p["encoder.bias"]));
  ag::Var masked = enc;
  ag::Var mask;
  if (!opts.unit_mask) {
    const int chunk = cfg.chunk_len;
    const int n_chunks = (t_a + chunk - 1) / chunk;
    const int total = n_chunks * chunk;
    std::vector<int> pad_idx(total, -1), trim_idx(t_a);
    std::vector<uint8_t> valid(total, 0), valid_inter(total, 0);
    for (int t = 0; t < t_a; ++t) {
      pad_idx[t] = t;
      valid[t] = 1;
      trim_idx[t] = t;
    }
    // Inter-chunk order: rows sorted by (position in chunk, chunk index).
    std::vector<int> to_inter(total), from_inter(total);
    for (int c = 0; c < n_chunks; ++c) {
      for (int q = 0; q < chunk; ++q) {
        to_inter[q * n_chunks + c] = c * chunk + q;
        from_inter[c * chunk + q] = q * n_chunks + c;
      }
    }
    for (int r = 0; r < total; ++r) valid_inter[r] = valid[to_inter[r]];
    const Matrix pe_intra = SinusoidalTable(total, cfg.model_dim, chunk);
    const Matrix pe_inter = SinusoidalTable(total, cfg.model_dim, n_chunks);

    ag::Var vis = ag::Linear(g.Constant(AlignVisual(visual, t_a)),
                             p["visual_proj.weight"], p["visual_proj.bias"]);
    ag::Var vis_p = ag::GatherRows(vis, pad_idx);
    ag::Var h = ag::GatherRows(enc, pad_idx);
    for (int b = 0; b < cfg.n_blocks; ++b) {
      const std::string pre = BlockPrefix(b);
      ag::Var x = ag::AddConstant(h, pe_intra);
      ag::Var a = Attention(p, pre + ".intra_attn", x, x, chunk, cfg.n_heads, valid);
      h = Norm(p, pre + ".intra_norm1", ag::Add(x, a));
      h = Norm(p, pre + ".intra_norm2",
               ag::Add(h, FeedForward(p, pre + ".intra_ffn", h)));
      ag::Var c = Attention(p, pre + ".cross_attn", h, vis_p, chunk,
                            cfg.n_heads, valid);
      h = Norm(p, pre + ".cross_norm", ag::Add(h, c));

      ag::Var y = ag::AddConstant(ag::GatherRows(h, to_inter), pe_inter);
      a = Attention(p, pre + ".inter_attn", y, y, n_chunks, cfg.n_heads,
                    valid_inter);
      y = Norm(p, pre + ".inter_norm1", ag::Add(y, a));
      y = Norm(p, pre + ".inter_norm2",
               ag::Add(y, FeedForward(p, pre + ".inter_ffn", y)));
      h = ag::GatherRows(y, from_inter);
    }
    mask = ag::Sigmoid(ag::Linear(ag::GatherRows(h, trim_idx), p["mask.weight"],
                                  p["mask.bias"]));
    masked = ag::Mul(enc, mask);
  }
  ag::Var frames = ag::MatMul(masked, p["decoder.weight"]);
  ag::Var estimate = ag::OverlapAdd(frames, s, length);
  return {estimate, mask};
}

AudioClip Extract(const AudioClip &mixture, const VisualStream &visual,
                  const ModelParams &params, const BackboneConfig &cfg,
                  const ForwardOptions &opts) {
  ag::Graph g;
  BoundParams bound(g, params, /*trainable=*/false);
  ForwardOutputs out = Forward(g, bound, cfg, mixture, visual, opts);
  return FromRow(out.estimate.value(), mixture.sample_rate());
}

}  // namespace avtse
