// Copyright 2026 The avtse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avtse/autograd.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avtse/error.h"

namespace avtse::ag {

const Matrix &Var::value() const { return graph_->Value(*this); }

double Var::scalar() const {
  const Matrix &m = value();
  AVTSE_REQUIRE(m.size() == 1, "scalar() on " + m.ShapeString() + " value");
  return m[0];
}

Var Graph::Constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::Record(Matrix value, std::initializer_list<Var> inputs,
                  BackwardFn fn) {
  bool needs = false;
  for (const Var &v : inputs) {
    if (!v.valid()) continue;
    AVTSE_REQUIRE(v.graph() == this, "mixing vars from different graphs");
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(
      Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, needs});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix *Graph::GradSink(Var v) {
  if (!v.valid()) return nullptr;
  Node &n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty() && !n.value.empty())
    n.grad = Matrix(n.value.rows(), n.value.cols());
  return &n.grad;
}

Matrix Graph::Grad(Var v) const {
  const Node &n = nodes_[v.id()];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::Backward(Var root) {
  AVTSE_REQUIRE(root.graph() == this, "root belongs to another graph");
  AVTSE_REQUIRE(!backward_done_, "Backward may only run once per graph");
  AVTSE_REQUIRE(Value(root).size() == 1, "Backward root must be a scalar");
  backward_done_ = true;
  Matrix *seed = GradSink(root);
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;
  for (int i = root.id(); i >= 0; --i) {
    Node &n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(n.grad);
  }
}

namespace {

void RequireSame(Var a, Var b, const char *op) {
  AVTSE_REQUIRE(a.value().SameShape(b.value()),
                std::string(op) + ": shape mismatch " +
                    a.value().ShapeString() + " vs " +
                    b.value().ShapeString());
}

}  // namespace

Var Add(Var a, Var b) {
  RequireSame(a, b, "Add");
  Graph *g = a.graph();
  Matrix out = a.value();
  out.AddScaled(b.value());
  return g->Record(std::move(out), {a, b}, [g, a, b](const Matrix &dy) {
    if (Matrix *ga = g->GradSink(a)) ga->AddScaled(dy);
    if (Matrix *gb = g->GradSink(b)) gb->AddScaled(dy);
  });
}

Var Sub(Var a, Var b) {
  RequireSame(a, b, "Sub");
  Graph *g = a.graph();
  Matrix out = a.value();
  out.AddScaled(b.value(), -1.0);
  return g->Record(std::move(out), {a, b}, [g, a, b](const Matrix &dy) {
    if (Matrix *ga = g->GradSink(a)) ga->AddScaled(dy);
    if (Matrix *gb = g->GradSink(b)) gb->AddScaled(dy, -1.0);
  });
}

Var Mul(Var a, Var b) {
  RequireSame(a, b, "Mul");
  Graph *g = a.graph();
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  Matrix out(av.rows(), av.cols());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return g->Record(std::move(out), {a, b}, [g, a, b](const Matrix &dy) {
    const Matrix &av = a.value();
    const Matrix &bv = b.value();
    if (Matrix *ga = g->GradSink(a))
      for (size_t i = 0; i < dy.size(); ++i) (*ga)[i] += dy[i] * bv[i];
    if (Matrix *gb = g->GradSink(b))
      for (size_t i = 0; i < dy.size(); ++i) (*gb)[i] += dy[i] * av[i];
  });
}

Var Scale(Var a, double s) {
  Graph *g = a.graph();
  Matrix out = a.value();
  for (double &v : out.values()) v *= s;
  return g->Record(std::move(out), {a}, [g, a, s](const Matrix &dy) {
    if (Matrix *ga = g->GradSink(a)) ga->AddScaled(dy, s);
  });
}

Var AddConstant(Var a, const Matrix &c) {
  Graph *g = a.graph();
  Matrix out = a.value();
  out.AddScaled(c);
  return g->Record(std::move(out), {a}, [g, a](const Matrix &dy) {
    if (Matrix *ga = g->GradSink(a)) ga->AddScaled(dy);
  });
}

Var Relu(Var a) {
  Graph *g = a.graph();
  Matrix out = a.value();
  for (double &v : out.values()) v = v > 0.0 ? v : 0.0;
  return g->Record(std::move(out), {a}, [g, a](const Matrix &dy) {
    Matrix *ga = g->GradSink(a);
    if (!ga) return;
    const Matrix &x = a.value();
    for (size_t i = 0; i < dy.size(); ++i)
      if (x[i] > 0.0) (*ga)[i] += dy[i];
  });
}

Var Sigmoid(Var a) {
  Graph *g = a.graph();
  Matrix out = a.value();
  for (double &v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  Matrix saved = out;
  return g->Record(std::move(out), {a},
                   [g, a, s = std::move(saved)](const Matrix &dy) {
                     Matrix *ga = g->GradSink(a);
                     if (!ga) return;
                     for (size_t i = 0; i < dy.size(); ++i)
                       (*ga)[i] += dy[i] * s[i] * (1.0 - s[i]);
                   });
}

Var Tanh(Var a) {
  Graph *g = a.graph();
  Matrix out = a.value();
  for (double &v : out.values()) v = std::tanh(v);
  Matrix saved = out;
  return g->Record(std::move(out), {a},
                   [g, a, t = std::move(saved)](const Matrix &dy) {
                     Matrix *ga = g->GradSink(a);
                     if (!ga) return;
                     for (size_t i = 0; i < dy.size(); ++i)
                       (*ga)[i] += dy[i] * (1.0 - t[i] * t[i]);
                   });
}

Var Linear(Var x, Var w, Var b) {
  Graph *g = x.graph();
  Matrix out = avtse::MatMul(x.value(), w.value());
  if (b.valid()) {
    const Matrix &bv = b.value();
    AVTSE_REQUIRE(bv.rows() == 1 && bv.cols() == out.cols(),
                  "Linear bias shape " + bv.ShapeString());
    for (int r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (int c = 0; c < out.cols(); ++c) row[c] += bv[c];
    }
  }
  return g->Record(std::move(out), {x, w, b}, [g, x, w, b](const Matrix &dy) {
    if (Matrix *gx = g->GradSink(x))
      gx->AddScaled(avtse::MatMulNT(dy, w.value()));
    if (Matrix *gw = g->GradSink(w))
      gw->AddScaled(avtse::MatMulTN(x.value(), dy));
    if (Matrix *gb = g->GradSink(b)) {
      for (int r = 0; r < dy.rows(); ++r) {
        auto row = dy.row(r);
        for (int c = 0; c < dy.cols(); ++c) (*gb)[c] += row[c];
      }
    }
  });
}

Var MatMul(Var a, Var b) { return Linear(a, b, Var()); }

Var LayerNorm(Var x, Var gain, Var offset, double eps) {
  Graph *g = x.graph();
  const Matrix &xv = x.value();
  const int rows = xv.rows();
  const int d = xv.cols();
  AVTSE_REQUIRE(gain.value().size() == static_cast<size_t>(d) &&
                    offset.value().size() == static_cast<size_t>(d),
                "LayerNorm parameter size mismatch");
  Matrix normed(rows, d);
  std::vector<double> inv_std(rows);
  Matrix out(rows, d);
  const Matrix &gv = gain.value();
  const Matrix &ov = offset.value();
  for (int r = 0; r < rows; ++r) {
    auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= d;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    auto nr = normed.row(r);
    auto orow = out.row(r);
    for (int c = 0; c < d; ++c) {
      nr[c] = (in[c] - mean) * inv_std[r];
      orow[c] = nr[c] * gv[c] + ov[c];
    }
  }
  return g->Record(
      std::move(out), {x, gain, offset},
      [g, x, gain, offset, normed = std::move(normed),
       inv_std = std::move(inv_std)](const Matrix &dy) {
        const int rows = dy.rows();
        const int d = dy.cols();
        const Matrix &gv = gain.value();
        if (Matrix *gg = g->GradSink(gain))
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < d; ++c) (*gg)[c] += dy(r, c) * normed(r, c);
        if (Matrix *go = g->GradSink(offset))
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < d; ++c) (*go)[c] += dy(r, c);
        Matrix *gx = g->GradSink(x);
        if (!gx) return;
        std::vector<double> dn(d);
        for (int r = 0; r < rows; ++r) {
          double mean_dn = 0.0, mean_dn_n = 0.0;
          for (int c = 0; c < d; ++c) {
            dn[c] = dy(r, c) * gv[c];
            mean_dn += dn[c];
            mean_dn_n += dn[c] * normed(r, c);
          }
          mean_dn /= d;
          mean_dn_n /= d;
          auto gr = gx->row(r);
          for (int c = 0; c < d; ++c)
            gr[c] += inv_std[r] * (dn[c] - mean_dn - normed(r, c) * mean_dn_n);
        }
      });
}

Var GatherRows(Var x, std::span<const int> index) {
  Graph *g = x.graph();
  const Matrix &xv = x.value();
  Matrix out(static_cast<int>(index.size()), xv.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    const int src = index[i];
    if (src < 0) continue;
    AVTSE_REQUIRE(src < xv.rows(), "GatherRows index out of range");
    std::copy(xv.row(src).begin(), xv.row(src).end(),
              out.row(static_cast<int>(i)).begin());
  }
  std::vector<int> idx(index.begin(), index.end());
  return g->Record(std::move(out), {x},
                   [g, x, idx = std::move(idx)](const Matrix &dy) {
                     Matrix *gx = g->GradSink(x);
                     if (!gx) return;
                     for (size_t i = 0; i < idx.size(); ++i) {
                       if (idx[i] < 0) continue;
                       auto dst = gx->row(idx[i]);
                       auto src = dy.row(static_cast<int>(i));
                       for (size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                     }
                   });
}

Var MeanRows(Var x) {
  Graph *g = x.graph();
  const Matrix &xv = x.value();
  AVTSE_REQUIRE(xv.rows() > 0, "MeanRows of empty matrix");
  Matrix out(1, xv.cols());
  for (int r = 0; r < xv.rows(); ++r)
    for (int c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  for (double &v : out.values()) v /= xv.rows();
  return g->Record(std::move(out), {x}, [g, x](const Matrix &dy) {
    Matrix *gx = g->GradSink(x);
    if (!gx) return;
    const double inv = 1.0 / gx->rows();
    for (int r = 0; r < gx->rows(); ++r)
      for (int c = 0; c < gx->cols(); ++c) (*gx)(r, c) += dy[c] * inv;
  });
}

Var Sum(Var x) {
  Graph *g = x.graph();
  Matrix out(1, 1, x.value().Sum());
  return g->Record(std::move(out), {x}, [g, x](const Matrix &dy) {
    Matrix *gx = g->GradSink(x);
    if (!gx) return;
    for (double &v : gx->values()) v += dy[0];
  });
}

Var Mean(Var x) {
  const size_t n = x.value().size();
  AVTSE_REQUIRE(n > 0, "Mean of empty matrix");
  return Scale(Sum(x), 1.0 / static_cast<double>(n));
}

Var Frame(Var signal, int kernel, int stride) {
  Graph *g = signal.graph();
  const Matrix &s = signal.value();
  AVTSE_REQUIRE(s.rows() == 1, "Frame expects a 1 x L signal");
  AVTSE_REQUIRE(kernel > 0 && stride > 0, "Frame: kernel/stride must be > 0");
  AVTSE_REQUIRE(s.cols() >= kernel, "Frame: signal shorter than kernel");
  const int frames = (s.cols() - kernel) / stride + 1;
  Matrix out(frames, kernel);
  for (int t = 0; t < frames; ++t)
    std::copy_n(s.data() + static_cast<size_t>(t) * stride, kernel,
                out.row(t).begin());
  return g->Record(std::move(out), {signal},
                   [g, signal, stride](const Matrix &dy) {
                     Matrix *gs = g->GradSink(signal);
                     if (!gs) return;
                     for (int t = 0; t < dy.rows(); ++t) {
                       double *dst = gs->data() + static_cast<size_t>(t) * stride;
                       auto src = dy.row(t);
                       for (size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
                     }
                   });
}

Var OverlapAdd(Var frames, int stride, int out_len) {
  Graph *g = frames.graph();
  const Matrix &f = frames.value();
  AVTSE_REQUIRE(stride > 0 && out_len > 0, "OverlapAdd: bad stride/length");
  Matrix out(1, out_len);
  for (int t = 0; t < f.rows(); ++t) {
    const size_t base = static_cast<size_t>(t) * stride;
    for (int k = 0; k < f.cols() && base + k < static_cast<size_t>(out_len);
         ++k)
      out[base + k] += f(t, k);
  }
  return g->Record(std::move(out), {frames},
                   [g, frames, stride, out_len](const Matrix &dy) {
                     Matrix *gf = g->GradSink(frames);
                     if (!gf) return;
                     for (int t = 0; t < gf->rows(); ++t) {
                       const size_t base = static_cast<size_t>(t) * stride;
                       for (int k = 0; k < gf->cols() &&
                                       base + k < static_cast<size_t>(out_len);
                            ++k)
                         (*gf)(t, k) += dy[base + k];
                     }
                   });
}

Var GroupedAttention(Var q, Var k, Var v, int group, int heads,
                     std::span<const uint8_t> key_valid) {
  Graph *g = q.graph();
  const Matrix &qv = q.value();
  const Matrix &kv = k.value();
  const Matrix &vv = v.value();
  RequireSame(q, k, "GroupedAttention(q,k)");
  RequireSame(q, v, "GroupedAttention(q,v)");
  const int total = qv.rows();
  const int dim = qv.cols();
  AVTSE_REQUIRE(group > 0 && total % group == 0,
                "GroupedAttention: rows not a multiple of group");
  AVTSE_REQUIRE(heads > 0 && dim % heads == 0,
                "GroupedAttention: dim not divisible by heads");
  AVTSE_REQUIRE(key_valid.empty() || key_valid.size() == size_t(total),
                "GroupedAttention: key mask length mismatch");
  const int n_groups = total / group;
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<uint8_t> mask(key_valid.begin(), key_valid.end());
  if (mask.empty()) mask.assign(total, 1);

  // probs laid out [group][head][query][key]
  const size_t gg = static_cast<size_t>(group) * group;
  std::vector<double> probs(static_cast<size_t>(n_groups) * heads * gg, 0.0);
  Matrix out(total, dim);
  std::vector<double> score(group);
  for (int gi = 0; gi < n_groups; ++gi) {
    const int base = gi * group;
    for (int h = 0; h < heads; ++h) {
      const int off = h * dh;
      double *p_block = probs.data() + (static_cast<size_t>(gi) * heads + h) * gg;
      for (int i = 0; i < group; ++i) {
        const double *qi = qv.data() + static_cast<size_t>(base + i) * dim + off;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < group; ++j) {
          if (!mask[base + j]) continue;
          const double *kj =
              kv.data() + static_cast<size_t>(base + j) * dim + off;
          double s = 0.0;
          for (int c = 0; c < dh; ++c) s += qi[c] * kj[c];
          score[j] = s * scale;
          mx = std::max(mx, score[j]);
        }
        if (!std::isfinite(mx)) continue;  // no valid key: zero output
        double z = 0.0;
        double *pi = p_block + static_cast<size_t>(i) * group;
        for (int j = 0; j < group; ++j) {
          if (!mask[base + j]) continue;
          pi[j] = std::exp(score[j] - mx);
          z += pi[j];
        }
        double *oi = out.data() + static_cast<size_t>(base + i) * dim + off;
        for (int j = 0; j < group; ++j) {
          if (!mask[base + j]) continue;
          pi[j] /= z;
          const double *vj =
              vv.data() + static_cast<size_t>(base + j) * dim + off;
          for (int c = 0; c < dh; ++c) oi[c] += pi[j] * vj[c];
        }
      }
    }
  }
  return g->Record(
      std::move(out), {q, k, v},
      [g, q, k, v, group, heads, n_groups, dh, scale,
       probs = std::move(probs)](const Matrix &dy) {
        Matrix *gq = g->GradSink(q);
        Matrix *gk = g->GradSink(k);
        Matrix *gv = g->GradSink(v);
        const Matrix &qv = q.value();
        const Matrix &kv = k.value();
        const Matrix &vv = v.value();
        const int dim = qv.cols();
        const size_t gg = static_cast<size_t>(group) * group;
        std::vector<double> dp(gg), ds(gg);
        for (int gi = 0; gi < n_groups; ++gi) {
          const int base = gi * group;
          for (int h = 0; h < heads; ++h) {
            const int off = h * dh;
            const double *p =
                probs.data() + (static_cast<size_t>(gi) * heads + h) * gg;
            // dP = dO V^T ; dV += P^T dO
            for (int i = 0; i < group; ++i) {
              const double *doi =
                  dy.data() + static_cast<size_t>(base + i) * dim + off;
              for (int j = 0; j < group; ++j) {
                const double pij = p[static_cast<size_t>(i) * group + j];
                const double *vj =
                    vv.data() + static_cast<size_t>(base + j) * dim + off;
                double s = 0.0;
                for (int c = 0; c < dh; ++c) s += doi[c] * vj[c];
                dp[static_cast<size_t>(i) * group + j] = s;
                if (gv && pij != 0.0) {
                  double *gvj =
                      gv->data() + static_cast<size_t>(base + j) * dim + off;
                  for (int c = 0; c < dh; ++c) gvj[c] += pij * doi[c];
                }
              }
            }
            if (!gq && !gk) continue;
            // dS = P .* (dP - rowsum(dP .* P))
            for (int i = 0; i < group; ++i) {
              const size_t r = static_cast<size_t>(i) * group;
              double dot = 0.0;
              for (int j = 0; j < group; ++j) dot += dp[r + j] * p[r + j];
              for (int j = 0; j < group; ++j)
                ds[r + j] = p[r + j] * (dp[r + j] - dot) * scale;
            }
            for (int i = 0; i < group; ++i) {
              const size_t r = static_cast<size_t>(i) * group;
              const double *qi =
                  qv.data() + static_cast<size_t>(base + i) * dim + off;
              double *gqi = gq ? gq->data() + static_cast<size_t>(base + i) *
                                                    dim + off
                               : nullptr;
              for (int j = 0; j < group; ++j) {
                const double d = ds[r + j];
                if (d == 0.0) continue;
                if (gqi) {
                  const double *kj =
                      kv.data() + static_cast<size_t>(base + j) * dim + off;
                  for (int c = 0; c < dh; ++c) gqi[c] += d * kj[c];
                }
                if (gk) {
                  double *gkj =
                      gk->data() + static_cast<size_t>(base + j) * dim + off;
                  for (int c = 0; c < dh; ++c) gkj[c] += d * qi[c];
                }
              }
            }
          }
        }
      });
}

Var MseLoss(Var a, Var b) {
  RequireSame(a, b, "MseLoss");
  Graph *g = a.graph();
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  AVTSE_REQUIRE(av.size() > 0, "MseLoss of empty matrices");
  double s = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double n = static_cast<double>(av.size());
  return g->Record(Matrix(1, 1, s / n), {a, b}, [g, a, b, n](const Matrix &dy) {
    const Matrix &av = a.value();
    const Matrix &bv = b.value();
    const double c = 2.0 * dy[0] / n;
    Matrix *ga = g->GradSink(a);
    Matrix *gb = g->GradSink(b);
    for (size_t i = 0; i < av.size(); ++i) {
      const double d = c * (av[i] - bv[i]);
      if (ga) (*ga)[i] += d;
      if (gb) (*gb)[i] -= d;
    }
  });
}

Var SquaredDistanceLogits(Var features, const Matrix &centroids,
                          double temperature) {
  Graph *g = features.graph();
  const Matrix &f = features.value();
  AVTSE_REQUIRE(temperature > 0.0, "temperature must be positive");
  AVTSE_REQUIRE(f.cols() == centroids.cols(),
                "feature/codebook dimension mismatch: " + f.ShapeString() +
                    " vs " + centroids.ShapeString());
  const int t_len = f.rows();
  const int k_len = centroids.rows();
  const int d = f.cols();
  Matrix out(t_len, k_len);
  for (int t = 0; t < t_len; ++t) {
    auto ft = f.row(t);
    for (int k = 0; k < k_len; ++k) {
      auto ck = centroids.row(k);
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = ft[c] - ck[c];
        s += diff * diff;
      }
      out(t, k) = -s / temperature;
    }
  }
  return g->Record(std::move(out), {features},
                   [g, features, centroids, temperature](const Matrix &dy) {
                     Matrix *gf = g->GradSink(features);
                     if (!gf) return;
                     const Matrix &f = features.value();
                     const double c2 = -2.0 / temperature;
                     for (int t = 0; t < f.rows(); ++t) {
                       auto ft = f.row(t);
                       auto gt = gf->row(t);
                       for (int k = 0; k < centroids.rows(); ++k) {
                         const double w = dy(t, k) * c2;
                         auto ck = centroids.row(k);
                         for (int c = 0; c < f.cols(); ++c)
                           gt[c] += w * (ft[c] - ck[c]);
                       }
                     }
                   });
}

Var CrossEntropyLoss(Var logits, std::span<const int> targets) {
  Graph *g = logits.graph();
  const Matrix &lv = logits.value();
  AVTSE_REQUIRE(static_cast<size_t>(lv.rows()) == targets.size() &&
                    lv.rows() > 0,
                "CrossEntropyLoss: target count does not match logits rows");
  Matrix probs(lv.rows(), lv.cols());
  double total = 0.0;
  for (int t = 0; t < lv.rows(); ++t) {
    const int y = targets[t];
    AVTSE_REQUIRE(y >= 0 && y < lv.cols(),
                  "token " + std::to_string(y) + " out of range [0, " +
                      std::to_string(lv.cols()) + ")");
    auto row = lv.row(t);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (int k = 0; k < lv.cols(); ++k) {
      probs(t, k) = std::exp(row[k] - mx);
      z += probs(t, k);
    }
    for (int k = 0; k < lv.cols(); ++k) probs(t, k) /= z;
    total += -(row[y] - mx - std::log(z));
  }
  const double n = lv.rows();
  std::vector<int> tgt(targets.begin(), targets.end());
  return g->Record(
      Matrix(1, 1, total / n), {logits},
      [g, logits, n, probs = std::move(probs),
       tgt = std::move(tgt)](const Matrix &dy) {
        Matrix *gl = g->GradSink(logits);
        if (!gl) return;
        const double c = dy[0] / n;
        for (int t = 0; t < probs.rows(); ++t) {
          for (int k = 0; k < probs.cols(); ++k)
            (*gl)(t, k) += c * probs(t, k);
          (*gl)(t, tgt[t]) -= c;
        }
      });
}

}  // namespace avtse::ag
