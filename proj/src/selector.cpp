#include "unveiler/selector.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include "unveiler/heuristics.hpp"
#include "unveiler/rng.hpp"

namespace unveiler {

// ---------------------------------------------------------------------------
// observation

std::size_t Observation::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

namespace {

constexpr double kLayerScale = 3.0;

// mask area relative to the largest disc footprint
double occupancy(std::size_t cells, const Workspace& ws) {
  const double max_cells = std::numbers::pi * std::pow(kMaxRadius / ws.cell_size(), 2);
  return std::min(1.0, static_cast<double>(cells) / max_cells);
}

}  // namespace

Observation featurize(const Scene& scene, std::span<const SegmentMask> masks, int step,
                      int horizon, FeatureMode mode) {
  const Workspace& ws = scene.workspace;
  const SceneRaster raster(scene);
  const OcclusionGraph graph = occlusion_graph(scene);
  const TargetRef target = make_target_ref(scene, masks);
  const NormalizedDistances nd = normalized_distances(masks, target, ws);
  const ObjectInstance& tobj = scene.target();
  const double L = ws.side_length;

  Observation obs;
  obs.tokens.reserve(masks.size());
  double free_sum = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int id = masks[i].object_id.value_or(-1);
    const ObjectInstance& o = scene.object(id);
    const std::size_t idx = scene.index_of(id);
    ObjectToken tok{};
    tok[0] = masks[i].centroid.x / L;
    tok[1] = masks[i].centroid.y / L;
    tok[2] = o.radius / kMaxRadius;
    tok[3] = o.height / kMaxHeight;
    tok[4] = o.layer / kLayerScale;
    tok[5] = raster.visible_fraction(idx);
    tok[6] = nd.edge[i];
    tok[7] = nd.target[i];
    for (const auto& e : graph.edges) {
      if (e.above == id && e.below == scene.target_id) {
        tok[8] = e.cover_fraction;
        tok[9] = 1.0;
      }
    }
    tok[10] = is_free(scene, id) ? 1.0 : 0.0;
    tok[11] = id == scene.target_id ? 1.0 : 0.0;
    free_sum += tok[10];
    obs.tokens.push_back(tok);
  }
  obs.valid.assign(masks.size(), 1);

  const std::size_t tidx = scene.index_of(scene.target_id);
  ObjectToken& t = obs.target;
  t[0] = target.position.x / L;
  t[1] = target.position.y / L;
  t[2] = tobj.radius / kMaxRadius;
  t[3] = tobj.height / kMaxHeight;
  t[4] = tobj.layer / kLayerScale;
  t[5] = raster.visible_fraction(tidx);
  t[6] = target.mask_index ? nd.edge[*target.mask_index]
                           : nd.normalize_edge(ws.boundary_distance(target.position));
  t[7] = 0.0;
  t[10] = is_free(scene, scene.target_id) ? 1.0 : 0.0;
  t[11] = 1.0;

  obs.scene[0] = static_cast<double>(masks.size()) / kMaxSceneObjects;
  obs.scene[1] = t[5];
  obs.scene[2] = masks.empty() ? 0.0 : free_sum / static_cast<double>(masks.size());
  obs.scene[3] = horizon > 0 ? static_cast<double>(step) / horizon : 0.0;

  if (mode == FeatureMode::kImpoverished) {
    obs = impoverish(obs);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      obs.tokens[i][5] = occupancy(masks[i].cells.size(), ws);
    }
    obs.target[5] = target.mask_index ? occupancy(masks[*target.mask_index].cells.size(), ws) : 0.0;
  }
  return obs;
}

Observation impoverish(const Observation& obs) {
  auto strip = [](const ObjectToken& tok) {
    ObjectToken out{};
    out[0] = tok[0];
    out[1] = tok[1];
    out[5] = tok[5];
    out[11] = tok[11];
    return out;
  };
  Observation out;
  out.valid = obs.valid;
  for (const auto& tok : obs.tokens) out.tokens.push_back(strip(tok));
  out.target = strip(obs.target);
  out.scene = {obs.scene[0], 0.0, 0.0, obs.scene[3]};
  return out;
}

// ---------------------------------------------------------------------------
// parameters

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;
using ColVec = Eigen::VectorXd;

template <class T>
using MatMap = Eigen::Map<std::conditional_t<std::is_const_v<T>, const Mat, Mat>>;
template <class T>
using VecMap = Eigen::Map<std::conditional_t<std::is_const_v<T>, const RowVec, RowVec>>;

template <class T>
struct Linear {
  MatMap<T> w;  // in x out
  VecMap<T> b;
};

template <class T>
struct Attention {
  Linear<T> q, k, v, o;
};

template <class T>
struct LayerNorm {
  VecMap<T> gain;
  VecMap<T> bias;
};

template <class T>
struct Block {
  Attention<T> attn;
  LayerNorm<T> ln1;
  Linear<T> ff1;
  Linear<T> ff2;
  LayerNorm<T> ln2;
};

template <class T>
struct Model {
  Linear<T> object_embed;
  Linear<T> target_embed;
  Linear<T> scene_embed;
  Attention<T> cross;
  std::array<Block<T>, kBlocks> blocks;
  Linear<T> policy_hidden;
  Linear<T> policy_out;
  Linear<T> value_out;
};

// Walks the storage order. With a null base it only records the layout.
template <class T>
class Cursor {
 public:
  Cursor(T* base, std::vector<ParamEntry>* record) : base_(base), record_(record) {}

  MatMap<T> mat(const std::string& name, int rows, int cols) {
    T* p = take(name, rows, cols);
    return MatMap<T>(p, rows, cols);
  }
  VecMap<T> vec(const std::string& name, int n) {
    T* p = take(name, 1, n);
    return VecMap<T>(p, n);
  }
  Linear<T> linear(const std::string& name, int in, int out) {
    return Linear<T>{mat(name + ".w", in, out), vec(name + ".b", out)};
  }
  Attention<T> attention(const std::string& name) {
    return Attention<T>{linear(name + ".q", kModelWidth, kModelWidth),
                        linear(name + ".k", kModelWidth, kModelWidth),
                        linear(name + ".v", kModelWidth, kModelWidth),
                        linear(name + ".o", kModelWidth, kModelWidth)};
  }
  LayerNorm<T> layer_norm(const std::string& name) {
    return LayerNorm<T>{vec(name + ".gain", kModelWidth), vec(name + ".bias", kModelWidth)};
  }
  Block<T> block(const std::string& name) {
    return Block<T>{attention(name + ".attn"), layer_norm(name + ".ln1"),
                    linear(name + ".ff1", kModelWidth, kFeedForwardWidth),
                    linear(name + ".ff2", kFeedForwardWidth, kModelWidth),
                    layer_norm(name + ".ln2")};
  }

 private:
  T* take(const std::string& name, int rows, int cols) {
    const std::size_t size = static_cast<std::size_t>(rows) * cols;
    if (record_ != nullptr) record_->push_back({name, rows, cols, offset_});
    T* p = base_ != nullptr ? base_ + offset_ : dummy();
    offset_ += size;
    return p;
  }
  static T* dummy() {
    static std::remove_const_t<T> storage[kFeedForwardWidth * kModelWidth] = {};
    return storage;
  }

  T* base_;
  std::vector<ParamEntry>* record_;
  std::size_t offset_ = 0;
};

template <class T>
Model<T> make_model(T* base, std::vector<ParamEntry>* record = nullptr) {
  Cursor<T> c(base, record);
  return Model<T>{c.linear("object_embed", kTokenFeatures, kModelWidth),
                  c.linear("target_embed", kTokenFeatures, kModelWidth),
                  c.linear("scene_embed", kSceneFeatures, kModelWidth),
                  c.attention("cross"),
                  {{c.block("block0"), c.block("block1")}},
                  c.linear("policy_hidden", kModelWidth, kModelWidth),
                  c.linear("policy_out", kModelWidth, 1),
                  c.linear("value_out", kModelWidth, 1)};
}

}  // namespace

const std::vector<ParamEntry>& parameter_layout() {
  static const std::vector<ParamEntry> layout = [] {
    std::vector<ParamEntry> out;
    make_model<double>(nullptr, &out);
    return out;
  }();
  return layout;
}

std::size_t parameter_count() {
  const auto& l = parameter_layout();
  return l.back().offset + l.back().size();
}

std::span<double> SelectorParameters::block(const std::string& name) {
  for (const auto& e : parameter_layout()) {
    if (e.name == name) return {values.data() + e.offset, e.size()};
  }
  throw std::invalid_argument("unknown parameter block " + name);
}

std::span<const double> SelectorParameters::block(const std::string& name) const {
  for (const auto& e : parameter_layout()) {
    if (e.name == name) return {values.data() + e.offset, e.size()};
  }
  throw std::invalid_argument("unknown parameter block " + name);
}

SelectorParameters init_params(std::uint64_t seed) {
  SelectorParameters p;
  Rng rng(derive_seed(seed, "selector-init"));
  for (const auto& e : parameter_layout()) {
    auto span = std::span<double>(p.values).subspan(e.offset, e.size());
    const bool is_gain = e.name.ends_with(".gain");
    const bool is_bias = e.name.ends_with(".b") || e.name.ends_with(".bias");
    if (is_gain) {
      std::fill(span.begin(), span.end(), 1.0);
    } else if (is_bias) {
      std::fill(span.begin(), span.end(), 0.0);
    } else {
      const double limit = std::sqrt(6.0 / (e.rows + e.cols));
      for (double& v : span) v = rng.uniform(-limit, limit);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

using CModel = Model<const double>;
using GModel = Model<double>;

Mat affine(const Mat& x, const Linear<const double>& l) {
  return (x * l.w).rowwise() + l.b;
}

// accumulates parameter gradients of y = x W + b and returns dL/dx
Mat affine_backward(const Mat& x, const Mat& dy, const Linear<const double>& l,
                    Linear<double>& g) {
  g.w.noalias() += x.transpose() * dy;
  g.b += dy.colwise().sum();
  return dy * l.w.transpose();
}

void softmax_rows(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

struct AttentionCache {
  Mat xq, xkv, q, k, v, o;
  std::array<Mat, kHeads> weights;
};

Mat attention_forward(const Attention<const double>& a, const Mat& xq, const Mat& xkv,
                      AttentionCache& c) {
  c.xq = xq;
  c.xkv = xkv;
  c.q = affine(xq, a.q);
  c.k = affine(xkv, a.k);
  c.v = affine(xkv, a.v);
  c.o.resize(xq.rows(), kModelWidth);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kHeadWidth));
  for (int h = 0; h < kHeads; ++h) {
    const int off = h * kHeadWidth;
    Mat s = c.q.middleCols(off, kHeadWidth) * c.k.middleCols(off, kHeadWidth).transpose() * scale;
    softmax_rows(s);
    c.o.middleCols(off, kHeadWidth) = s * c.v.middleCols(off, kHeadWidth);
    c.weights[h] = std::move(s);
  }
  return affine(c.o, a.o);
}

void attention_backward(const Attention<const double>& a, Attention<double>& g,
                        const AttentionCache& c, const Mat& dout, Mat& dxq, Mat& dxkv) {
  const Mat d_o = affine_backward(c.o, dout, a.o, g.o);
  Mat dq(c.q.rows(), kModelWidth);
  Mat dk(c.k.rows(), kModelWidth);
  Mat dv(c.v.rows(), kModelWidth);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kHeadWidth));
  for (int h = 0; h < kHeads; ++h) {
    const int off = h * kHeadWidth;
    const Mat& w = c.weights[h];
    const auto doh = d_o.middleCols(off, kHeadWidth);
    const Mat dw = doh * c.v.middleCols(off, kHeadWidth).transpose();
    dv.middleCols(off, kHeadWidth) = w.transpose() * doh;
    const ColVec rowdot = (dw.array() * w.array()).rowwise().sum();
    const Mat ds = (w.array() * (dw.colwise() - rowdot).array()).matrix() * scale;
    dq.middleCols(off, kHeadWidth) = ds * c.k.middleCols(off, kHeadWidth);
    dk.middleCols(off, kHeadWidth) = ds.transpose() * c.q.middleCols(off, kHeadWidth);
  }
  dxq = affine_backward(c.xq, dq, a.q, g.q);
  dxkv = affine_backward(c.xkv, dk, a.k, g.k) + affine_backward(c.xkv, dv, a.v, g.v);
}

struct LayerNormCache {
  Mat xhat;
  ColVec inv_std;
};

Mat layer_norm_forward(const LayerNorm<const double>& ln, const Mat& x, LayerNormCache& c) {
  const ColVec mean = x.rowwise().mean();
  const Mat centered = x.colwise() - mean;
  const ColVec var = centered.array().square().rowwise().mean();
  c.inv_std = (var.array() + kLayerNormEps).rsqrt();
  c.xhat = centered.array().colwise() * c.inv_std.array();
  return (c.xhat.array().rowwise() * ln.gain.array()).matrix().rowwise() + ln.bias;
}

Mat layer_norm_backward(const LayerNorm<const double>& ln, LayerNorm<double>& g,
                        const LayerNormCache& c, const Mat& dy) {
  g.gain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  g.bias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * ln.gain.array();
  const ColVec m1 = dxhat.rowwise().mean();
  const ColVec m2 = (dxhat.array() * c.xhat.array()).rowwise().mean();
  Mat dx = dxhat.colwise() - m1;
  dx -= (c.xhat.array().colwise() * m2.array()).matrix();
  return dx.array().colwise() * c.inv_std.array();
}

struct BlockCache {
  AttentionCache attn;
  LayerNormCache ln1;
  Mat h1;
  Mat ff_pre;
  Mat ff_act;
  LayerNormCache ln2;
};

Mat block_forward(const Block<const double>& b, const Mat& x, BlockCache& c) {
  const Mat m = attention_forward(b.attn, x, x, c.attn);
  c.h1 = layer_norm_forward(b.ln1, x + m, c.ln1);
  c.ff_pre = affine(c.h1, b.ff1);
  c.ff_act = c.ff_pre.unaryExpr(&gelu);
  const Mat f = affine(c.ff_act, b.ff2);
  return layer_norm_forward(b.ln2, c.h1 + f, c.ln2);
}

Mat block_backward(const Block<const double>& b, Block<double>& g, const BlockCache& c,
                   const Mat& dout) {
  const Mat dz = layer_norm_backward(b.ln2, g.ln2, c.ln2, dout);
  const Mat dact = affine_backward(c.ff_act, dz, b.ff2, g.ff2);
  const Mat dpre = dact.array() * c.ff_pre.unaryExpr(&gelu_grad).array();
  const Mat dh1 = dz + affine_backward(c.h1, dpre, b.ff1, g.ff1);
  const Mat du = layer_norm_backward(b.ln1, g.ln1, c.ln1, dh1);
  Mat dxq;
  Mat dxkv;
  attention_backward(b.attn, g.attn, c.attn, du, dxq, dxkv);
  return du + dxq + dxkv;
}

struct ForwardCache {
  std::vector<std::size_t> valid_index;  // packed row -> token index
  Mat x;
  Mat t;
  Mat s;
  Mat kv;
  AttentionCache cross;
  std::array<BlockCache, kBlocks> blocks;
  Mat hidden;  // final token states
  Mat policy_pre;
  Mat policy_act;
  Mat pooled;
};

struct PackedOutput {
  ColVec logits;  // one per valid token
  double value = 0.0;
};

PackedOutput forward_packed(const CModel& m, const Observation& obs, ForwardCache& c) {
  c.valid_index.clear();
  for (std::size_t i = 0; i < obs.tokens.size(); ++i) {
    if (i < obs.valid.size() && obs.valid[i]) c.valid_index.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(c.valid_index.size());
  if (n == 0) throw std::invalid_argument("selector input has no valid index");

  c.x.resize(n, kTokenFeatures);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int f = 0; f < kTokenFeatures; ++f) c.x(r, f) = obs.tokens[c.valid_index[r]][f];
  }
  c.t = Eigen::Map<const Mat>(obs.target.data(), 1, kTokenFeatures);
  c.s = Eigen::Map<const Mat>(obs.scene.data(), 1, kSceneFeatures);

  const Mat e = affine(c.x, m.object_embed);
  const Mat q0 = affine(c.t, m.target_embed);
  const Mat g = affine(c.s, m.scene_embed);
  c.kv.resize(n + 1, kModelWidth);
  c.kv.topRows(n) = e;
  c.kv.row(n) = g;
  const Mat ctx = attention_forward(m.cross, q0, c.kv, c.cross);
  Mat h = e.rowwise() + ctx.row(0);
  for (int b = 0; b < kBlocks; ++b) h = block_forward(m.blocks[b], h, c.blocks[b]);
  c.hidden = h;

  c.policy_pre = affine(h, m.policy_hidden);
  c.policy_act = c.policy_pre.unaryExpr(&gelu);
  PackedOutput out;
  out.logits = affine(c.policy_act, m.policy_out).col(0);
  c.pooled = h.colwise().mean();
  out.value = affine(c.pooled, m.value_out)(0, 0);
  return out;
}

void backward_packed(const CModel& m, GModel& g, const ForwardCache& c, const ColVec& dlogits,
                     double dvalue) {
  const auto n = c.hidden.rows();
  // heads
  Mat dh = Mat::Zero(n, kModelWidth);
  {
    const Mat dv = Mat::Constant(1, 1, dvalue);
    const Mat dpooled = affine_backward(c.pooled, dv, m.value_out, g.value_out);
    dh.rowwise() += dpooled.row(0) / static_cast<double>(n);
  }
  {
    const Mat dl = dlogits;
    const Mat dact = affine_backward(c.policy_act, dl, m.policy_out, g.policy_out);
    const Mat dpre = dact.array() * c.policy_pre.unaryExpr(&gelu_grad).array();
    dh += affine_backward(c.hidden, dpre, m.policy_hidden, g.policy_hidden);
  }
  for (int b = kBlocks - 1; b >= 0; --b) dh = block_backward(m.blocks[b], g.blocks[b], c.blocks[b], dh);

  // h0 = e + ctx broadcast
  const Mat dctx = dh.colwise().sum();
  Mat dq0;
  Mat dkv;
  attention_backward(m.cross, g.cross, c.cross, dctx, dq0, dkv);
  const Mat de = dh + dkv.topRows(n);
  affine_backward(c.x, de, m.object_embed, g.object_embed);
  affine_backward(c.t, dq0, m.target_embed, g.target_embed);
  affine_backward(c.s, dkv.bottomRows(1), m.scene_embed, g.scene_embed);
}

SelectorOutput unpack(const PackedOutput& p, const ForwardCache& c, std::size_t n_tokens) {
  SelectorOutput out;
  out.logits.assign(n_tokens, -std::numeric_limits<double>::infinity());
  out.probabilities.assign(n_tokens, 0.0);
  const double mx = p.logits.maxCoeff();
  double z = 0.0;
  for (Eigen::Index r = 0; r < p.logits.size(); ++r) z += std::exp(p.logits(r) - mx);
  for (Eigen::Index r = 0; r < p.logits.size(); ++r) {
    out.logits[c.valid_index[r]] = p.logits(r);
    out.probabilities[c.valid_index[r]] = std::exp(p.logits(r) - mx) / z;
  }
  out.value = p.value;
  return out;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct SampleGrad {
  LossTerms terms;
  ColVec dlogits;
  double dvalue = 0.0;
};

// loss of one sample and its gradient w.r.t. the packed logits and value
SampleGrad sample_loss(const PackedOutput& p, const ForwardCache& c, const LossSpec& spec) {
  const auto n = p.logits.size();
  auto packed_index = [&](std::size_t token) -> Eigen::Index {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (c.valid_index[r] == token) return r;
    }
    throw std::invalid_argument("loss refers to an invalid index");
  };
  const double mx = p.logits.maxCoeff();
  const ColVec shifted = p.logits.array() - mx;
  const double lse = std::log(shifted.array().exp().sum());
  const ColVec logp = shifted.array() - lse;
  const ColVec prob = logp.array().exp();
  const double ent = -(prob.array() * logp.array()).sum();

  SampleGrad out;
  out.dlogits = ColVec::Zero(n);
  out.terms.entropy = ent;
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&spec)) {
    const Eigen::Index a = packed_index(ce->label);
    out.terms.policy = -logp(a);
    out.terms.loss = out.terms.policy;
    out.dlogits = prob;
    out.dlogits(a) -= 1.0;
    return out;
  }
  const auto& ppo = std::get<PpoLoss>(spec);
  const Eigen::Index a = packed_index(ppo.action);
  const double ratio = std::exp(logp(a) - ppo.old_log_prob);
  const double unclipped = ratio * ppo.advantage;
  const double clipped = std::clamp(ratio, 1.0 - ppo.clip, 1.0 + ppo.clip) * ppo.advantage;
  out.terms.policy = -std::min(unclipped, clipped);
  const double verr = p.value - ppo.value_target;
  out.terms.value = 0.5 * verr * verr;
  out.terms.loss = out.terms.policy + ppo.value_coef * out.terms.value - ppo.entropy_coef * ent;

  if (unclipped <= clipped) {
    // d(-ratio * A)/dlogp_a = -ratio * A; dlogp_a/dz = onehot - p
    const double dlogp = -unclipped;
    out.dlogits = -dlogp * prob;
    out.dlogits(a) += dlogp;
  }
  // d(-c * H)/dz_i = c * p_i (log p_i + H)
  out.dlogits.array() += ppo.entropy_coef * prob.array() * (logp.array() + ent);
  out.dvalue = ppo.value_coef * verr;
  return out;
}

}  // namespace

SelectorOutput forward(const SelectorParameters& params, const Observation& obs) {
  const CModel m = make_model<const double>(params.values.data());
  ForwardCache c;
  const PackedOutput p = forward_packed(m, obs, c);
  return unpack(p, c, obs.tokens.size());
}

std::size_t select(const SelectorOutput& output, SelectMode mode, std::uint64_t seed) {
  const auto& p = output.probabilities;
  if (p.empty()) throw std::invalid_argument("empty selector output");
  if (mode == SelectMode::kArgmax) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    return best;
  }
  Rng rng(seed);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

double log_prob(const SelectorOutput& output, std::size_t index) {
  const auto& z = output.logits;
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z) {
    if (std::isfinite(v)) s += std::exp(v - mx);
  }
  return z[index] - mx - std::log(s);
}

double entropy(const SelectorOutput& output) {
  double h = 0.0;
  for (std::size_t i = 0; i < output.probabilities.size(); ++i) {
    const double p = output.probabilities[i];
    if (p > 0.0) h -= p * log_prob(output, i);
  }
  return h;
}

GradientResult grad(const SelectorParameters& params, std::span<const TrainingSample> batch) {
  GradientResult out;
  if (batch.empty()) return out;
  const CModel m = make_model<const double>(params.values.data());
  GModel g = make_model<double>(out.gradient.values.data());
  const double inv = 1.0 / static_cast<double>(batch.size());
  ForwardCache c;
  for (const auto& sample : batch) {
    const PackedOutput p = forward_packed(m, *sample.observation, c);
    SampleGrad sg = sample_loss(p, c, sample.loss);
    if (!std::isfinite(sg.terms.loss) || !sg.dlogits.allFinite() || !std::isfinite(sg.dvalue)) {
      throw NumericError("non-finite selector loss");
    }
    out.mean.loss += sg.terms.loss * inv;
    out.mean.policy += sg.terms.policy * inv;
    out.mean.value += sg.terms.value * inv;
    out.mean.entropy += sg.terms.entropy * inv;
    backward_packed(m, g, c, sg.dlogits * inv, sg.dvalue * inv);
  }
  if (!all_finite(out.gradient.values)) throw NumericError("non-finite selector gradient");
  return out;
}

LossTerms batch_loss(const SelectorParameters& params, std::span<const TrainingSample> batch) {
  LossTerms out;
  if (batch.empty()) return out;
  const CModel m = make_model<const double>(params.values.data());
  const double inv = 1.0 / static_cast<double>(batch.size());
  ForwardCache c;
  for (const auto& sample : batch) {
    const PackedOutput p = forward_packed(m, *sample.observation, c);
    const SampleGrad sg = sample_loss(p, c, sample.loss);
    if (!std::isfinite(sg.terms.loss)) throw NumericError("non-finite selector loss");
    out.loss += sg.terms.loss * inv;
    out.policy += sg.terms.policy * inv;
    out.value += sg.terms.value * inv;
    out.entropy += sg.terms.entropy * inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// optimizer

Adam::Adam(AdamConfig config)
    : config_(config), m_(parameter_count(), 0.0), v_(parameter_count(), 0.0) {}

void Adam::step(SelectorParameters& params, const SelectorParameters& gradient) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double gi = gradient.values[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * gi;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * gi * gi;
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params.values[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
  }
}

double global_norm(const SelectorParameters& gradient) {
  double s = 0.0;
  for (double v : gradient.values) s += v * v;
  return std::sqrt(s);
}

double clip_global_norm(SelectorParameters& gradient, double max_norm) {
  const double n = global_norm(gradient);
  if (n > max_norm && n > 0.0) {
    const double scale = max_norm / n;
    for (double& v : gradient.values) v *= scale;
  }
  return n;
}

}  // namespace unveiler
