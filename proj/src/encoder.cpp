#include "hgre/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace hgre {

using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {
constexpr double kMaskedLogit = -1e9;
}

void EncoderConfig::validate() const {
  if (d_model % n_heads != 0)
    throw ValidationError("encoder: d_model must be divisible by n_heads");
  if (vocab_size <= 0) throw ValidationError("encoder: vocab_size not set");
  if (n_layers < 1) throw ValidationError("encoder: need at least one layer");
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
  if (tokens_.size() < 5 || tokens_[0] != kUnk || tokens_[1] != kObjOpen ||
      tokens_[2] != kObjClose || tokens_[3] != kSubjOpen || tokens_[4] != kSubjClose)
    throw ValidationError("vocab: malformed special-token prefix");
}

Vocab Vocab::build(const std::vector<Document>& docs) {
  std::set<std::string> seen;
  for (const auto& d : docs)
    for (const auto& t : d.tokens) seen.insert(t);
  std::vector<std::string> tokens = {kUnk, kObjOpen, kObjClose, kSubjOpen, kSubjClose};
  tokens.insert(tokens.end(), seen.begin(), seen.end());
  return Vocab(std::move(tokens));
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id() : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocab: cannot write " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("vocab: cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

Eigen::MatrixXd PackedInput::visibility() const {
  const int L = length();
  Mat vis = Mat::Constant(L, L, kMaskedLogit);
  vis.topLeftCorner(inline_len, inline_len).setZero();
  for (const auto& p : pairs) {
    // Levitated markers see the in-line prefix and their own pair.
    vis.row(p.open).head(inline_len).setZero();
    vis.row(p.close).head(inline_len).setZero();
    vis(p.open, p.open) = 0.0;
    vis(p.open, p.close) = 0.0;
    vis(p.close, p.open) = 0.0;
    vis(p.close, p.close) = 0.0;
  }
  return vis;
}

namespace {

// In-line prefix shared by both packing schemes: left context, sentence
// (with optional solid markers), right context.
struct InlineLayout {
  std::vector<int> ids;
  std::vector<int> orig_pos;
  int center_offset = 0;  // packed index of sentence token 0 (before any solid shift)
};

InlineLayout build_inline(const Vocab& vocab, const std::vector<std::string>& tokens,
                          const std::vector<std::string>& left_ctx,
                          const std::vector<std::string>& right_ctx) {
  InlineLayout out;
  for (const auto& t : left_ctx) {
    out.ids.push_back(vocab.id(t));
    out.orig_pos.push_back(-1);
  }
  out.center_offset = static_cast<int>(out.ids.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    out.ids.push_back(vocab.id(tokens[i]));
    out.orig_pos.push_back(static_cast<int>(i));
  }
  for (const auto& t : right_ctx) {
    out.ids.push_back(vocab.id(t));
    out.orig_pos.push_back(-1);
  }
  return out;
}

void append_pair(PackedInput& p, const Vocab& vocab, int open_inline_idx, int close_inline_idx,
                 int span_index) {
  MarkerPair mp;
  mp.open = static_cast<int>(p.ids.size());
  p.ids.push_back(vocab.obj_open_id());
  p.positions.push_back(p.positions[open_inline_idx]);
  p.orig_pos.push_back(-1);
  mp.close = static_cast<int>(p.ids.size());
  p.ids.push_back(vocab.obj_close_id());
  p.positions.push_back(p.positions[close_inline_idx]);
  p.orig_pos.push_back(-1);
  p.pairs.push_back(mp);
  p.span_of_pair.push_back(span_index);
}

}  // namespace

std::vector<PackedInput> pack_neighborhood(const Vocab& vocab,
                                           const std::vector<std::string>& tokens,
                                           const std::vector<SpanRef>& spans,
                                           const EncoderConfig& cfg,
                                           const std::vector<std::string>& left_ctx,
                                           const std::vector<std::string>& right_ctx) {
  const InlineLayout layout = build_inline(vocab, tokens, left_ctx, right_ctx);
  const int inline_len = static_cast<int>(layout.ids.size());
  if (inline_len > cfg.context_window)
    throw ValidationError("pack_neighborhood: sentence exceeds context window");
  const int capacity = (cfg.context_window - inline_len) / 2;
  if (!spans.empty() && capacity < 1)
    throw ValidationError("pack_neighborhood: no room for a marker pair within the window");

  auto make_base = [&] {
    PackedInput p;
    p.ids = layout.ids;
    p.orig_pos = layout.orig_pos;
    p.inline_len = inline_len;
    p.positions.resize(inline_len);
    for (int i = 0; i < inline_len; ++i) p.positions[i] = i;
    return p;
  };

  std::vector<PackedInput> groups;
  if (spans.empty()) {
    groups.push_back(make_base());
    return groups;
  }
  for (size_t at = 0; at < spans.size(); at += static_cast<size_t>(capacity)) {
    PackedInput p = make_base();
    const size_t hi = std::min(spans.size(), at + static_cast<size_t>(capacity));
    for (size_t s = at; s < hi; ++s) {
      const int open_idx = layout.center_offset + spans[s].start;
      const int close_idx = layout.center_offset + spans[s].end;
      append_pair(p, vocab, open_idx, close_idx, static_cast<int>(s));
    }
    groups.push_back(std::move(p));
  }
  return groups;
}

std::vector<PackedInput> pack_subject_oriented(const Vocab& vocab,
                                               const std::vector<std::string>& tokens,
                                               const SpanRef& subject,
                                               const std::vector<SpanRef>& objects,
                                               const EncoderConfig& cfg,
                                               const std::vector<std::string>& left_ctx,
                                               const std::vector<std::string>& right_ctx) {
  const int n = static_cast<int>(tokens.size());
  if (subject.start < 0 || subject.end >= n || subject.start > subject.end)
    throw ValidationError("pack_subject_oriented: subject span out of range");

  // Solid markers shift the subject by one and everything after it by two.
  auto packed_idx = [&](int orig, int center_offset) {
    if (orig < subject.start) return center_offset + orig;
    if (orig <= subject.end) return center_offset + orig + 1;
    return center_offset + orig + 2;
  };

  const InlineLayout plain = build_inline(vocab, tokens, left_ctx, right_ctx);
  InlineLayout layout;
  layout.center_offset = plain.center_offset;
  for (int i = 0; i < static_cast<int>(plain.ids.size()); ++i) {
    const int orig = plain.orig_pos[i];
    if (orig == subject.start) {
      layout.ids.push_back(vocab.subj_open_id());
      layout.orig_pos.push_back(-1);
    }
    layout.ids.push_back(plain.ids[i]);
    layout.orig_pos.push_back(orig);
    if (orig == subject.end) {
      layout.ids.push_back(vocab.subj_close_id());
      layout.orig_pos.push_back(-1);
    }
  }
  const int inline_len = static_cast<int>(layout.ids.size());
  if (inline_len > cfg.context_window)
    throw ValidationError("pack_subject_oriented: sentence plus solid markers exceeds window");
  const int capacity = (cfg.context_window - inline_len) / 2;
  if (!objects.empty() && capacity < 1)
    throw ValidationError("pack_subject_oriented: no room for an object marker pair");

  auto make_base = [&] {
    PackedInput p;
    p.ids = layout.ids;
    p.orig_pos = layout.orig_pos;
    p.inline_len = inline_len;
    p.positions.resize(inline_len);
    for (int i = 0; i < inline_len; ++i) p.positions[i] = i;
    p.subject.open = packed_idx(subject.start, layout.center_offset) - 1;
    p.subject.close = packed_idx(subject.end, layout.center_offset) + 1;
    return p;
  };

  std::vector<PackedInput> groups;
  if (objects.empty()) {
    groups.push_back(make_base());
    return groups;
  }
  for (size_t at = 0; at < objects.size(); at += static_cast<size_t>(capacity)) {
    PackedInput p = make_base();
    const size_t hi = std::min(objects.size(), at + static_cast<size_t>(capacity));
    for (size_t s = at; s < hi; ++s) {
      append_pair(p, vocab, packed_idx(objects[s].start, layout.center_offset),
                  packed_idx(objects[s].end, layout.center_offset), static_cast<int>(s));
    }
    groups.push_back(std::move(p));
  }
  return groups;
}

TransformerEncoder::TransformerEncoder(ad::ParamStore& store, const std::string& prefix,
                                       const EncoderConfig& cfg, Rng& init_rng)
    : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.d_model;
  const int f = cfg_.ffn_mult * d;
  auto mk = [&](const std::string& name, int r, int c, bool zero = false, bool one = false) {
    ad::Parameter* p = store.create(prefix + "." + name, r, c);
    if (one) p->value.setOnes();
    else if (!zero) init_xavier(*p, init_rng);
    params_.push_back(p);
    return p;
  };
  tok_emb_ = store.create(prefix + ".tok_emb", cfg_.vocab_size, d);
  init_normal(*tok_emb_, init_rng, 0.1);
  params_.push_back(tok_emb_);
  pos_emb_ = store.create(prefix + ".pos_emb", cfg_.context_window, d);
  init_normal(*pos_emb_, init_rng, 0.1);
  params_.push_back(pos_emb_);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string lp = "l" + std::to_string(l) + ".";
    Layer lay;
    lay.wq = mk(lp + "wq", d, d);
    lay.bq = mk(lp + "bq", 1, d, true);
    lay.wk = mk(lp + "wk", d, d);
    lay.bk = mk(lp + "bk", 1, d, true);
    lay.wv = mk(lp + "wv", d, d);
    lay.bv = mk(lp + "bv", 1, d, true);
    lay.wo = mk(lp + "wo", d, d);
    lay.bo = mk(lp + "bo", 1, d, true);
    lay.ln1_g = mk(lp + "ln1_g", 1, d, false, true);
    lay.ln1_b = mk(lp + "ln1_b", 1, d, true);
    lay.ln2_g = mk(lp + "ln2_g", 1, d, false, true);
    lay.ln2_b = mk(lp + "ln2_b", 1, d, true);
    lay.ffn_w1 = mk(lp + "ffn_w1", d, f);
    lay.ffn_b1 = mk(lp + "ffn_b1", 1, f, true);
    lay.ffn_w2 = mk(lp + "ffn_w2", f, d);
    lay.ffn_b2 = mk(lp + "ffn_b2", 1, d, true);
    layers_.push_back(lay);
  }
}

Var TransformerEncoder::encode(Tape& t, const PackedInput& packed) const {
  const int L = packed.length();
  if (L > cfg_.context_window)
    throw ValidationError("encode: packed sequence exceeds context window");
  for (int id : packed.ids) {
    if (id < 0 || id >= cfg_.vocab_size) throw ValidationError("encode: token id out of vocab");
  }
  const int dk = cfg_.head_dim();
  Var x = t.add(t.gather_rows(t.param(tok_emb_), packed.ids),
                t.gather_rows(t.param(pos_emb_), packed.positions));
  Var vis = t.constant(packed.visibility());
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (const Layer& lay : layers_) {
    Var q = t.affine(x, t.param(lay.wq), t.param(lay.bq));
    Var k = t.affine(x, t.param(lay.wk), t.param(lay.bk));
    Var v = t.affine(x, t.param(lay.wv), t.param(lay.bv));
    std::vector<Var> heads;
    for (int h = 0; h < cfg_.n_heads; ++h) {
      Var qh = t.slice_cols(q, h * dk, dk);
      Var kh = t.slice_cols(k, h * dk, dk);
      Var vh = t.slice_cols(v, h * dk, dk);
      Var scores = t.add(t.scale(t.matmul(qh, kh, false, true), inv_sqrt_dk), vis);
      heads.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    Var att = t.affine(t.concat_cols(heads), t.param(lay.wo), t.param(lay.bo));
    x = t.layer_norm(t.add(x, att), t.param(lay.ln1_g), t.param(lay.ln1_b));
    Var f = t.affine(t.gelu(t.affine(x, t.param(lay.ffn_w1), t.param(lay.ffn_b1))),
                     t.param(lay.ffn_w2), t.param(lay.ffn_b2));
    x = t.layer_norm(t.add(x, f), t.param(lay.ln2_g), t.param(lay.ln2_b));
  }
  return x;
}

LegalAugment::LegalAugment(ad::ParamStore& store, const std::string& prefix, const Config& cfg,
                           Rng& init_rng)
    : cfg_(cfg) {
  const int d = cfg_.d_model;
  const int f = cfg_.ffn_mult * d;
  auto mk = [&](const std::string& name, int r, int c, bool zero = false) {
    ad::Parameter* p = store.create(prefix + "." + name, r, c);
    if (!zero) init_xavier(*p, init_rng);
    params_.push_back(p);
    return p;
  };
  wq_ = mk("wq", d, d);
  bq_ = mk("bq", 1, d, true);
  wk_ = mk("wk", d, d);
  bk_ = mk("bk", 1, d, true);
  wv_ = mk("wv", d, d);
  bv_ = mk("bv", 1, d, true);
  wo_ = mk("wo", d, d);
  bo_ = mk("bo", 1, d, true);
  ffn_w1_ = mk("ffn_w1", d, f);
  ffn_b1_ = mk("ffn_b1", 1, f, true);
  ffn_w2_ = mk("ffn_w2", f, d);
  ffn_b2_ = mk("ffn_b2", 1, d, true);
  lambda_ = mk("lambda", 1, 1, true);
  lambda_->value(0, 0) = cfg_.lambda_init;
}

LegalAugment::Output LegalAugment::fuse_detail(Tape& t, Var h_g, const MaskMatrix& mask,
                                               const PackedInput& packed) const {
  const int L = static_cast<int>(t.val(h_g).rows());
  const int d = cfg_.d_model;
  const int dk = d / cfg_.n_heads;

  // Query a may attend key b only when both map to sentence positions whose
  // subsequence [a..b] is a dictionary term. Marker and context rows stay
  // fully masked and are zeroed after the feed-forward sublayer.
  Mat mask_add = Mat::Constant(L, L, kMaskedLogit);
  Mat row_live = Mat::Zero(L, 1);
  for (int p = 0; p < L; ++p) {
    const int a = packed.orig_pos[p];
    if (a < 0 || a >= mask.rows()) continue;
    for (int q = 0; q < L; ++q) {
      const int b = packed.orig_pos[q];
      if (b < 0 || b >= mask.cols()) continue;
      if (mask(a, b) != 0.0) {
        mask_add(p, q) = 0.0;
        row_live(p, 0) = 1.0;
      }
    }
  }

  Var q = t.affine(h_g, t.param(wq_), t.param(bq_));
  Var k = t.affine(h_g, t.param(wk_), t.param(bk_));
  Var v = t.affine(h_g, t.param(wv_), t.param(bv_));
  Var mask_v = t.constant(mask_add);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  Output out;
  std::vector<Var> heads;
  for (int h = 0; h < cfg_.n_heads; ++h) {
    Var qh = t.slice_cols(q, h * dk, dk);
    Var kh = t.slice_cols(k, h * dk, dk);
    Var vh = t.slice_cols(v, h * dk, dk);
    Var probs = t.softmax_rows(t.add(t.scale(t.matmul(qh, kh, false, true), inv_sqrt_dk), mask_v));
    out.attn.push_back(probs);
    heads.push_back(t.matmul(probs, vh));
  }
  Var att = t.affine(t.concat_cols(heads), t.param(wo_), t.param(bo_));
  Var h_l = t.affine(t.gelu(t.affine(att, t.param(ffn_w1_), t.param(ffn_b1_))),
                     t.param(ffn_w2_), t.param(ffn_b2_));
  h_l = t.mul_colvec(h_l, t.constant(row_live));
  out.h_l = h_l;

  Var lambda = t.param(lambda_);
  Var one_minus = t.sub(t.ones(1, 1), lambda);
  Var mix = t.add(t.scale_by(h_g, lambda), t.scale_by(h_l, one_minus));
  out.h_legal = t.scale(mix, cfg_.omega);
  return out;
}

}  // namespace hgre
