#pragma once

#include <string>
#include <vector>

#include "hgre/autodiff.hpp"
#include "hgre/lexicon.hpp"
#include "hgre/schema.hpp"

namespace hgre {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 128;
  int n_heads = 4;
  int n_layers = 2;
  int ffn_mult = 2;
  int context_window = 512;  // W; every packed sequence must fit

  int head_dim() const { return d_model / n_heads; }
  void validate() const;
};

// Token <-> id map. Marker tokens occupy fixed low ids; unknown tokens map
// to [UNK].
class Vocab {
 public:
  static constexpr const char* kUnk = "[UNK]";
  static constexpr const char* kObjOpen = "[O]";
  static constexpr const char* kObjClose = "[/O]";
  static constexpr const char* kSubjOpen = "[S]";
  static constexpr const char* kSubjClose = "[/S]";

  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);  // full list incl. specials
  static Vocab build(const std::vector<Document>& docs);

  int id(const std::string& token) const;
  int unk_id() const { return 0; }
  int obj_open_id() const { return 1; }
  int obj_close_id() const { return 2; }
  int subj_open_id() const { return 3; }
  int subj_close_id() const { return 4; }
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;  // one token per line
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct MarkerPair {
  int open = -1;
  int close = -1;  // sequence indices
};

// One packed sequence: the in-line prefix (context + sentence + any solid
// markers) followed by levitated marker pairs. Levitated markers share the
// position assignment of their span's boundary tokens and are invisible to
// in-line tokens; they see the whole in-line prefix and their own partner.
struct PackedInput {
  std::vector<int> ids;
  std::vector<int> positions;
  std::vector<int> orig_pos;  // seq idx -> center-sentence token position, -1 for markers/context
  int inline_len = 0;
  MarkerPair subject;                // solid markers, if present
  std::vector<MarkerPair> pairs;     // levitated pairs in packed order
  std::vector<int> span_of_pair;     // caller's span index per pair

  int length() const { return static_cast<int>(ids.size()); }
  Eigen::MatrixXd visibility() const;  // additive attention mask, 0 / -1e9
};

// Packs spans as levitated marker pairs over the plain sentence, splitting
// into window-bounded groups of neighboring spans; the groups cover the
// requested span list exactly once, in order.
std::vector<PackedInput> pack_neighborhood(const Vocab& vocab,
                                           const std::vector<std::string>& tokens,
                                           const std::vector<SpanRef>& spans,
                                           const EncoderConfig& cfg,
                                           const std::vector<std::string>& left_ctx = {},
                                           const std::vector<std::string>& right_ctx = {});

// Solid markers in-line around the subject span plus one levitated pair per
// object span. Objects overflow into extra sequences that repeat the subject
// markers. span_of_pair holds indices into `objects`.
std::vector<PackedInput> pack_subject_oriented(const Vocab& vocab,
                                               const std::vector<std::string>& tokens,
                                               const SpanRef& subject,
                                               const std::vector<SpanRef>& objects,
                                               const EncoderConfig& cfg,
                                               const std::vector<std::string>& left_ctx = {},
                                               const std::vector<std::string>& right_ctx = {});

class TransformerEncoder {
 public:
  TransformerEncoder(ad::ParamStore& store, const std::string& prefix, const EncoderConfig& cfg,
                     Rng& init_rng);

  // General representation H_G, one row per packed sequence position.
  ad::Var encode(ad::Tape& t, const PackedInput& packed) const;

  const EncoderConfig& config() const { return cfg_; }
  std::vector<ad::Parameter*> parameters() const { return params_; }

 private:
  EncoderConfig cfg_;
  ad::Parameter* tok_emb_;
  ad::Parameter* pos_emb_;
  struct Layer {
    ad::Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    ad::Parameter *ln1_g, *ln1_b, *ln2_g, *ln2_b;
    ad::Parameter *ffn_w1, *ffn_b1, *ffn_w2, *ffn_b2;
  };
  std::vector<Layer> layers_;
  std::vector<ad::Parameter*> params_;
};

// Dictionary-gated attention layer fusing the general representation with a
// domain-specific one: per head, attention logits are masked so query a may
// only attend key b when the sentence subsequence [a..b] is a lexicon term.
// Output: H_Legal = omega * (lambda * H_G + (1 - lambda) * H_L), lambda a
// learnable scalar.
class LegalAugment {
 public:
  struct Config {
    int d_model = 128;
    int n_heads = 4;
    int ffn_mult = 2;
    double omega = 0.5;
    double lambda_init = 1.0;
  };

  struct Output {
    ad::Var h_legal;
    ad::Var h_l;
    std::vector<ad::Var> attn;  // per-head attention rows (for inspection)
  };

  LegalAugment(ad::ParamStore& store, const std::string& prefix, const Config& cfg, Rng& init_rng);

  Output fuse_detail(ad::Tape& t, ad::Var h_g, const MaskMatrix& mask,
                     const PackedInput& packed) const;
  ad::Var fuse(ad::Tape& t, ad::Var h_g, const MaskMatrix& mask, const PackedInput& packed) const {
    return fuse_detail(t, h_g, mask, packed).h_legal;
  }

  const Config& config() const { return cfg_; }
  std::vector<ad::Parameter*> parameters() const { return params_; }
  ad::Parameter* lambda_param() const { return lambda_; }

 private:
  Config cfg_;
  ad::Parameter *wq_, *bq_, *wk_, *bk_, *wv_, *bv_, *wo_, *bo_;
  ad::Parameter *ffn_w1_, *ffn_b1_, *ffn_w2_, *ffn_b2_;
  ad::Parameter* lambda_;
  std::vector<ad::Parameter*> params_;
};

}  // namespace hgre
