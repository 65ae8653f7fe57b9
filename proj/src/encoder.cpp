#include "unicorn/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace unicorn {

void init_encoder_params(ParamStore& ps, const EncoderConfig& cfg, Rng& rng) {
  if (cfg.dim % cfg.heads != 0)
    throw std::invalid_argument("encoder dim must be divisible by head count");
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    ps.add("gcn." + std::to_string(l) + ".w", xavier_uniform(cfg.dim, cfg.dim, rng));
    ps.add("gcn." + std::to_string(l) + ".b", xavier_uniform(cfg.dim, cfg.dim, rng));
  }
  for (int l = 0; l < cfg.tf_layers; ++l) {
    std::string p = "tf." + std::to_string(l) + ".";
    ps.add(p + "wq", xavier_uniform(cfg.dim, cfg.dim, rng));
    ps.add(p + "wk", xavier_uniform(cfg.dim, cfg.dim, rng));
    ps.add(p + "wv", xavier_uniform(cfg.dim, cfg.dim, rng));
    ps.add(p + "wo", xavier_uniform(cfg.dim, cfg.dim, rng));
    ps.add(p + "ffn.w1", xavier_uniform(cfg.dim, cfg.ffn_dim, rng));
    ps.add(p + "ffn.b1", Matrix::Zero(1, cfg.ffn_dim));
    ps.add(p + "ffn.w2", xavier_uniform(cfg.ffn_dim, cfg.dim, rng));
    ps.add(p + "ffn.b2", Matrix::Zero(1, cfg.dim));
    ps.add(p + "ln.gamma", Matrix::Ones(1, cfg.dim));
    ps.add(p + "ln.beta", Matrix::Zero(1, cfg.dim));
  }
}

CsrMatrix adjacency_csr(const WeightedSubgraph& sg) {
  int n = static_cast<int>(sg.nodes.size());
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(sg.edges.size() * 2);
  for (const auto& [i, j, w] : sg.edges) {
    trip.emplace_back(i, j, w);
    trip.emplace_back(j, i, w);
  }
  return CsrMatrix::from_triplets(n, n, trip);
}

CsrMatrix normalize_adjacency(const CsrMatrix& a) {
  std::vector<double> degree(a.rows, 0.0);
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) degree[r] += a.values[k];
  CsrMatrix lam = a;
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      double dd = degree[r] * degree[a.col_idx[k]];
      lam.values[k] = dd > 0.0 ? a.values[k] / std::sqrt(dd) : 0.0;
    }
  return lam;
}

Matrix sinusoidal_pe(int len, int dim) {
  Matrix pe(len, dim);
  for (int pos = 0; pos < len; ++pos)
    for (int i = 0; i < dim; ++i) {
      double exponent = static_cast<double>(i - (i % 2)) / dim;
      double angle = pos / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

Matrix subgraph_features(const WeightedSubgraph& sg, const EmbeddingTable& emb) {
  Matrix feats(static_cast<int>(sg.nodes.size()), emb.dim);
  for (size_t i = 0; i < sg.nodes.size(); ++i) feats.row(static_cast<int>(i)) = emb.row(sg.nodes[i]);
  return feats;
}

EncoderVars map_encoder_vars(const ParamStore& ps, const std::vector<TVar>& attached,
                             const EncoderConfig& cfg) {
  auto at = [&](const std::string& name) { return attached[ps.find(name)]; };
  EncoderVars v;
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    v.gcn_w.push_back(at("gcn." + std::to_string(l) + ".w"));
    v.gcn_b.push_back(at("gcn." + std::to_string(l) + ".b"));
  }
  for (int l = 0; l < cfg.tf_layers; ++l) {
    std::string p = "tf." + std::to_string(l) + ".";
    EncoderVars::TfLayer layer;
    layer.wq = at(p + "wq");
    layer.wk = at(p + "wk");
    layer.wv = at(p + "wv");
    layer.wo = at(p + "wo");
    layer.ffn_w1 = at(p + "ffn.w1");
    layer.ffn_b1 = at(p + "ffn.b1");
    layer.ffn_w2 = at(p + "ffn.w2");
    layer.ffn_b2 = at(p + "ffn.b2");
    layer.ln_gamma = at(p + "ln.gamma");
    layer.ln_beta = at(p + "ln.beta");
    v.tf.push_back(layer);
  }
  return v;
}

TVar gcn_layer_tape(Tape& t, const CsrMatrix* lam, TVar x, TVar w, TVar b) {
  return t.relu(t.add(t.spmm(lam, t.mm(x, w)), t.mm(x, b)));
}

TVar gcn_forward_tape(Tape& t, const CsrMatrix* lam, TVar x, const EncoderVars& v) {
  for (size_t l = 0; l < v.gcn_w.size(); ++l)
    x = gcn_layer_tape(t, lam, x, v.gcn_w[l], v.gcn_b[l]);
  return x;
}

namespace {

// Attention over row-stacked sequences: the Q/K/V/output projections run on
// the whole stack, the softmax-weighted mixing stays within each sequence.
TVar multihead_attention(Tape& t, TVar x, const std::vector<int>& offsets,
                         const EncoderVars::TfLayer& layer, int heads) {
  TVar q = t.mm(x, layer.wq);
  TVar k = t.mm(x, layer.wk);
  TVar v = t.mm(x, layer.wv);
  int dim = static_cast<int>(t.val(q).cols());
  int dh = dim / heads;
  int n_seq = static_cast<int>(offsets.size()) - 1;
  std::vector<TVar> seq_outs;
  seq_outs.reserve(n_seq);
  for (int s = 0; s < n_seq; ++s) {
    int begin = offsets[s], len = offsets[s + 1] - begin;
    TVar qs = n_seq == 1 ? q : t.slice_rows(q, begin, len);
    TVar ks = n_seq == 1 ? k : t.slice_rows(k, begin, len);
    TVar vs = n_seq == 1 ? v : t.slice_rows(v, begin, len);
    std::vector<TVar> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      TVar qh = heads == 1 ? qs : t.slice_cols(qs, h * dh, dh);
      TVar kh = heads == 1 ? ks : t.slice_cols(ks, h * dh, dh);
      TVar vh = heads == 1 ? vs : t.slice_cols(vs, h * dh, dh);
      TVar attn = t.softmax_rows(t.scale(t.mm_nt(qh, kh), 1.0 / std::sqrt(double(dh))));
      outs.push_back(t.mm(attn, vh));
    }
    seq_outs.push_back(heads == 1 ? outs[0] : t.hconcat(outs));
  }
  TVar concat = n_seq == 1 ? seq_outs[0] : t.vstack(seq_outs);
  return t.mm(concat, layer.wo);
}

TVar ffn_tape(Tape& t, TVar x, const EncoderVars::TfLayer& layer) {
  TVar h = t.relu(t.add_rowvec(t.mm(x, layer.ffn_w1), layer.ffn_b1));
  return t.add_rowvec(t.mm(h, layer.ffn_w2), layer.ffn_b2);
}

TVar transformer_layer_batch(Tape& t, TVar x, const std::vector<int>& offsets,
                             const EncoderVars::TfLayer& layer, const EncoderConfig& cfg) {
  TVar xstar = multihead_attention(t, x, offsets, layer, cfg.heads);
  TVar f = ffn_tape(t, xstar, layer);
  return t.layernorm_rows(t.add(f, x), layer.ln_gamma, layer.ln_beta, cfg.ln_eps);
}

Matrix stacked_pe(const std::vector<int>& offsets, int dim) {
  int total = offsets.back();
  int max_len = 0;
  for (size_t s = 0; s + 1 < offsets.size(); ++s)
    max_len = std::max(max_len, offsets[s + 1] - offsets[s]);
  Matrix pe = sinusoidal_pe(max_len, dim);
  Matrix out(total, dim);
  for (size_t s = 0; s + 1 < offsets.size(); ++s) {
    int begin = offsets[s], len = offsets[s + 1] - begin;
    out.middleRows(begin, len) = pe.topRows(len);
  }
  return out;
}

}  // namespace

TVar transformer_layer_tape(Tape& t, TVar x, const EncoderVars::TfLayer& layer,
                            const EncoderConfig& cfg) {
  std::vector<int> offsets = {0, static_cast<int>(t.val(x).rows())};
  return transformer_layer_batch(t, x, offsets, layer, cfg);
}

TVar transformer_forward_batch_tape(Tape& t, TVar x, const std::vector<int>& offsets,
                                    const EncoderVars& v, const EncoderConfig& cfg) {
  if (cfg.positional_encoding) x = t.add(x, t.constant(stacked_pe(offsets, cfg.dim)));
  for (const auto& layer : v.tf) x = transformer_layer_batch(t, x, offsets, layer, cfg);
  return x;
}

TVar transformer_forward_tape(Tape& t, TVar x, const EncoderVars& v, const EncoderConfig& cfg) {
  std::vector<int> offsets = {0, static_cast<int>(t.val(x).rows())};
  return transformer_forward_batch_tape(t, x, offsets, v, cfg);
}

EncodedState encode_state_tape(Tape& t, const WeightedSubgraph& sg, const CsrMatrix* lam,
                               const Matrix& feats, const EncoderVars& v,
                               const EncoderConfig& cfg) {
  if (sg.accepted_count < 1)
    throw std::invalid_argument("encode_state: no accepted attributes in subgraph");
  TVar x0 = t.constant(feats);
  TVar reps = gcn_forward_tape(t, lam, x0, v);
  TVar seq = t.slice_rows(reps, sg.accepted_begin, sg.accepted_count);
  TVar out = transformer_forward_tape(t, seq, v, cfg);
  TVar pooled = t.segment_mean(out, {0, sg.accepted_count});
  return {reps, pooled};
}

Matrix gcn_forward(const WeightedSubgraph& sg, const EmbeddingTable& emb, const ParamStore& ps,
                   const EncoderConfig& cfg) {
  Tape t;
  CsrMatrix lam = normalize_adjacency(adjacency_csr(sg));
  Matrix feats = subgraph_features(sg, emb);
  auto attached = ps.attach(t, false);
  EncoderVars v = map_encoder_vars(ps, attached, cfg);
  return t.val(gcn_forward_tape(t, &lam, t.constant(feats), v));
}

Matrix transformer_forward(const Matrix& seq, const ParamStore& ps, const EncoderConfig& cfg) {
  if (seq.rows() < 1) throw std::invalid_argument("transformer_forward: empty sequence");
  Tape t;
  auto attached = ps.attach(t, false);
  EncoderVars v = map_encoder_vars(ps, attached, cfg);
  return t.val(transformer_forward_tape(t, t.constant(seq), v, cfg));
}

StateRepresentation encode_state(const WeightedSubgraph& sg, const EmbeddingTable& emb,
                                 const ParamStore& ps, const EncoderConfig& cfg) {
  Tape t;
  CsrMatrix lam = normalize_adjacency(adjacency_csr(sg));
  Matrix feats = subgraph_features(sg, emb);
  auto attached = ps.attach(t, false);
  EncoderVars v = map_encoder_vars(ps, attached, cfg);
  EncodedState enc = encode_state_tape(t, sg, &lam, feats, v, cfg);
  StateRepresentation rep;
  rep.node_reps = t.val(enc.node_reps);
  rep.state = t.val(enc.state).row(0).transpose();
  return rep;
}

}  // namespace unicorn
