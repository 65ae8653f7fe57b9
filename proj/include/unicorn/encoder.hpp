#pragma once

#include "unicorn/embeddings.hpp"
#include "unicorn/env.hpp"
#include "unicorn/nn.hpp"

namespace unicorn {

struct EncoderConfig {
  int dim = 64;
  int gcn_layers = 2;
  int tf_layers = 1;
  int heads = 1;
  int ffn_dim = 64;
  bool positional_encoding = true;
  double ln_eps = 1e-5;
};

// Registers all encoder tensors (gcn.<l>.w/b, tf.<l>.wq/wk/wv/wo,
// tf.<l>.ffn.w1/b1/w2/b2, tf.<l>.ln.gamma/beta) in insertion order.
void init_encoder_params(ParamStore& ps, const EncoderConfig& cfg, Rng& rng);

// Symmetric adjacency of the conversation subgraph (no self loops).
CsrMatrix adjacency_csr(const WeightedSubgraph& sg);

// Lambda = D^{-1/2} A D^{-1/2}; zero-degree rows stay all-zero.
CsrMatrix normalize_adjacency(const CsrMatrix& a);

Matrix sinusoidal_pe(int len, int dim);

// Row i holds the pretrained embedding of sg.nodes[i].
Matrix subgraph_features(const WeightedSubgraph& sg, const EmbeddingTable& emb);

// Tape handles for the encoder tensors, grouped by layer. Obtained from the
// flat attach() order via the store's name index.
struct EncoderVars {
  struct TfLayer {
    TVar wq, wk, wv, wo;
    TVar ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    TVar ln_gamma, ln_beta;
  };
  std::vector<TVar> gcn_w, gcn_b;
  std::vector<TfLayer> tf;
};

EncoderVars map_encoder_vars(const ParamStore& ps, const std::vector<TVar>& attached,
                             const EncoderConfig& cfg);

// relu(spmm(lam, x * w) + x * b)
TVar gcn_layer_tape(Tape& t, const CsrMatrix* lam, TVar x, TVar w, TVar b);

TVar gcn_forward_tape(Tape& t, const CsrMatrix* lam, TVar x, const EncoderVars& v);

// One attention + FFN block: layernorm(ffn(multihead(x, x, x)) + x).
TVar transformer_layer_tape(Tape& t, TVar x, const EncoderVars::TfLayer& layer,
                            const EncoderConfig& cfg);

// Runs all configured layers; adds positional encodings to x first when
// enabled. x is a single sequence (rows are positions).
TVar transformer_forward_tape(Tape& t, TVar x, const EncoderVars& v, const EncoderConfig& cfg);

// Same computation over several independent sequences stacked row-wise;
// offsets[s]..offsets[s+1] delimit sequence s. Projections and the FFN run on
// the whole stack, attention stays within each sequence, and positional
// encodings restart at every sequence boundary.
TVar transformer_forward_batch_tape(Tape& t, TVar x, const std::vector<int>& offsets,
                                    const EncoderVars& v, const EncoderConfig& cfg);

struct EncodedState {
  TVar node_reps;  // refined embedding per subgraph node (action representations)
  TVar state;      // 1 x dim pooled conversation representation
};

// feats/lam must stay alive until the tape is done with them.
EncodedState encode_state_tape(Tape& t, const WeightedSubgraph& sg, const CsrMatrix* lam,
                               const Matrix& feats, const EncoderVars& v,
                               const EncoderConfig& cfg);

// Convenience forward-only wrappers over the tape builders.
Matrix gcn_forward(const WeightedSubgraph& sg, const EmbeddingTable& emb, const ParamStore& ps,
                   const EncoderConfig& cfg);

Matrix transformer_forward(const Matrix& seq, const ParamStore& ps, const EncoderConfig& cfg);

struct StateRepresentation {
  Vector state;
  Matrix node_reps;
};

StateRepresentation encode_state(const WeightedSubgraph& sg, const EmbeddingTable& emb,
                                 const ParamStore& ps, const EncoderConfig& cfg);

}  // namespace unicorn
