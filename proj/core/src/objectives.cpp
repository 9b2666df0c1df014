#include "focal/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "focal/errors.hpp"

namespace focal {

namespace {

int count_sequences(std::span<const int> seq_of) {
  int max_id = -1;
  for (int s : seq_of) {
    if (s < 0) throw UsageError("negative sequence id");
    max_id = std::max(max_id, s);
  }
  return max_id + 1;
}

std::vector<int> sequence_sizes(std::span<const int> seq_of, int n_seq) {
  std::vector<int> sizes(n_seq, 0);
  for (int s : seq_of) ++sizes[s];
  return sizes;
}

// Softmax over the entries of `row` where `allowed` is set; returns log-sum-exp.
double masked_softmax(const Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>& row, const std::vector<char>& allowed,
                      Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> weights) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    if (allowed[k]) max_v = std::max(max_v, row(k));
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    weights(k) = allowed[k] ? std::exp(row(k) - max_v) : 0.0;
    sum += weights(k);
  }
  weights /= sum;
  return max_v + std::log(sum);
}

void check_batch(std::span<const Eigen::MatrixXd> mats, Eigen::Index cols, const char* what) {
  for (const auto& m : mats) {
    if (m.cols() != cols || m.rows() != mats.front().rows()) {
      throw UsageError(std::string(what) + ": embedding matrices disagree in shape");
    }
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("loss.tau must be positive");
  if (!(margin >= 0.0)) throw ConfigError("loss.margin must be non-negative");
  if (temporal_plugin_only && no_temp) {
    throw ConfigError("loss.temporal_plugin_only needs the temporal term; unset loss.no_temp");
  }
  if (temporal_plugin_only && temporal_contrastive) {
    throw ConfigError("loss.temporal_plugin_only and loss.temporal_contrastive are exclusive");
  }
  if (temporal_contrastive && no_temp) {
    throw ConfigError("loss.temporal_contrastive replaces the temporal term; unset loss.no_temp");
  }
}

double shared_loss(std::span<const Eigen::MatrixXd> shared, std::span<const int> seq_of, double tau,
                   std::vector<Eigen::MatrixXd>* grad) {
  const auto P = shared.size();
  if (P < 2) throw UsageError("shared_loss needs at least two modalities");
  const Eigen::Index B = shared.front().cols();
  check_batch(shared, B, "shared_loss");
  if (static_cast<Eigen::Index>(seq_of.size()) != B) throw UsageError("shared_loss: seq_of size mismatch");
  if (count_sequences(seq_of) < 2) throw UsageError("shared_loss needs at least two sequences");

  // allowed[i][i']: the positive (i' == i) or a sample from another sequence.
  std::vector<std::vector<char>> allowed(B, std::vector<char>(B));
  for (Eigen::Index i = 0; i < B; ++i) {
    for (Eigen::Index k = 0; k < B; ++k) {
      allowed[i][k] = (i == k) || (seq_of[i] != seq_of[k]);
    }
  }
  const double n_terms = static_cast<double>(P * (P - 1)) * static_cast<double>(B);
  if (grad) {
    grad->assign(P, Eigen::MatrixXd::Zero(shared.front().rows(), B));
  }
  double total = 0.0;
  Eigen::MatrixXd weights(B, B);
  for (std::size_t j = 0; j < P; ++j) {
    for (std::size_t jp = 0; jp < P; ++jp) {
      if (j == jp) continue;
      const Eigen::MatrixXd logits = shared[j].transpose() * shared[jp] / tau;
      for (Eigen::Index i = 0; i < B; ++i) {
        const double lse = masked_softmax(logits.row(i), allowed[i], weights.row(i));
        total += lse - logits(i, i);
      }
      if (grad) {
        weights.diagonal().array() -= 1.0;
        weights /= n_terms * tau;
        (*grad)[j].noalias() += shared[jp] * weights.transpose();
        (*grad)[jp].noalias() += shared[j] * weights;
      }
    }
  }
  return total / n_terms;
}

double private_loss(std::span<const Eigen::MatrixXd> view0, std::span<const Eigen::MatrixXd> view1, double tau,
                    std::vector<Eigen::MatrixXd>* grad0, std::vector<Eigen::MatrixXd>* grad1) {
  const auto P = view0.size();
  if (P == 0 || view1.size() != P) throw UsageError("private_loss needs both views of every modality");
  const Eigen::Index B = view0.front().cols();
  check_batch(view0, B, "private_loss");
  check_batch(view1, B, "private_loss");
  if (B < 2) throw UsageError("private_loss needs a batch of at least two samples");

  const Eigen::Index N = 2 * B;
  const double n_terms = static_cast<double>(N) * static_cast<double>(P);
  std::vector<char> allowed(N, 1);
  if (grad0) grad0->assign(P, Eigen::MatrixXd::Zero(view0.front().rows(), B));
  if (grad1) grad1->assign(P, Eigen::MatrixXd::Zero(view0.front().rows(), B));

  double total = 0.0;
  Eigen::MatrixXd z(view0.front().rows(), N);
  Eigen::MatrixXd weights(N, N);
  for (std::size_t j = 0; j < P; ++j) {
    z << view0[j], view1[j];
    const Eigen::MatrixXd logits = z.transpose() * z / tau;
    for (Eigen::Index a = 0; a < N; ++a) {
      const Eigen::Index pos = (a + B) % N;
      allowed[a] = 0;
      total += masked_softmax(logits.row(a), allowed, weights.row(a)) - logits(a, pos);
      allowed[a] = 1;
      weights(a, pos) -= 1.0;
    }
    if (grad0 || grad1) {
      weights /= n_terms * tau;
      const Eigen::MatrixXd sym = weights + weights.transpose();
      const Eigen::MatrixXd dz = z * sym;
      if (grad0) (*grad0)[j] += dz.leftCols(B);
      if (grad1) (*grad1)[j] += dz.rightCols(B);
    }
  }
  return total / n_terms;
}

double orthogonality_loss(std::span<const Eigen::MatrixXd> shared, std::span<const Eigen::MatrixXd> priv,
                          std::vector<Eigen::MatrixXd>* grad_shared, std::vector<Eigen::MatrixXd>* grad_priv) {
  const auto P = shared.size();
  if (P == 0 || priv.size() != P) throw UsageError("orthogonality_loss needs shared and private embeddings");
  const Eigen::Index B = shared.front().cols();
  check_batch(shared, B, "orthogonality_loss");
  check_batch(priv, B, "orthogonality_loss");
  if (B == 0) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(B);
  if (grad_shared) grad_shared->assign(P, Eigen::MatrixXd::Zero(shared.front().rows(), B));
  if (grad_priv) grad_priv->assign(P, Eigen::MatrixXd::Zero(priv.front().rows(), B));

  auto sign = [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); };
  double total = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < P; ++j) {
      const double d = shared[j].col(i).dot(priv[j].col(i));
      total += std::abs(d);
      if (grad_shared) (*grad_shared)[j].col(i) += sign(d) * inv_b * priv[j].col(i);
      if (grad_priv) (*grad_priv)[j].col(i) += sign(d) * inv_b * shared[j].col(i);
      for (std::size_t jp = j + 1; jp < P; ++jp) {
        const double e = priv[j].col(i).dot(priv[jp].col(i));
        total += std::abs(e);
        if (grad_priv) {
          (*grad_priv)[j].col(i) += sign(e) * inv_b * priv[jp].col(i);
          (*grad_priv)[jp].col(i) += sign(e) * inv_b * priv[j].col(i);
        }
      }
    }
  }
  return total * inv_b;
}

DistanceMatrices sequence_mean_distances(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of) {
  const Eigen::Index N = embeddings.cols();
  if (static_cast<Eigen::Index>(seq_of.size()) != N) throw UsageError("seq_of size mismatch");
  const int S = count_sequences(seq_of);
  const auto sizes = sequence_sizes(seq_of, S);
  for (int n : sizes) {
    if (n < 2) throw UsageError("sequence-level distances need sequences of length >= 2");
  }
  DistanceMatrices out;
  out.sample = Eigen::MatrixXd::Zero(N, N);
  out.sequence = Eigen::MatrixXd::Zero(S, S);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = a + 1; b < N; ++b) {
      const double d = (embeddings.col(a) - embeddings.col(b)).norm();
      out.sample(a, b) = d;
      out.sample(b, a) = d;
      out.sequence(seq_of[a], seq_of[b]) += d;
      out.sequence(seq_of[b], seq_of[a]) += d;
    }
  }
  for (int s = 0; s < S; ++s) {
    for (int t = 0; t < S; ++t) {
      const double count = s == t ? static_cast<double>(sizes[s]) * (sizes[s] - 1)
                                  : static_cast<double>(sizes[s]) * sizes[t];
      out.sequence(s, t) /= count;
    }
  }
  return out;
}

double temporal_loss(const DistanceMatrices& distances, double margin) {
  const Eigen::Index S = distances.sequence.rows();
  if (S < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index t = 0; t < S; ++t) {
      if (s != t) {
        total += std::max(distances.sequence(s, s) - distances.sequence(s, t) + margin, 0.0);
      }
    }
  }
  return total / static_cast<double>(S * (S - 1));
}

double temporal_loss(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of, double margin,
                     Eigen::MatrixXd* grad) {
  const DistanceMatrices dist = sequence_mean_distances(embeddings, seq_of);
  const double value = temporal_loss(dist, margin);
  if (!grad) return value;

  const Eigen::Index S = dist.sequence.rows();
  const Eigen::Index N = embeddings.cols();
  *grad = Eigen::MatrixXd::Zero(embeddings.rows(), N);
  if (S < 2) return value;

  // dL/dDbar: each active hinge (s, t) adds +1 at (s, s) and -1 at (s, t).
  const double inv_pairs = 1.0 / static_cast<double>(S * (S - 1));
  Eigen::MatrixXd d_bar = Eigen::MatrixXd::Zero(S, S);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index t = 0; t < S; ++t) {
      if (s != t && dist.sequence(s, s) - dist.sequence(s, t) + margin > 0.0) {
        d_bar(s, s) += inv_pairs;
        d_bar(s, t) -= inv_pairs;
      }
    }
  }
  const auto sizes = sequence_sizes(seq_of, static_cast<int>(S));
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index t = 0; t < S; ++t) {
      d_bar(s, t) /= s == t ? static_cast<double>(sizes[s]) * (sizes[s] - 1) : static_cast<double>(sizes[s]) * sizes[t];
    }
  }
  // Every unordered sample pair enters Dbar(s_a, s_b) and Dbar(s_b, s_a).
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = a + 1; b < N; ++b) {
      const double d = dist.sample(a, b);
      if (d > 0.0) {
        const double c = (d_bar(seq_of[a], seq_of[b]) + d_bar(seq_of[b], seq_of[a])) / d;
        w(a, b) = c;
        w(b, a) = c;
      }
    }
  }
  grad->noalias() = embeddings * w.rowwise().sum().asDiagonal();
  grad->noalias() -= embeddings * w;
  return value;
}

double temporal_contrastive_loss(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of, double tau,
                                 Eigen::MatrixXd* grad) {
  const Eigen::Index N = embeddings.cols();
  if (static_cast<Eigen::Index>(seq_of.size()) != N) throw UsageError("seq_of size mismatch");
  const int S = count_sequences(seq_of);
  if (S < 2) throw UsageError("temporal_contrastive_loss needs at least two sequences");
  const auto sizes = sequence_sizes(seq_of, S);
  for (int n : sizes) {
    if (n < 2) throw UsageError("temporal_contrastive_loss needs sequences of length >= 2");
  }
  const Eigen::MatrixXd logits = embeddings.transpose() * embeddings / tau;
  double n_terms = 0.0;
  for (int n : sizes) n_terms += static_cast<double>(n) * (n - 1);

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(N, N);
  std::vector<char> allowed(N);
  Eigen::RowVectorXd term_w(N);
  double total = 0.0;
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index k = 0; k < N; ++k) allowed[k] = seq_of[k] != seq_of[a];
    for (Eigen::Index p = 0; p < N; ++p) {
      if (p == a || seq_of[p] != seq_of[a]) continue;
      allowed[p] = 1;
      total += masked_softmax(logits.row(a), allowed, term_w) - logits(a, p);
      allowed[p] = 0;
      term_w(p) -= 1.0;
      weights.row(a) += term_w;
    }
  }
  if (grad) {
    weights /= n_terms * tau;
    *grad = embeddings * (weights + weights.transpose());
  }
  return total / n_terms;
}

LossBreakdown total_loss(const BatchEmbeddings& batch, const LossConfig& cfg, BatchGradients* grads) {
  cfg.validate();
  const auto P = batch.num_modalities();
  const Eigen::Index B = batch.batch_size();
  LossBreakdown out;
  out.lambda_p = cfg.lambda_p;
  out.lambda_o = cfg.lambda_o;
  out.lambda_t = cfg.lambda_t;

  const bool use_private = cfg.private_enabled();
  if (grads) {
    for (int v = 0; v < 2; ++v) {
      grads->shared[v].assign(P, Eigen::MatrixXd::Zero(batch.shared[v].front().rows(), B));
      grads->priv[v].assign(P, Eigen::MatrixXd::Zero(batch.priv[v].front().rows(), B));
    }
  }
  auto accumulate = [](std::vector<Eigen::MatrixXd>& into, const std::vector<Eigen::MatrixXd>& g, double w) {
    for (std::size_t j = 0; j < into.size(); ++j) into[j] += w * g[j];
  };

  std::vector<Eigen::MatrixXd> g0, g1;
  out.shared = shared_loss(batch.shared[0], batch.seq_of, cfg.tau, grads ? &g0 : nullptr);
  if (grads) accumulate(grads->shared[0], g0, 1.0);

  if (use_private) {
    out.priv = private_loss(batch.priv[0], batch.priv[1], cfg.tau, grads ? &g0 : nullptr, grads ? &g1 : nullptr);
    if (grads) {
      accumulate(grads->priv[0], g0, cfg.lambda_p);
      accumulate(grads->priv[1], g1, cfg.lambda_p);
    }
  }

  if (cfg.orthogonal_enabled()) {
    for (int v = 0; v < 2; ++v) {
      out.orthogonal +=
          0.5 * orthogonality_loss(batch.shared[v], batch.priv[v], grads ? &g0 : nullptr, grads ? &g1 : nullptr);
      if (grads) {
        accumulate(grads->shared[v], g0, 0.5 * cfg.lambda_o);
        accumulate(grads->priv[v], g1, 0.5 * cfg.lambda_o);
      }
    }
  }

  if (cfg.temporal_enabled()) {
    const double w_term = 1.0 / (2.0 * static_cast<double>(P));
    for (int v = 0; v < 2; ++v) {
      for (std::size_t j = 0; j < P; ++j) {
        const auto& s = batch.shared[v][j];
        Eigen::MatrixXd holistic;
        if (use_private) {
          holistic.resize(s.rows() + batch.priv[v][j].rows(), B);
          holistic << s, batch.priv[v][j];
        } else {
          holistic = s;
        }
        Eigen::MatrixXd g;
        double value;
        if (cfg.temporal_contrastive) {
          // Concatenated unit blocks have norm sqrt(blocks); rescale to unit norm.
          const double scale = use_private ? 1.0 / std::sqrt(2.0) : 1.0;
          value = temporal_contrastive_loss(holistic * scale, batch.seq_of, cfg.tau, grads ? &g : nullptr);
          if (grads) g *= scale;
        } else {
          value = temporal_loss(holistic, batch.seq_of, cfg.margin, grads ? &g : nullptr);
        }
        out.temporal += w_term * value;
        if (grads) {
          grads->shared[v][j] += w_term * cfg.lambda_t * g.topRows(s.rows());
          if (use_private) grads->priv[v][j] += w_term * cfg.lambda_t * g.bottomRows(batch.priv[v][j].rows());
        }
      }
    }
  }

  out.total = out.shared;
  if (use_private) out.total += cfg.lambda_p * out.priv;
  if (cfg.orthogonal_enabled()) out.total += cfg.lambda_o * out.orthogonal;
  if (cfg.temporal_enabled()) out.total += cfg.lambda_t * out.temporal;
  return out;
}

}  // namespace focal
