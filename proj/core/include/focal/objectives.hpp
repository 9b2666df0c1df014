#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace focal {

/// Loss weights and ablation switches.
///
/// Variants map onto flags as follows: noPrivate = `no_private` (drops the
/// private and orthogonality terms), noOrth = `no_orth`, noTemp = `no_temp`,
/// wTempCon = `temporal_contrastive` (replaces the distance-ranking term by a
/// sequence-level contrastive term), and the shared-only objective with the
/// temporal plugin = `temporal_plugin_only`.
struct LossConfig {
  double tau = 0.07;
  double lambda_p = 1.0;
  double lambda_o = 3.0;
  double lambda_t = 1.0;
  double margin = 1.0;
  bool no_private = false;
  bool no_orth = false;
  bool no_temp = false;
  bool temporal_contrastive = false;
  bool temporal_plugin_only = false;

  void validate() const;
  bool private_enabled() const { return !no_private && !temporal_plugin_only; }
  bool orthogonal_enabled() const { return private_enabled() && !no_orth; }
  bool temporal_enabled() const { return !no_temp; }
};

struct DistanceMatrices {
  Eigen::MatrixXd sample;    // BL x BL Euclidean distances
  Eigen::MatrixXd sequence;  // B_seq x B_seq mean distances
};

struct LossBreakdown {
  double shared = 0.0;
  double priv = 0.0;
  double orthogonal = 0.0;
  double temporal = 0.0;
  double total = 0.0;
  double lambda_p = 0.0;
  double lambda_o = 0.0;
  double lambda_t = 0.0;
};

/// Projected embeddings of a batch. `shared[v][j]` is proj_dim x B for view v and
/// modality j; `seq_of[i]` is the batch-local sequence id of sample slot i.
struct BatchEmbeddings {
  std::array<std::vector<Eigen::MatrixXd>, 2> shared;
  std::array<std::vector<Eigen::MatrixXd>, 2> priv;
  std::vector<int> seq_of;

  std::size_t num_modalities() const { return shared[0].size(); }
  Eigen::Index batch_size() const { return shared[0].empty() ? 0 : shared[0].front().cols(); }
};

/// Gradients with the same layout as BatchEmbeddings. Entries for disabled
/// terms are zero matrices.
struct BatchGradients {
  std::array<std::vector<Eigen::MatrixXd>, 2> shared;
  std::array<std::vector<Eigen::MatrixXd>, 2> priv;
};

/// Cross-modal InfoNCE in the shared space. For every ordered modality pair
/// (j, j') and anchor i the positive is (i, j'), and negatives are (i', j') for
/// every i' in a different sequence. Mean over P(P-1)B terms.
double shared_loss(std::span<const Eigen::MatrixXd> shared, std::span<const int> seq_of, double tau,
                   std::vector<Eigen::MatrixXd>* grad = nullptr);

/// NT-Xent per modality between two augmented views. Each anchor's denominator
/// holds its 2B-1 other embeddings (positive included). Mean over both views,
/// all anchors and all modalities.
double private_loss(std::span<const Eigen::MatrixXd> view0, std::span<const Eigen::MatrixXd> view1, double tau,
                    std::vector<Eigen::MatrixXd>* grad0 = nullptr, std::vector<Eigen::MatrixXd>* grad1 = nullptr);

/// Mean over samples of sum_j |<s_ij, p_ij>| + sum_{j<j'} |<p_ij, p_ij'>|.
double orthogonality_loss(std::span<const Eigen::MatrixXd> shared, std::span<const Eigen::MatrixXd> priv,
                          std::vector<Eigen::MatrixXd>* grad_shared = nullptr,
                          std::vector<Eigen::MatrixXd>* grad_priv = nullptr);

/// Pairwise Euclidean distances between columns and their sequence-level means.
/// Intra-sequence means skip the zero diagonal (divide by n(n-1)); inter-sequence
/// means divide by n_s * n_s'. Throws UsageError for sequences of length < 2.
DistanceMatrices sequence_mean_distances(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of);

/// Mean over ordered sequence pairs s != s' of max(Dbar_ss - Dbar_ss' + margin, 0).
double temporal_loss(const DistanceMatrices& distances, double margin);

/// Same value computed from embeddings, with the gradient w.r.t. the embeddings.
double temporal_loss(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of, double margin,
                     Eigen::MatrixXd* grad = nullptr);

/// Contrastive alternative to temporal_loss: every intra-sequence pair (a, p) is
/// a positive against all samples of other sequences. Mean over (a, p) terms.
double temporal_contrastive_loss(const Eigen::MatrixXd& embeddings, std::span<const int> seq_of, double tau,
                                 Eigen::MatrixXd* grad = nullptr);

/// Weighted sum of the enabled terms. The shared term uses view 0; the
/// orthogonality and temporal terms are averaged over both views (and the
/// temporal term over modalities), applied to [shared; private] per modality.
LossBreakdown total_loss(const BatchEmbeddings& batch, const LossConfig& cfg, BatchGradients* grads = nullptr);

}  // namespace focal
