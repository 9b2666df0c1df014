#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace focal {

/// Rows are true classes, columns predicted classes.
struct ConfusionCounts {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> matrix;

  static ConfusionCounts from_labels(std::span<const int> truth, std::span<const int> predicted, int num_classes);
  long total() const { return matrix.sum(); }
};

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Accuracy = trace / total. Macro F1 averages per-class F1 over every class;
/// a class with no support or no predictions scores 0.
ClassificationScores accuracy_macro_f1(const ConfusionCounts& confusion);

/// K-nearest-neighbour vote under Euclidean distance. Features are columns.
/// Neighbours are ordered by (distance, training index). Vote ties go to the
/// class with the smaller summed neighbour distance, then the smaller class id.
std::vector<int> knn_classify(const Eigen::MatrixXd& train, std::span<const int> train_labels,
                              const Eigen::MatrixXd& test, int k = 5);

struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // per Lloyd iteration of the winning restart
};

struct KMeansOptions {
  int max_iter = 300;
  int restarts = 10;
};

/// Lloyd's algorithm with k-means++ seeding; best restart by inertia (ties go
/// to the earlier restart). An empty cluster is reseeded at the point farthest
/// from its assigned centroid.
ClusterAssignment kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, const KMeansOptions& opts = {});

/// Adjusted Rand index from the pair-counting contingency table.
double adjusted_rand_index(std::span<const int> truth, std::span<const int> clusters);

/// I(truth; clusters) / sqrt(H(truth) H(clusters)), with 0/0 taken as 0.
double normalized_mutual_information(std::span<const int> truth, std::span<const int> clusters);

/// Mean over samples of 1 - |pred - truth| / max(truth, C - truth - 1).
double correlated_accuracy(std::span<const int> truth, std::span<const int> predicted, int num_classes);

}  // namespace focal
