#include "focal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "focal/errors.hpp"
#include "focal/random.hpp"

namespace focal {

ConfusionCounts ConfusionCounts::from_labels(std::span<const int> truth, std::span<const int> predicted,
                                             int num_classes) {
  if (truth.size() != predicted.size()) throw UsageError("truth and prediction lengths differ");
  ConfusionCounts cc;
  cc.matrix.setZero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes) {
      throw InputError("label outside [0, num_classes)");
    }
    ++cc.matrix(truth[i], predicted[i]);
  }
  return cc;
}

ClassificationScores accuracy_macro_f1(const ConfusionCounts& confusion) {
  const auto& m = confusion.matrix;
  const long total = confusion.total();
  if (total <= 0) throw InputError("empty confusion matrix");
  ClassificationScores out;
  out.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
  double f1_sum = 0.0;
  for (Eigen::Index c = 0; c < m.rows(); ++c) {
    const double tp = static_cast<double>(m(c, c));
    const double support = static_cast<double>(m.row(c).sum());
    const double predicted = static_cast<double>(m.col(c).sum());
    if (support > 0 && predicted > 0 && tp > 0) {
      f1_sum += 2.0 * tp / (support + predicted);
    }
  }
  out.macro_f1 = f1_sum / static_cast<double>(m.rows());
  return out;
}

std::vector<int> knn_classify(const Eigen::MatrixXd& train, std::span<const int> train_labels,
                              const Eigen::MatrixXd& test, int k) {
  if (k < 1) throw ConfigError("KNN k must be positive");
  if (train.cols() < k) throw ConfigError("KNN needs at least k training samples");
  if (static_cast<Eigen::Index>(train_labels.size()) != train.cols()) throw UsageError("label count mismatch");
  if (train.rows() != test.rows()) throw UsageError("train and test feature dims differ");

  const Eigen::Index N = train.cols();
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(N));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(test.cols()));
  for (Eigen::Index q = 0; q < test.cols(); ++q) {
    for (Eigen::Index i = 0; i < N; ++i) {
      dist[static_cast<std::size_t>(i)] = {(train.col(i) - test.col(q)).norm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::map<int, std::pair<int, double>> votes;  // class -> (count, summed distance)
    for (int r = 0; r < k; ++r) {
      auto& v = votes[train_labels[dist[r].second]];
      ++v.first;
      v.second += dist[r].first;
    }
    int best = -1;
    std::pair<int, double> best_vote{-1, 0.0};
    for (const auto& [cls, v] : votes) {  // ascending class id
      if (v.first > best_vote.first || (v.first == best_vote.first && v.second < best_vote.second)) {
        best = cls;
        best_vote = v;
      }
    }
    out.push_back(best);
  }
  return out;
}

namespace {

struct LloydResult {
  std::vector<int> labels;
  double inertia;
  std::vector<double> trace;
};

LloydResult lloyd(const Eigen::MatrixXd& x, int k, Rng& rng, int max_iter) {
  const Eigen::Index N = x.cols();
  Eigen::MatrixXd centroids(x.rows(), k);

  // k-means++ seeding
  std::uniform_int_distribution<Eigen::Index> first(0, N - 1);
  centroids.col(0) = x.col(first(rng));
  Eigen::VectorXd d2 = (x.colwise() - centroids.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double sum = d2.sum();
    Eigen::Index pick = 0;
    if (sum > 0.0) {
      std::uniform_real_distribution<double> u(0.0, sum);
      double r = u(rng);
      for (pick = 0; pick < N - 1; ++pick) {
        r -= d2(pick);
        if (r <= 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centroids.col(c) = x.col(pick);
    d2 = d2.cwiseMin((x.colwise() - centroids.col(c)).colwise().squaredNorm().transpose());
  }

  LloydResult res;
  res.labels.assign(static_cast<std::size_t>(N), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    std::vector<double> best_d(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) {
      Eigen::Index best = 0;
      const double d = (centroids.colwise() - x.col(i)).colwise().squaredNorm().minCoeff(&best);
      best_d[static_cast<std::size_t>(i)] = d;
      inertia += d;
      if (res.labels[i] != static_cast<int>(best)) {
        res.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    res.trace.push_back(inertia);
    res.inertia = inertia;
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(x.rows(), k);
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < N; ++i) {
      sums.col(res.labels[i]) += x.col(i);
      ++counts[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.col(c) = sums.col(c) / counts[c];
      } else {
        // empty cluster: move it to the worst-served point and take that point over
        const auto far = std::max_element(best_d.begin(), best_d.end()) - best_d.begin();
        centroids.col(c) = x.col(far);
        best_d[static_cast<std::size_t>(far)] = 0.0;
        res.labels[static_cast<std::size_t>(far)] = c;
      }
    }
  }
  return res;
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

std::pair<std::vector<int>, int> compact_ids(std::span<const int> labels) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
  return {out, static_cast<int>(ids.size())};
}

Eigen::MatrixXd contingency(std::span<const int> truth, std::span<const int> clusters) {
  if (truth.size() != clusters.size()) throw UsageError("partition lengths differ");
  const auto [t, nt] = compact_ids(truth);
  const auto [c, nc] = compact_ids(clusters);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(nt, nc);
  for (std::size_t i = 0; i < t.size(); ++i) table(t[i], c[i]) += 1.0;
  return table;
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, const KMeansOptions& opts) {
  if (k < 1) throw ConfigError("k-means needs k >= 1");
  if (features.cols() < k) throw ConfigError("k-means needs at least k samples");
  if (opts.restarts < 1 || opts.max_iter < 1) throw ConfigError("k-means restarts and max_iter must be positive");
  Rng rng(seed);
  ClusterAssignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    LloydResult res = lloyd(features, k, rng, opts.max_iter);
    if (res.inertia < best.inertia) {
      best.labels = std::move(res.labels);
      best.inertia = res.inertia;
      best.inertia_trace = std::move(res.trace);
    }
  }
  best.k = k;
  return best;
}

double adjusted_rand_index(std::span<const int> truth, std::span<const int> clusters) {
  const Eigen::MatrixXd table = contingency(truth, clusters);
  const double n = static_cast<double>(truth.size());
  double sum_cells = 0.0;
  for (Eigen::Index i = 0; i < table.size(); ++i) sum_cells += choose2(table.data()[i]);
  double sum_rows = 0.0, sum_cols = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) sum_rows += choose2(table.row(r).sum());
  for (Eigen::Index c = 0; c < table.cols(); ++c) sum_cols += choose2(table.col(c).sum());
  const double total = choose2(n);
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

double normalized_mutual_information(std::span<const int> truth, std::span<const int> clusters) {
  const Eigen::MatrixXd table = contingency(truth, clusters);
  const double n = static_cast<double>(truth.size());
  if (n == 0.0) return 0.0;
  const Eigen::VectorXd rows = table.rowwise().sum();
  const Eigen::VectorXd cols = table.colwise().sum().transpose();
  auto entropy = [n](const Eigen::VectorXd& counts) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
    }
    return h;
  };
  double mi = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double nij = table(r, c);
      if (nij > 0) mi += nij / n * std::log(n * nij / (rows(r) * cols(c)));
    }
  }
  const double denom = std::sqrt(entropy(rows) * entropy(cols));
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double correlated_accuracy(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (num_classes < 2) throw ConfigError("correlated accuracy needs at least two classes");
  if (truth.size() != predicted.size()) throw UsageError("truth and prediction lengths differ");
  if (truth.empty()) throw InputError("no samples to score");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    const int p = predicted[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) throw InputError("label outside [0, C)");
    const double max_dist = std::max(y, num_classes - y - 1);
    sum += 1.0 - std::abs(p - y) / max_dist;
  }
  return sum / static_cast<double>(truth.size());
}

}  // namespace focal
