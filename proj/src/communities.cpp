#include <limits>
#include <random>

#include "userscope/error.hpp"
#include "userscope/profile.hpp"

namespace userscope {

namespace {

constexpr std::size_t kMaxIterations = 100;
constexpr double kShiftTolerance = 1e-6;

double wcss(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])))
                 .squaredNorm();
  }
  return total;
}

}  // namespace

std::vector<std::size_t> CommunityAssignment::members(std::size_t community) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] == community) rows.push_back(r);
  }
  return rows;
}

CommunityAssignment detect_communities(const UserMatrix& users, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(users.num_users());
  if (k < 1 || k > users.num_users()) {
    throw Error("INVALID_ARGUMENT", "k must lie in [1, number of users]");
  }
  Eigen::MatrixXd points = users.vectors().cast<double>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = points.row(i).norm();
    if (norm > 0.0) points.row(i) /= norm;
  }

  std::mt19937_64 rng(seed);
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd centroids(kk, points.cols());

  // k-means++ seeding.
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, users.num_users() - 1)(rng));
  centroids.row(0) = points.row(first);
  for (Eigen::Index c = 1; c < kk; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = nearest[static_cast<std::size_t>(i)];
      d = std::min(d, (points.row(i) - centroids.row(c - 1)).squaredNorm());
      total += d;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= nearest[static_cast<std::size_t>(pick)];
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, users.num_users() - 1)(rng));
    }
    centroids.row(c) = points.row(pick);
  }

  CommunityAssignment out;
  out.k = k;
  out.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < kk; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      out.assignment[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }

    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c : out.assignment) ++sizes[c];
    // Empty cluster: take over the point worst served by a cluster that can spare it.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Eigen::Index worst = -1;
      double worst_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto own = out.assignment[static_cast<std::size_t>(i)];
        if (sizes[own] < 2) continue;
        const double d = (points.row(i) - centroids.row(static_cast<Eigen::Index>(own))).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      --sizes[out.assignment[static_cast<std::size_t>(worst)]];
      out.assignment[static_cast<std::size_t>(worst)] = c;
      sizes[c] = 1;
    }

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(kk, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      updated.row(static_cast<Eigen::Index>(out.assignment[static_cast<std::size_t>(i)])) += points.row(i);
    }
    for (std::size_t c = 0; c < k; ++c) updated.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);

    const double shift = (updated - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(updated);
    out.objective_trace.push_back(wcss(points, centroids, out.assignment));
    if (shift < kShiftTolerance) break;
  }
  out.centroids = std::move(centroids);
  return out;
}

}  // namespace userscope
