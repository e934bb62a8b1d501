#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absa/textproc.hpp"
#include "json.hpp"

namespace absa::cluster {

using text::SparseVector;

struct ClusterModel {
    std::size_t k = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    /// Sum of squared Euclidean distances to the assigned centroid.
    double inertia = 0.0;
    std::uint64_t seed = 0;
    std::size_t iterations_run = 0;
    bool converged = false;
    /// Inertia after every Lloyd iteration of the winning restart.
    std::vector<double> inertia_trace;
    /// Final inertia of every restart, in restart order.
    std::vector<double> restart_inertias;
    std::vector<std::vector<double>> restart_traces;

    std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansOptions {
    std::size_t max_iter = 300;
    std::size_t restarts = 10;
};

/// k-means++ seeding per restart, Lloyd iterations until the assignment is a
/// fixpoint or max_iter, lowest-inertia restart wins (ties: lowest restart).
/// An optional warm start is evaluated as one extra candidate.
ClusterModel kmeans_fit(const std::vector<SparseVector>& vectors, std::size_t k, std::uint64_t seed,
                        KMeansOptions options = {},
                        const std::optional<std::vector<std::vector<double>>>& warm_start = std::nullopt);

/// Squared distance between a sparse point and a dense centroid.
double squared_distance(const SparseVector& x, const std::vector<double>& c);

struct ElbowCurve {
    std::vector<std::size_t> k_values;
    std::vector<double> inertias;
    std::size_t selected_k = 0;
    std::vector<ClusterModel> models;

    const ClusterModel& selected_model() const;
};

/// Index of the point with the largest perpendicular distance to the chord
/// joining the first and last points. Endpoints are never selected; ties
/// (including a straight line) go to the smaller k.
std::size_t knee_index(const std::vector<std::size_t>& k_values, const std::vector<double>& inertias);

/// Fits every k in [k_min, k_max] and applies the knee rule. Each k > k_min
/// also tries the previous solution plus its farthest point as a warm start,
/// which keeps the curve non-increasing.
ElbowCurve elbow_select_k(const std::vector<SparseVector>& vectors, std::size_t k_min, std::size_t k_max,
                          std::uint64_t seed, KMeansOptions options = {});

struct ScoredTerm {
    std::string term;
    double score;
};

/// Per cluster: the n terms with the highest summed member weight, descending,
/// ties broken lexicographically. Empty clusters yield empty lists.
std::vector<std::vector<ScoredTerm>> top_terms(const ClusterModel& model, const text::TfIdfModel& tfidf,
                                               const std::vector<SparseVector>& vectors, std::size_t n = 5);

nlohmann::json cluster_report(const ElbowCurve& curve, const std::vector<std::vector<ScoredTerm>>& terms);

/// Aligned text table, one column per cluster, top terms down the rows.
std::string render_top_terms_table(const ClusterModel& model, const std::vector<std::vector<ScoredTerm>>& terms,
                                   const std::vector<std::string>& column_names = {});

}  // namespace absa::cluster
