#include "absa/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "absa/common.hpp"

namespace absa::cluster {

namespace {

double dot(const SparseVector& x, const std::vector<double>& c) {
    double s = 0.0;
    for (const auto& [i, w] : x.entries) s += w * c[i];
    return s;
}

double sq_norm(const std::vector<double>& c) {
    double s = 0.0;
    for (double v : c) s += v * v;
    return s;
}

struct Run {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    std::vector<double> trace;
    double inertia = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

std::vector<std::vector<double>> kmeanspp(const std::vector<SparseVector>& xs, std::size_t k, Rng& rng) {
    const std::size_t n = xs.size();
    const std::size_t dim = xs.front().dimension;
    std::vector<std::vector<double>> centers;
    std::vector<bool> chosen(n, false);

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t idx = first(rng);
    centers.push_back(xs[idx].to_dense());
    chosen[idx] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(xs[i], centers.back());

    while (centers.size() < k) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc >= r) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // All remaining points coincide with a center: take any unchosen one.
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) rest.push_back(i);
            }
            std::uniform_int_distribution<std::size_t> d(0, rest.size() - 1);
            pick = rest[d(rng)];
        }
        chosen[pick] = true;
        centers.push_back(xs[pick].to_dense());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(xs[i], centers.back()));
    }
    (void)dim;
    return centers;
}

double total_inertia(const std::vector<SparseVector>& xs, const std::vector<std::vector<double>>& cs,
                     const std::vector<std::size_t>& assign) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += squared_distance(xs[i], cs[assign[i]]);
    return s;
}

Run lloyd(const std::vector<SparseVector>& xs, std::vector<std::vector<double>> centroids, std::size_t max_iter) {
    const std::size_t n = xs.size();
    const std::size_t k = centroids.size();
    const std::size_t dim = xs.front().dimension;

    std::vector<double> x_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& [j, w] : xs[i].entries) s += w * w;
        x_norm[i] = s;
    }

    Run run;
    run.assignments.assign(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> c_norm(k);

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t c = 0; c < k; ++c) c_norm[c] = sq_norm(centroids[c]);

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                double d = x_norm[i] - 2.0 * dot(xs[i], centroids[c]) + c_norm[c];
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (run.assignments[i] != best) {
                run.assignments[i] = best;
                changed = true;
            }
        }

        // Empty-cluster repair: move the point farthest from its centroid.
        std::vector<std::size_t> sizes(k, 0);
        for (auto a : run.assignments) ++sizes[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[run.assignments[i]] < 2) continue;
                double d = squared_distance(xs[i], centroids[run.assignments[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[run.assignments[far]];
            run.assignments[far] = c;
            sizes[c] = 1;
            centroids[c] = xs[far].to_dense();
            changed = true;
        }

        run.iterations = iter;
        if (!changed && iter > 1) {
            run.converged = true;
            break;
        }

        for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = centroids[run.assignments[i]];
            for (const auto& [j, w] : xs[i].entries) c[j] += w;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            double inv = 1.0 / static_cast<double>(sizes[c]);
            for (auto& v : centroids[c]) v *= inv;
        }
        run.trace.push_back(total_inertia(xs, centroids, run.assignments));
    }
    (void)dim;
    run.centroids = std::move(centroids);
    run.inertia = total_inertia(xs, run.centroids, run.assignments);
    return run;
}

}  // namespace

double squared_distance(const SparseVector& x, const std::vector<double>& c) {
    // ||c||^2 - sum over x's support of c_j^2, plus sum over the support of (x_j - c_j)^2.
    double rest = sq_norm(c);
    double on_support = 0.0;
    for (const auto& [j, w] : x.entries) {
        rest -= c[j] * c[j];
        double d = w - c[j];
        on_support += d * d;
    }
    return std::max(0.0, rest) + on_support;
}

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

ClusterModel kmeans_fit(const std::vector<SparseVector>& vectors, std::size_t k, std::uint64_t seed,
                        KMeansOptions options, const std::optional<std::vector<std::vector<double>>>& warm_start) {
    if (vectors.empty()) throw Error("kmeans_fit: no vectors");
    if (k < 1 || k > vectors.size()) {
        throw Error("kmeans_fit: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(vectors.size()) + "]");
    }
    const std::size_t dim = vectors.front().dimension;
    for (const auto& v : vectors) {
        if (v.dimension != dim) throw Error("kmeans_fit: vectors differ in dimension");
    }
    if (options.restarts < 1) options.restarts = 1;

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    std::optional<Run> best;
    auto consider = [&](Run run) {
        model.restart_inertias.push_back(run.inertia);
        model.restart_traces.push_back(run.trace);
        if (!best || run.inertia < best->inertia) best = std::move(run);
    };
    for (std::size_t r = 0; r < options.restarts; ++r) {
        Rng rng(mix_seed(seed, r));
        consider(lloyd(vectors, kmeanspp(vectors, k, rng), options.max_iter));
    }
    if (warm_start) {
        if (warm_start->size() != k) throw Error("kmeans_fit: warm start has the wrong number of centroids");
        consider(lloyd(vectors, *warm_start, options.max_iter));
    }

    model.centroids = std::move(best->centroids);
    model.assignments = std::move(best->assignments);
    model.inertia = best->inertia;
    model.inertia_trace = std::move(best->trace);
    model.iterations_run = best->iterations;
    model.converged = best->converged;
    return model;
}

const ClusterModel& ElbowCurve::selected_model() const {
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] == selected_k) return models.at(i);
    }
    throw Error("elbow curve has no model for the selected k");
}

std::size_t knee_index(const std::vector<std::size_t>& k_values, const std::vector<double>& inertias) {
    if (k_values.size() != inertias.size() || k_values.size() < 3) {
        throw Error("knee_index: need at least three (k, inertia) points");
    }
    const double x0 = static_cast<double>(k_values.front());
    const double y0 = inertias.front();
    const double x1 = static_cast<double>(k_values.back());
    const double y1 = inertias.back();
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const double len = std::hypot(dx, dy);
    double scale = 0.0;
    for (double v : inertias) scale = std::max(scale, std::abs(v));
    const double tol = 1e-9 * std::max(scale, 1.0);

    std::size_t best = 1;
    double best_d = -1.0;
    for (std::size_t i = 1; i + 1 < k_values.size(); ++i) {
        double x = static_cast<double>(k_values[i]);
        double d = std::abs(dy * x - dx * inertias[i] + x1 * y0 - y1 * x0) / len;
        if (d > best_d + tol) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

ElbowCurve elbow_select_k(const std::vector<SparseVector>& vectors, std::size_t k_min, std::size_t k_max,
                          std::uint64_t seed, KMeansOptions options) {
    if (k_min < 1 || k_max > vectors.size() || k_max < k_min) {
        throw Error("elbow_select_k: k range must lie within [1, n]");
    }
    if (k_max - k_min + 1 < 3) throw Error("elbow_select_k: need at least three k values");

    ElbowCurve curve;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        std::optional<std::vector<std::vector<double>>> warm;
        if (!curve.models.empty()) {
            const auto& prev = curve.models.back();
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                double d = squared_distance(vectors[i], prev.centroids[prev.assignments[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            warm = prev.centroids;
            warm->push_back(vectors[far].to_dense());
        }
        curve.models.push_back(kmeans_fit(vectors, k, mix_seed(seed, k), options, warm));
        curve.k_values.push_back(k);
        curve.inertias.push_back(curve.models.back().inertia);
    }
    curve.selected_k = curve.k_values[knee_index(curve.k_values, curve.inertias)];
    return curve;
}

std::vector<std::vector<ScoredTerm>> top_terms(const ClusterModel& model, const text::TfIdfModel& tfidf,
                                               const std::vector<SparseVector>& vectors, std::size_t n) {
    if (vectors.size() != model.assignments.size()) throw Error("top_terms: model was fitted on other vectors");
    std::vector<std::map<std::size_t, double>> sums(model.k);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (const auto& [j, w] : vectors[i].entries) sums[model.assignments[i]][j] += w;
    }
    std::vector<std::vector<ScoredTerm>> out(model.k);
    for (std::size_t c = 0; c < model.k; ++c) {
        std::vector<ScoredTerm> terms;
        for (const auto& [j, s] : sums[c]) {
            if (s > 0.0) terms.push_back({tfidf.term(j), s});
        }
        std::sort(terms.begin(), terms.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.term < b.term;
        });
        if (terms.size() > n) terms.resize(n);
        out[c] = std::move(terms);
    }
    return out;
}

nlohmann::json cluster_report(const ElbowCurve& curve, const std::vector<std::vector<ScoredTerm>>& terms) {
    const auto& model = curve.selected_model();
    nlohmann::json clusters = nlohmann::json::array();
    auto sizes = model.cluster_sizes();
    for (std::size_t c = 0; c < model.k; ++c) {
        nlohmann::json t = nlohmann::json::array();
        for (const auto& st : terms[c]) t.push_back({{"term", st.term}, {"score", st.score}});
        clusters.push_back({{"cluster", c}, {"size", sizes[c]}, {"top_terms", t}});
    }
    return {
        {"k_values", curve.k_values},
        {"inertias", curve.inertias},
        {"selected_k", curve.selected_k},
        {"inertia", model.inertia},
        {"iterations_run", model.iterations_run},
        {"clusters", clusters},
    };
}

std::string render_top_terms_table(const ClusterModel& model, const std::vector<std::vector<ScoredTerm>>& terms,
                                   const std::vector<std::string>& column_names) {
    std::size_t rows = 0;
    for (const auto& t : terms) rows = std::max(rows, t.size());
    auto sizes = model.cluster_sizes();

    std::vector<std::vector<std::string>> cols;
    for (std::size_t c = 0; c < model.k; ++c) {
        std::vector<std::string> col;
        col.push_back(c < column_names.size() ? column_names[c] : std::to_string(c));
        col.push_back(std::to_string(sizes[c]));
        for (std::size_t r = 0; r < rows; ++r) col.push_back(r < terms[c].size() ? terms[c][r].term : "");
        cols.push_back(std::move(col));
    }
    std::vector<std::string> head = {"Cluster", "Size"};
    for (std::size_t r = 0; r < rows; ++r) head.push_back(r == 0 ? "Top " + std::to_string(rows) + " terms" : "");

    std::size_t head_w = 0;
    for (const auto& h : head) head_w = std::max(head_w, utf8_length(h));
    std::vector<std::size_t> widths;
    for (const auto& col : cols) {
        std::size_t w = 0;
        for (const auto& cell : col) w = std::max(w, utf8_length(cell));
        widths.push_back(w);
    }

    std::ostringstream out;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - utf8_length(s), ' '); };
    for (std::size_t r = 0; r < head.size(); ++r) {
        out << pad(head[r], head_w);
        for (std::size_t c = 0; c < cols.size(); ++c) out << "  " << pad(cols[c][r], widths[c]);
        out << '\n';
        if (r == 1) {
            std::size_t total = head_w;
            for (auto w : widths) total += w + 2;
            out << std::string(total, '-') << '\n';
        }
    }
    return out.str();
}

}  // namespace absa::cluster
