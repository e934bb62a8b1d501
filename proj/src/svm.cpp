#include "absa/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absa/common.hpp"

namespace absa::models {

using nlohmann::json;

double Kernel::operator()(const FeatureVector& a, const FeatureVector& b) const {
    if (a.size() != b.size()) throw Error("kernel: dimension mismatch");
    if (type == Type::Linear) {
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

json Kernel::to_json() const {
    if (type == Type::Linear) return {{"type", "linear"}};
    return {{"type", "rbf"}, {"gamma", gamma}};
}

Kernel Kernel::from_json(const json& j) {
    auto t = j.at("type").get<std::string>();
    if (t == "linear") return linear();
    if (t == "rbf") return rbf(j.at("gamma").get<double>());
    throw ConfigError("unknown kernel type '" + t + "'");
}

void SvmParams::validate() const {
    if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("SVM C must be positive");
    if (!(tol > 0.0)) throw ConfigError("SVM tol must be positive");
    if (kernel.type == Kernel::Type::Rbf && !(kernel.gamma > 0.0)) throw ConfigError("RBF gamma must be positive");
}

double PlattScaling::operator()(double f) const {
    double z = A * f + B;
    if (z >= 0.0) return std::exp(-z) / (1.0 + std::exp(-z));
    return 1.0 / (1.0 + std::exp(z));
}

PlattScaling PlattScaling::fit(const std::vector<double>& dec, const std::vector<int>& y) {
    const std::size_t n = dec.size();
    double prior1 = 0, prior0 = 0;
    for (int v : y) (v > 0 ? prior1 : prior0) += 1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] > 0 ? hi : lo;

    auto objective = [&](double A, double B) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = dec[i] * A + B;
            f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    PlattScaling s{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
    double fval = objective(s.A, s.B);
    const double sigma = 1e-12, min_step = 1e-10;
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = dec[i] * s.A + s.B;
            double p, q;
            if (z >= 0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            double d2 = p * q;
            h11 += dec[i] * dec[i] * d2;
            h22 += d2;
            h21 += dec[i] * d2;
            double d1 = t[i] - p;
            g1 += dec[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        double det = h11 * h22 - h21 * h21;
        double dA = -(h22 * g1 - h21 * g2) / det;
        double dB = -(-h21 * g1 + h11 * g2) / det;
        double gd = g1 * dA + g2 * dB;
        double step = 1.0;
        while (step >= min_step) {
            double nA = s.A + step * dA, nB = s.B + step * dB;
            double nf = objective(nA, nB);
            if (nf < fval + 1e-4 * step * gd) {
                s = {nA, nB};
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < min_step) break;
    }
    return s;
}

double SvmModel::decision(const FeatureVector& x) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) f += alpha[i] * y[i] * kernel(support_vectors[i], x);
    return f;
}

json SvmModel::to_json() const {
    return {{"kernel", kernel.to_json()}, {"C", C},         {"support_vectors", support_vectors},
            {"alpha", alpha},             {"y", y},         {"bias", bias},
            {"iterations", iterations},   {"converged", converged}};
}

SvmModel SvmModel::from_json(const json& j) {
    SvmModel m;
    m.kernel = Kernel::from_json(j.at("kernel"));
    m.C = j.at("C").get<double>();
    m.support_vectors = j.at("support_vectors").get<std::vector<FeatureVector>>();
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.y = j.at("y").get<std::vector<int>>();
    m.bias = j.at("bias").get<double>();
    m.iterations = j.value("iterations", std::size_t{0});
    m.converged = j.value("converged", true);
    if (m.alpha.size() != m.support_vectors.size() || m.y.size() != m.alpha.size()) {
        throw ParseError("svm model: support vector arrays differ in length");
    }
    return m;
}

namespace {

struct Gram {
    std::size_t n = 0;
    std::vector<double> k;
    double operator()(std::size_t i, std::size_t j) const { return k[i * n + j]; }
};

Gram gram_matrix(const std::vector<const FeatureVector*>& rows, const Kernel& kernel) {
    Gram g;
    g.n = rows.size();
    g.k.assign(g.n * g.n, 0.0);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t j = i; j < g.n; ++j) {
            double v = kernel(*rows[i], *rows[j]);
            g.k[i * g.n + j] = v;
            g.k[j * g.n + i] = v;
        }
    }
    return g;
}

/// Lexicographic on features, then on `tiebreak`.
template <class Key>
std::vector<std::size_t> canonical_order(const std::vector<FeatureVector>& X, const std::vector<Key>& tiebreak) {
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (X[a] != X[b]) return X[a] < X[b];
        return tiebreak[a] < tiebreak[b];
    });
    return order;
}

void check_dimensions(const std::vector<FeatureVector>& X) {
    if (X.empty()) throw Error("svm: empty training set");
    for (const auto& x : X) {
        if (x.size() != X[0].size()) throw Error("svm: feature vectors differ in dimension");
        for (double v : x) {
            if (!std::isfinite(v)) throw Error("svm: non-finite feature value");
        }
    }
}

struct Solution {
    SvmModel model;
    std::vector<double> alpha;
};

// Dual solver for min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
Solution solve(const Gram& K, const std::vector<const FeatureVector*>& rows, const std::vector<int>& y,
               const SvmParams& params) {
    const std::size_t n = K.n;
    const double C = params.C;
    const double tau = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> alpha(n, 0.0), G(n, -1.0);
    const std::size_t max_iter = params.max_iter ? params.max_iter : std::max<std::size_t>(10000000, 100 * n);

    auto upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
    auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };

    std::size_t iter = 0;
    bool converged = false;
    for (; iter < max_iter; ++iter) {
        double gmax = -inf, gmax2 = -inf;
        std::ptrdiff_t i = -1, j = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == +1) {
                if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i = static_cast<std::ptrdiff_t>(t);
            } else {
                if (!lower(t) && G[t] >= gmax) gmax = G[t], i = static_cast<std::ptrdiff_t>(t);
            }
        }
        double obj_min = inf;
        for (std::size_t t = 0; t < n && i >= 0; ++t) {
            const auto ii = static_cast<std::size_t>(i);
            if (y[t] == +1) {
                if (lower(t)) continue;
                double grad_diff = gmax + G[t];
                gmax2 = std::max(gmax2, G[t]);
                if (grad_diff > 0) {
                    double quad = K(ii, ii) + K(t, t) - 2.0 * y[ii] * Q(ii, t);
                    double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
                    if (obj <= obj_min) obj_min = obj, j = static_cast<std::ptrdiff_t>(t);
                }
            } else {
                if (upper(t)) continue;
                double grad_diff = gmax - G[t];
                gmax2 = std::max(gmax2, -G[t]);
                if (grad_diff > 0) {
                    double quad = K(ii, ii) + K(t, t) + 2.0 * y[ii] * Q(ii, t);
                    double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
                    if (obj <= obj_min) obj_min = obj, j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < params.tol) {
            converged = true;
            break;
        }
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
        const double old_a = alpha[a], old_b = alpha[b];
        if (y[a] != y[b]) {
            double quad = K(a, a) + K(b, b) + 2.0 * Q(a, b);
            if (quad <= 0) quad = tau;
            double delta = (-G[a] - G[b]) / quad;
            double diff = alpha[a] - alpha[b];
            alpha[a] += delta;
            alpha[b] += delta;
            if (diff > 0) {
                if (alpha[b] < 0) alpha[b] = 0, alpha[a] = diff;
            } else {
                if (alpha[a] < 0) alpha[a] = 0, alpha[b] = -diff;
            }
            if (diff > 0) {
                if (alpha[a] > C) alpha[a] = C, alpha[b] = C - diff;
            } else {
                if (alpha[b] > C) alpha[b] = C, alpha[a] = C + diff;
            }
        } else {
            double quad = K(a, a) + K(b, b) - 2.0 * Q(a, b);
            if (quad <= 0) quad = tau;
            double delta = (G[a] - G[b]) / quad;
            double sum = alpha[a] + alpha[b];
            alpha[a] -= delta;
            alpha[b] += delta;
            if (sum > C) {
                if (alpha[a] > C) alpha[a] = C, alpha[b] = sum - C;
            } else {
                if (alpha[b] < 0) alpha[b] = 0, alpha[a] = sum;
            }
            if (sum > C) {
                if (alpha[b] > C) alpha[b] = C, alpha[a] = sum - C;
            } else {
                if (alpha[a] < 0) alpha[a] = 0, alpha[b] = sum;
            }
        }
        const double da = alpha[a] - old_a, db = alpha[b] - old_b;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(a, t) * da + Q(b, t) * db;
    }

    // Offset from free vectors, else the midpoint of the feasible interval.
    double ub = inf, lb = -inf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        double yg = y[t] * G[t];
        if (upper(t)) {
            if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] == +1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    SvmModel m;
    m.kernel = params.kernel;
    m.C = C;
    m.bias = -rho;
    m.iterations = iter;
    m.converged = converged;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            m.support_vectors.push_back(*rows[t]);
            m.alpha.push_back(alpha[t]);
            m.y.push_back(y[t]);
        }
    }
    return {std::move(m), std::move(alpha)};
}

}  // namespace

SvmModel svm_train(const std::vector<FeatureVector>& X, const std::vector<int>& y, const SvmParams& params) {
    params.validate();
    check_dimensions(X);
    if (X.size() != y.size()) throw Error("svm: X and y differ in length");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw Error("svm: labels must be +1 or -1");
    }
    if (!pos || !neg) throw Error("degenerate labels: svm training needs both classes");

    auto order = canonical_order(X, y);
    std::vector<const FeatureVector*> rows;
    std::vector<int> ys;
    for (auto i : order) {
        rows.push_back(&X[i]);
        ys.push_back(y[i]);
    }
    return solve(gram_matrix(rows, params.kernel), rows, ys, params).model;
}

std::array<double, kNumAspects> SvmOvr::scores(const FeatureVector& x) const {
    std::array<double, kNumAspects> out{};
    for (std::size_t a = 0; a < kNumAspects; ++a) {
        const auto& m = machines[a];
        if (m.always_negative) out[a] = 0.0;
        else if (m.always_positive) out[a] = 1.0;
        else out[a] = m.calibration(m.svm.decision(x));
    }
    return out;
}

json SvmOvr::to_json() const {
    json ms = json::array();
    for (std::size_t a = 0; a < kNumAspects; ++a) {
        const auto& m = machines[a];
        json e = {{"aspect", aspect_name(kAllAspects[a])},
                  {"always_negative", m.always_negative},
                  {"always_positive", m.always_positive}};
        if (!m.always_negative && !m.always_positive) {
            e["svm"] = m.svm.to_json();
            e["platt"] = {{"A", m.calibration.A}, {"B", m.calibration.B}};
        }
        ms.push_back(e);
    }
    return {{"machines", ms}, {"warnings", warnings}};
}

SvmOvr SvmOvr::from_json(const json& j) {
    SvmOvr o;
    const auto& ms = j.at("machines");
    if (ms.size() != kNumAspects) throw ParseError("svm bundle: expected six machines");
    for (std::size_t a = 0; a < kNumAspects; ++a) {
        auto& m = o.machines[a];
        m.always_negative = ms[a].at("always_negative").get<bool>();
        m.always_positive = ms[a].at("always_positive").get<bool>();
        if (!m.always_negative && !m.always_positive) {
            m.svm = SvmModel::from_json(ms[a].at("svm"));
            m.calibration = {ms[a].at("platt").at("A").get<double>(), ms[a].at("platt").at("B").get<double>()};
        }
    }
    o.warnings = j.value("warnings", std::vector<std::string>{});
    return o;
}

SvmOvr svm_ovr_train(const std::vector<FeatureVector>& X, const std::vector<std::array<bool, kNumAspects>>& targets,
                     const SvmParams& params) {
    params.validate();
    check_dimensions(X);
    if (X.size() != targets.size()) throw Error("svm ovr: X and targets differ in length");

    auto order = canonical_order(X, targets);
    std::vector<const FeatureVector*> rows;
    for (auto i : order) rows.push_back(&X[i]);
    Gram K;
    bool have_gram = false;

    SvmOvr out;
    for (std::size_t a = 0; a < kNumAspects; ++a) {
        std::vector<int> y;
        std::size_t pos = 0;
        for (auto i : order) {
            y.push_back(targets[i][a] ? 1 : -1);
            pos += targets[i][a];
        }
        auto& m = out.machines[a];
        std::string name(aspect_name(kAllAspects[a]));
        if (pos == 0) {
            m.always_negative = true;
            out.warnings.push_back("aspect " + name + " has no positive examples; machine is always-negative");
            continue;
        }
        if (pos == y.size()) {
            m.always_positive = true;
            out.warnings.push_back("aspect " + name + " has no negative examples; machine is always-positive");
            continue;
        }
        if (!have_gram) {
            K = gram_matrix(rows, params.kernel);
            have_gram = true;
        }
        auto solution = solve(K, rows, y, params);
        m.svm = std::move(solution.model);
        // Training decision values straight from the Gram matrix.
        std::vector<double> dec(rows.size(), m.svm.bias);
        for (std::size_t s = 0; s < rows.size(); ++s) {
            if (solution.alpha[s] == 0.0) continue;
            double c = solution.alpha[s] * y[s];
            for (std::size_t t = 0; t < rows.size(); ++t) dec[t] += c * K(s, t);
        }
        m.calibration = PlattScaling::fit(dec, y);
    }
    return out;
}

}  // namespace absa::models
