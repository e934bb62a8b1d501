#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "absa/backend.hpp"
#include "absa/labels.hpp"
#include "json.hpp"

namespace absa::models {

struct Kernel {
    enum class Type { Linear, Rbf };
    Type type = Type::Linear;
    double gamma = 0.0;

    static Kernel linear() { return {}; }
    static Kernel rbf(double gamma) { return {Type::Rbf, gamma}; }

    double operator()(const FeatureVector& a, const FeatureVector& b) const;

    nlohmann::json to_json() const;
    static Kernel from_json(const nlohmann::json& j);
    bool operator==(const Kernel&) const = default;
};

struct SvmParams {
    Kernel kernel;
    double C = 1.0;
    double tol = 1e-3;
    /// 0 picks max(10^7, 100 n).
    std::size_t max_iter = 0;

    void validate() const;
};

/// Sigmoid fit on decision values: P(y = +1 | f) = 1 / (1 + exp(A f + B)).
struct PlattScaling {
    double A = -1.0;
    double B = 0.0;

    double operator()(double decision) const;
    /// Newton fit with backtracking on regularized targets.
    static PlattScaling fit(const std::vector<double>& decisions, const std::vector<int>& y);
};

struct SvmModel {
    Kernel kernel;
    double C = 0.0;
    std::vector<FeatureVector> support_vectors;
    std::vector<double> alpha;
    std::vector<int> y;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = true;

    /// sum_i alpha_i y_i K(sv_i, x) + bias
    double decision(const FeatureVector& x) const;

    nlohmann::json to_json() const;
    static SvmModel from_json(const nlohmann::json& j);
};

/// Labels are +1 / -1. SMO with second-order working-set selection over a
/// precomputed Gram matrix. Rows are put in a canonical order first, so the
/// model does not depend on the order of the training set.
SvmModel svm_train(const std::vector<FeatureVector>& X, const std::vector<int>& y, const SvmParams& params);

struct OvrMachine {
    bool always_negative = false;
    bool always_positive = false;
    SvmModel svm;
    PlattScaling calibration;
};

struct SvmOvr {
    std::array<OvrMachine, kNumAspects> machines;
    std::vector<std::string> warnings;

    /// Calibrated probability per aspect.
    std::array<double, kNumAspects> scores(const FeatureVector& x) const;

    nlohmann::json to_json() const;
    static SvmOvr from_json(const nlohmann::json& j);
};

/// One machine per aspect; the Gram matrix is computed once and shared. An
/// aspect without positive examples yields an always-negative machine and a
/// warning; one without negatives, an always-positive machine.
SvmOvr svm_ovr_train(const std::vector<FeatureVector>& X, const std::vector<std::array<bool, kNumAspects>>& targets,
                     const SvmParams& params);

}  // namespace absa::models
