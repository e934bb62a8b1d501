#include <algorithm>
#include <cmath>
#include <numeric>

#include "absa/common.hpp"
#include "absa/svm.hpp"
#include "doctest.h"

using namespace absa;
using namespace absa::models;

namespace {

double accuracy(const SvmModel& m, const std::vector<FeatureVector>& X, const std::vector<int>& y) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < X.size(); ++i) ok += (m.decision(X[i]) > 0 ? 1 : -1) == y[i];
    return static_cast<double>(ok) / static_cast<double>(X.size());
}

void check_feasible(const SvmModel& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
        CHECK(m.alpha[i] >= -1e-6);
        CHECK(m.alpha[i] <= m.C + 1e-6);
        s += m.alpha[i] * m.y[i];
    }
    CHECK(std::abs(s) <= 1e-6);
}

// Best training accuracy of any line w.x + b through a dense sweep of
// directions and offsets.
double best_linear_accuracy(const std::vector<FeatureVector>& X, const std::vector<int>& y) {
    double best = 0.0;
    for (int k = 0; k < 720; ++k) {
        double th = M_PI * k / 360.0;
        std::vector<double> proj;
        for (const auto& x : X) proj.push_back(std::cos(th) * x[0] + std::sin(th) * x[1]);
        std::vector<double> cuts = proj;
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> offsets = {cuts.front() - 1, cuts.back() + 1};
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) offsets.push_back((cuts[i] + cuts[i + 1]) / 2);
        for (double b : offsets) {
            std::size_t ok = 0;
            for (std::size_t i = 0; i < X.size(); ++i) ok += (proj[i] > b ? 1 : -1) == y[i];
            best = std::max(best, static_cast<double>(ok) / X.size());
        }
    }
    return best;
}

}  // namespace

TEST_CASE("linearly separable points are fit exactly") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<FeatureVector> X;
    std::vector<int> y;
    while (X.size() < 60) {
        double a = u(rng), b = u(rng);
        double m = a + 2 * b - 0.3;
        if (std::abs(m) < 0.2) continue;
        X.push_back({a, b});
        y.push_back(m > 0 ? 1 : -1);
    }
    auto model = svm_train(X, y, {Kernel::linear(), 10.0});
    CHECK(model.converged);
    CHECK(accuracy(model, X, y) == 1.0);
    check_feasible(model);
}

TEST_CASE("xor needs the rbf kernel") {
    std::vector<FeatureVector> X = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    std::vector<int> y = {-1, -1, 1, 1};
    CHECK(best_linear_accuracy(X, y) < 1.0);
    auto lin = svm_train(X, y, {Kernel::linear(), 10.0});
    CHECK(accuracy(lin, X, y) < 1.0);
    auto rbf = svm_train(X, y, {Kernel::rbf(0.5), 10.0});
    CHECK(accuracy(rbf, X, y) == 1.0);
    check_feasible(rbf);
}

TEST_CASE("single-class input is rejected") {
    CHECK_THROWS_WITH_AS(svm_train({{1.0}, {2.0}}, {1, 1}, {}), doctest::Contains("degenerate labels"), Error);
    CHECK_THROWS_AS(svm_train({{1.0}, {2.0}}, {1, 0}, {}), Error);
    CHECK_THROWS_AS(svm_train({{1.0}, {2.0, 1.0}}, {1, -1}, {}), Error);
    SvmParams bad;
    bad.C = 0;
    CHECK_THROWS_AS(svm_train({{1.0}, {2.0}}, {1, -1}, bad), ConfigError);
}

TEST_CASE("dual feasibility and permutation invariance on random data") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng rng(seed);
        std::normal_distribution<double> g(0, 1);
        std::size_t n = 10 + seed * 3;
        std::vector<FeatureVector> X;
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            X.push_back({g(rng), g(rng), g(rng)});
            y.push_back(X.back()[0] * X.back()[1] + 0.3 * g(rng) > 0 ? 1 : -1);
        }
        y[0] = 1;
        y[1] = -1;
        SvmParams p{seed % 2 ? Kernel::rbf(0.7) : Kernel::linear(), seed % 3 ? 1.0 : 100.0};
        auto m = svm_train(X, y, p);
        check_feasible(m);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<FeatureVector> X2;
        std::vector<int> y2;
        for (auto i : perm) {
            X2.push_back(X[i]);
            y2.push_back(y[i]);
        }
        auto m2 = svm_train(X2, y2, p);
        for (int k = 0; k < 20; ++k) {
            FeatureVector q = {g(rng), g(rng), g(rng)};
            CHECK(m.decision(q) == m2.decision(q));
        }
    }
}

TEST_CASE("kkt conditions hold within tolerance") {
    Rng rng(7);
    std::normal_distribution<double> g(0, 1);
    std::vector<FeatureVector> X;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        X.push_back({g(rng), g(rng)});
        y.push_back(X.back()[0] + 0.5 * g(rng) > 0 ? 1 : -1);
    }
    SvmParams p{Kernel::rbf(0.5), 5.0};
    auto m = svm_train(X, y, p);
    // Margin violations only where alpha hits C; inactive points lie outside the margin.
    for (std::size_t i = 0; i < X.size(); ++i) {
        double margin = y[i] * m.decision(X[i]);
        double a = 0.0;
        for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
            if (m.support_vectors[s] == X[i]) a = m.alpha[s];
        }
        if (a == 0.0) CHECK(margin >= 1 - 2e-3);
        else if (a < p.C) CHECK(std::abs(margin - 1) <= 2e-3);
        else CHECK(margin <= 1 + 2e-3);
    }
}

TEST_CASE("platt scaling") {
    std::vector<double> dec = {-3, -2, -1.5, -1, -0.5, 0.2, 0.5, 1, 2, 3};
    std::vector<int> y = {-1, -1, -1, 1, -1, -1, 1, 1, 1, 1};
    auto s = PlattScaling::fit(dec, y);
    CHECK(s.A < 0);
    CHECK(s(2.0) > s(0.0));
    CHECK(s(-50) >= 0.0);
    CHECK(s(50) <= 1.0);
    // Stationarity: gradient of the regularized log-loss vanishes.
    double hi = 6.0 / 7.0, lo = 1.0 / 7.0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
        double t = y[i] > 0 ? hi : lo;
        double p = s(dec[i]);
        g1 += dec[i] * (t - p);
        g2 += t - p;
    }
    CHECK(std::abs(g1) < 1e-4);
    CHECK(std::abs(g2) < 1e-4);
}

TEST_CASE("one-vs-rest bundle") {
    Rng rng(3);
    std::normal_distribution<double> g(0, 0.1);
    std::vector<FeatureVector> X;
    std::vector<std::array<bool, kNumAspects>> T;
    for (int i = 0; i < 60; ++i) {
        std::array<bool, kNumAspects> t{};
        FeatureVector x(6, 0.0);
        for (std::size_t a = 0; a < 5; ++a) {
            t[a] = (i >> a) & 1;
            x[a] = (t[a] ? 1.0 : 0.0) + g(rng);
        }
        x[5] = g(rng);
        X.push_back(x);
        T.push_back(t);
    }
    auto ovr = svm_ovr_train(X, T, {Kernel::rbf(0.5), 10.0});
    CHECK(ovr.machines[5].always_negative);
    REQUIRE(ovr.warnings.size() == 1);
    CHECK(ovr.warnings[0].find("communication") != std::string::npos);
    for (std::size_t i = 0; i < X.size(); ++i) {
        auto s = ovr.scores(X[i]);
        CHECK(s[5] == 0.0);
        for (std::size_t a = 0; a < 5; ++a) CHECK((s[a] > 0.5) == T[i][a]);
    }
    auto copy = SvmOvr::from_json(nlohmann::json::parse(ovr.to_json().dump()));
    for (const auto& x : X) CHECK(copy.scores(x) == ovr.scores(x));

    auto dup = X;
    auto dupT = T;
    dup.insert(dup.end(), X.begin(), X.end());
    dupT.insert(dupT.end(), T.begin(), T.end());
    auto a = svm_ovr_train(dup, dupT, {Kernel::rbf(0.5), 10.0});
    auto b = svm_ovr_train(dup, dupT, {Kernel::rbf(0.5), 10.0});
    CHECK(a.to_json().dump() == b.to_json().dump());
}
