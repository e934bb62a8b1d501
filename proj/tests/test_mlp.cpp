#include <cmath>

#include "absa/common.hpp"
#include "absa/mlp.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace absa;
using namespace absa::models;

namespace {

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> out(M.rows(), std::vector<double>(M.cols()));
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) out[r][c] = M(r, c);
    }
    return out;
}

oracle::Net to_net(const MlpModel& m) {
    oracle::Net net;
    net.softmax = m.config.head == OutputHead::Softmax;
    for (std::size_t l = 0; l < m.W.size(); ++l) {
        net.W.push_back(rows_of(m.W[l]));
        net.b.emplace_back(m.b[l].data(), m.b[l].data() + m.b[l].size());
    }
    return net;
}

// Max relative error of analytic vs central-difference gradients over (a
// sample of) weights, biases and inputs.
double gradient_check(const MlpConfig& config, std::size_t batch, std::uint64_t seed, bool with_mask) {
    auto model = MlpModel::init(config, seed);
    Rng rng(mix_seed(seed, 99));
    std::normal_distribution<double> g(0, 1);
    for (auto& b : model.b) {
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * g(rng);
    }
    Eigen::MatrixXd X(batch, config.layers.front()), T = Eigen::MatrixXd::Zero(batch, config.layers.back());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = g(rng);
        std::uniform_int_distribution<Eigen::Index> cls(0, T.cols() - 1);
        if (config.head == OutputHead::Softmax) T(r, cls(rng)) = 1.0;
        else
            for (Eigen::Index c = 0; c < T.cols(); ++c) T(r, c) = g(rng) > 0 ? 1.0 : 0.0;
    }
    Eigen::MatrixXd mask;
    std::vector<std::vector<double>> mask_rows;
    if (with_mask) {
        mask.resize(batch, config.layers[config.layers.size() - 2]);
        std::bernoulli_distribution keep(0.7);
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
            for (Eigen::Index c = 0; c < mask.cols(); ++c) mask(r, c) = keep(rng) ? 1.0 / 0.7 : 0.0;
        }
        mask_rows = rows_of(mask);
    }
    auto grads = model.loss_and_gradients(X, T, with_mask ? &mask : nullptr);
    auto net = to_net(model);
    auto Xr = rows_of(X), Tr = rows_of(T);
    CHECK(grads.loss == doctest::Approx(oracle::net_loss(net, Xr, Tr, mask_rows)).epsilon(1e-10));

    const double h = 1e-5;
    double worst = 0.0;
    auto probe = [&](double& slot, double analytic) {
        double keep = slot;
        slot = keep + h;
        double up = oracle::net_loss(net, Xr, Tr, mask_rows);
        slot = keep - h;
        double down = oracle::net_loss(net, Xr, Tr, mask_rows);
        slot = keep;
        worst = std::max(worst, oracle::relative_error(analytic, (up - down) / (2 * h)));
    };
    const std::size_t budget = 150;
    for (std::size_t l = 0; l < net.W.size(); ++l) {
        std::size_t rows = net.W[l].size(), cols = net.W[l][0].size();
        std::uniform_int_distribution<std::size_t> pr(0, rows - 1), pc(0, cols - 1);
        bool all = rows * cols <= budget;
        for (std::size_t k = 0; k < (all ? rows * cols : budget); ++k) {
            std::size_t r = all ? k / cols : pr(rng), c = all ? k % cols : pc(rng);
            probe(net.W[l][r][c], grads.dW[l](r, c));
        }
        for (std::size_t r = 0; r < rows; ++r) probe(net.b[l][r], grads.db[l](r));
    }
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < std::min<std::size_t>(Xr[r].size(), 20); ++c) probe(Xr[r][c], grads.dX(r, c));
    }
    return worst;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
    std::vector<MlpConfig> configs = {
        {{12, 256, 128, 6}, OutputHead::Sigmoid, 0.3},
        {{18, 128, 64, 2}, OutputHead::Softmax, 0.3},
        {{16, 6}, OutputHead::Sigmoid, 0.3},
        {{22, 2}, OutputHead::Softmax, 0.3},
    };
    Rng rng(5);
    std::uniform_int_distribution<std::size_t> dim(2, 9);
    while (configs.size() < 24) {
        MlpConfig c;
        std::size_t depth = 2 + configs.size() % 3;
        for (std::size_t d = 0; d < depth; ++d) c.layers.push_back(dim(rng));
        c.head = configs.size() % 2 ? OutputHead::Softmax : OutputHead::Sigmoid;
        if (c.head == OutputHead::Softmax) c.layers.back() = std::max<std::size_t>(2, c.layers.back());
        configs.push_back(c);
    }
    for (std::size_t i = 0; i < configs.size(); ++i) {
        CAPTURE(i);
        CHECK(gradient_check(configs[i], 1 + i % 5, 100 + i, i % 2 == 0) < 1e-4);
    }
}

TEST_CASE("softmax outputs sum to one and sigmoid outputs lie in (0, 1)") {
    auto soft = MlpModel::init({{5, 7, 2}, OutputHead::Softmax, 0.3}, 1);
    auto sig = MlpModel::init({{5, 6}, OutputHead::Sigmoid, 0.3}, 1);
    Rng rng(2);
    std::normal_distribution<double> g(0, 30);
    for (int k = 0; k < 200; ++k) {
        FeatureVector x(5);
        for (auto& v : x) v = g(rng);
        auto p = soft.predict(x);
        CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-9);
        for (double q : sig.predict(FeatureVector(5, g(rng) / 30))) {
            CHECK(q > 0.0);
            CHECK(q < 1.0);
        }
    }
}

TEST_CASE("training descends on separable data and is deterministic") {
    Rng rng(4);
    std::normal_distribution<double> g(0, 0.3);
    std::vector<FeatureVector> X;
    std::vector<std::vector<double>> T;
    for (int i = 0; i < 200; ++i) {
        int c = i % 2;
        X.push_back({c + g(rng), 1 - c + g(rng), g(rng)});
        T.push_back({c ? 1.0 : 0.0, c ? 0.0 : 1.0});
    }
    MlpConfig cfg{{3, 16, 8, 2}, OutputHead::Softmax, 0.3};
    MlpTrainParams p;
    p.batch = 4;
    p.seed = 9;
    auto m = mlp_train(X, T, cfg, p);
    REQUIRE(m.loss_history.size() == 10);
    CHECK(m.loss_history.back() <= m.loss_history.front());
    CHECK(m.trained);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < X.size(); ++i) ok += (m.predict(X[i])[0] > 0.5) == (T[i][0] > 0.5);
    CHECK(ok >= 190);

    auto again = mlp_train(X, T, cfg, p);
    CHECK(again.to_json().dump() == m.to_json().dump());
    auto loaded = MlpModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    for (const auto& x : X) CHECK(loaded.predict(x) == m.predict(x));

    p.epochs = 0;
    auto untrained = mlp_train(X, T, cfg, p);
    CHECK_FALSE(untrained.trained);
}

TEST_CASE("divergence is reported with diagnostics") {
    std::vector<FeatureVector> X = {{1e308, 1e308}, {-1e308, 1e308}};
    std::vector<std::vector<double>> T = {{1, 0}, {0, 1}};
    MlpTrainParams p;
    p.lr = 0.5;
    p.batch = 1;
    CHECK_THROWS_WITH_AS(mlp_train(X, T, {{2, 4, 2}, OutputHead::Softmax, 0.0}, p),
                         doctest::Contains("lr 0.5"), Error);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(MlpModel::init({{3}, OutputHead::Sigmoid, 0.3}, 0), ConfigError);
    CHECK_THROWS_AS(MlpModel::init({{3, 0, 2}, OutputHead::Sigmoid, 0.3}, 0), ConfigError);
    CHECK_THROWS_AS(MlpModel::init({{3, 2}, OutputHead::Sigmoid, 1.0}, 0), ConfigError);
    CHECK_THROWS_AS(MlpModel::init({{3, 1}, OutputHead::Softmax, 0.0}, 0), ConfigError);
    auto m = MlpModel::init({{3, 2}, OutputHead::Sigmoid, 0.0}, 0);
    CHECK_THROWS_AS(m.predict({1.0, 2.0}), Error);
}
