#include <algorithm>
#include <cmath>
#include <numeric>

#include "absa/common.hpp"
#include "absa/evaluate.hpp"

namespace absa::eval {

nlohmann::json TestResult::to_json() const {
    return {{"test", test}, {"statistic", statistic}, {"p_value", p_value}, {"exact", exact}, {"n", n}, {"flag", flag}};
}

TestResult TestResult::from_json(const nlohmann::json& j) {
    return {j.at("test").get<std::string>(), j.at("statistic").get<double>(), j.at("p_value").get<double>(),
            j.at("exact").get<bool>(), j.at("n").get<std::size_t>(), j.at("flag").get<std::string>()};
}

TestResult mcnemar(std::size_t b, std::size_t c) {
    TestResult r;
    r.test = "mcnemar";
    r.n = b + c;
    if (r.n == 0) {
        r.flag = "no discordance";
        return r;
    }
    if (r.n < 25) {
        r.exact = true;
        const std::size_t k = std::min(b, c);
        r.statistic = static_cast<double>(k);
        // Binomial coefficients are exact in double for n < 25.
        double coef = 1.0, tail = 0.0;
        for (std::size_t i = 0; i <= k; ++i) {
            if (i > 0) coef = coef * static_cast<double>(r.n - i + 1) / static_cast<double>(i);
            tail += coef;
        }
        r.p_value = std::min(1.0, 2.0 * tail * std::ldexp(1.0, -static_cast<int>(r.n)));
        return r;
    }
    double diff = std::abs(static_cast<double>(b) - static_cast<double>(c));
    double corrected = std::max(0.0, diff - 1.0);
    r.statistic = corrected * corrected / static_cast<double>(r.n);
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
    return r;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("wilcoxon: paired samples differ in length");
    if (a.empty()) throw Error("wilcoxon: empty samples");
    TestResult r;
    r.test = "wilcoxon";
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double v = a[i] - b[i];
        if (v != 0.0) d.push_back(v);
    }
    const std::size_t n = d.size();
    r.n = n;
    if (n == 0) {
        r.flag = "all differences zero";
        return r;
    }

    // Ranks of |d|, doubled so tied mean ranks stay integral.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
    std::vector<std::size_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const std::size_t t = j - i + 1;
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = i + j + 2;  // 2 * mean of ranks i+1..j+1
        tie_term += static_cast<double>(t * t * t - t);
        i = j + 1;
    }
    std::size_t w2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) w2 += rank2[i];
    }
    const double w_plus = static_cast<double>(w2) / 2.0;
    const double w_minus = static_cast<double>(total2 - w2) / 2.0;
    r.statistic = std::min(w_plus, w_minus);

    if (n <= 25) {
        r.exact = true;
        // count[s]: sign assignments whose positive doubled-rank sum is s.
        std::vector<double> count(total2 + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (count[s] != 0.0) count[s + rank2[i]] += count[s];
            }
            reach += rank2[i];
        }
        const std::size_t lo = std::min(w2, total2 - w2);
        double tail = 0.0;
        for (std::size_t s = 0; s <= lo; ++s) tail += count[s];
        r.p_value = std::min(1.0, 2.0 * tail * std::ldexp(1.0, -static_cast<int>(n)));
        return r;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = (w_plus - mean) / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    return r;
}

}  // namespace absa::eval
