#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace vaemi {

using FactorFlags = Eigen::Array<bool, Eigen::Dynamic, 1>;

struct ThresholdRule {
    double value = 0.5;
};
struct TopKRule {
    Eigen::Index k = 1;
};
struct TopFractionRule {
    double fraction = 1.0;
};
struct ExplicitRule {};

using SelectionRule = std::variant<ThresholdRule, TopKRule, TopFractionRule>;

/// Which factors form z_major; the rest are zeroed before decoding.
struct FactorMask {
    FactorFlags keep;
    std::variant<ThresholdRule, TopKRule, TopFractionRule, ExplicitRule> origin = ExplicitRule{};

    Eigen::Index count() const { return keep.count(); }
};

/// Factor indices by descending MI, ties by ascending index.
template <typename Derived>
std::vector<Eigen::Index> rank_factors(const Eigen::DenseBase<Derived>& mi) {
    for (Eigen::Index h = 0; h < mi.size(); ++h)
        if (!std::isfinite(mi.derived()(h))) throw std::invalid_argument("rank_factors: non-finite MI entry");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(mi.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return mi.derived()(a) > mi.derived()(b); });
    return order;
}

/// Number of factors kept by a top-fraction rule: ceil(fraction * H), with a
/// small guard so that e.g. 0.3 * 10 keeps 3 rather than 4.
inline Eigen::Index top_fraction_count(double fraction, Eigen::Index num_factors) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("top fraction must lie in [0, 1]");
    const double raw = fraction * static_cast<double>(num_factors);
    return std::min(num_factors, static_cast<Eigen::Index>(std::ceil(raw - 1e-9)));
}

template <typename Derived>
FactorMask select_influential(const Eigen::DenseBase<Derived>& mi, const SelectionRule& rule) {
    const Eigen::Index n = mi.size();
    FactorMask mask;
    mask.keep = FactorFlags::Constant(n, false);
    auto keep_top = [&](Eigen::Index k) {
        const auto order = rank_factors(mi);
        for (Eigen::Index i = 0; i < k; ++i) mask.keep[order[static_cast<std::size_t>(i)]] = true;
    };
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, ThresholdRule>) {
                if (!(r.value >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
                for (Eigen::Index h = 0; h < n; ++h) mask.keep[h] = mi.derived()(h) > r.value;
            } else if constexpr (std::is_same_v<R, TopKRule>) {
                if (r.k < 1 || r.k > n) throw std::invalid_argument("top-k needs 1 <= k <= H");
                keep_top(r.k);
            } else {
                keep_top(top_fraction_count(r.fraction, n));
            }
            mask.origin = r;
        },
        rule);
    return mask;
}

enum class BoundKind { Mse, Fano };

/// A lower bound together with the quantities it was computed from.
struct BoundResult {
    BoundKind kind;
    double value = 0.0;
    double entropy = 0.0;  // H(x) for Mse, H(y) for Fano
    double mi = 0.0;
    int num_classes = 0;
};

/// Best achievable squared error given side information carrying `mi` nats:
/// exp(2 (H(x) - I)) / (2 pi e).
BoundResult mse_lower_bound(double entropy_x, double mi);

/// Weakened Fano bound on error probability, (H(y) - I - 1) / ln|Y|,
/// clamped at zero. All logarithms natural.
BoundResult fano_bound(double label_entropy, int num_classes, double mi);

}  // namespace vaemi
