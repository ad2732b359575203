#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace vaemi {

/// Pairwise (tree) summation with a fixed split point, so the result depends
/// only on the values and their order.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> values) {
    constexpr std::size_t kLeaf = 8;
    const std::size_t n = values.size();
    if (n <= kLeaf) {
        Scalar acc(0);
        for (const Scalar v : values) acc += v;
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& expr) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> flat =
        expr.derived().reshaped();
    return pairwise_sum(std::span<const Scalar>(flat.data(), static_cast<std::size_t>(flat.size())));
}

template <typename Derived>
typename Derived::Scalar pairwise_mean(const Eigen::DenseBase<Derived>& expr) {
    return pairwise_sum(expr) / static_cast<typename Derived::Scalar>(expr.size());
}

}  // namespace vaemi
