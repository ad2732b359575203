#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaemi {

/// Univariate normal N(mean, variance). Holds one factor of a diagonal
/// posterior q(z_h|x) or of a reference distribution such as the prior.
template <typename Scalar>
struct BasicGaussian1 {
    Scalar mean{0};
    Scalar variance{1};

    Scalar stddev() const { return std::sqrt(variance); }

    Scalar log_density(Scalar z) const {
        const Scalar d = z - mean;
        return -Scalar(0.5) * (d * d / variance + std::log(Scalar(2) * std::numbers::pi_v<Scalar> * variance));
    }

    friend bool operator==(const BasicGaussian1&, const BasicGaussian1&) = default;
};

using Gaussian1 = BasicGaussian1<double>;

template <typename Scalar>
void check_gaussian(const BasicGaussian1<Scalar>& g) {
    if (!std::isfinite(g.mean))
        throw std::domain_error("gaussian mean must be finite");
    if (!(g.variance > Scalar(0)) || !std::isfinite(g.variance))
        throw std::domain_error("gaussian variance must be positive and finite, got " + std::to_string(double(g.variance)));
}

/// KL(p || q) in nats for univariate normals with arbitrary means.
/// Clamped at zero so rounding never produces a negative divergence.
template <typename Scalar>
Scalar kl_univariate(const BasicGaussian1<Scalar>& p, const BasicGaussian1<Scalar>& q) {
    check_gaussian(p);
    check_gaussian(q);
    const Scalar d = p.mean - q.mean;
    const Scalar kl = Scalar(0.5) * std::log(q.variance / p.variance) + (p.variance + d * d) / (Scalar(2) * q.variance) -
                      Scalar(0.5);
    return kl > Scalar(0) ? kl : Scalar(0);
}

/// Differential entropy of N(., variance) in nats.
template <typename Scalar>
Scalar entropy_univariate(Scalar variance) {
    if (!(variance > Scalar(0)) || !std::isfinite(variance))
        throw std::domain_error("entropy_univariate: variance must be positive and finite");
    return Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar> * variance);
}

/// Finite mixture of univariate normals. The empirical aggregate posterior
/// of one factor is the equal-weight mixture over the snapshot rows.
struct GaussianMixture1 {
    std::vector<Gaussian1> components;
    std::vector<double> weights;

    static GaussianMixture1 equal_weights(std::vector<Gaussian1> components);

    std::size_t size() const { return components.size(); }
    void validate() const;
};

}  // namespace vaemi
