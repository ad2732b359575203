#pragma once

#include "vaemi/gaussian.hpp"

namespace vaemi {

enum class QuadratureScheme { AdaptiveSimpson, GaussHermite };

/// Controls the numerical integration used to audit closed forms.
///
/// AdaptiveSimpson integrates over the union of [mean - half_width*sd,
/// mean + half_width*sd] for every component involved, refining each panel
/// until the Richardson error estimate meets the tolerance or `limit`
/// bisection levels are exhausted. GaussHermite applies an `order`-point rule
/// per mixture component.
struct QuadratureSpec {
    QuadratureScheme scheme = QuadratureScheme::AdaptiveSimpson;
    int order = 64;
    int limit = 40;
    double half_width = 10.0;
    double abs_tolerance = 1e-9;
    double rel_tolerance = 1e-12;

    void validate() const;

    static QuadratureSpec gauss_hermite(int order = 96) {
        QuadratureSpec s;
        s.scheme = QuadratureScheme::GaussHermite;
        s.order = order;
        return s;
    }
};

/// A quadrature value together with the error estimate it was accepted at.
struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// KL(p || q) for a mixture p against a single normal q.
QuadratureResult mixture_kl_quadrature(const GaussianMixture1& p, const Gaussian1& q, const QuadratureSpec& spec = {});

/// Weighted average of KL(component || mixture): the mutual information between
/// the component index and z under the mixture.
QuadratureResult mixture_mi(const GaussianMixture1& p, const QuadratureSpec& spec = {});

/// Differential entropy of the mixture.
QuadratureResult mixture_entropy(const GaussianMixture1& p, const QuadratureSpec& spec = {});

/// Gauss-Hermite nodes and weights for weight function exp(-x^2), via the
/// eigen-decomposition of the Jacobi matrix.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite_rule(int order);

}  // namespace vaemi
