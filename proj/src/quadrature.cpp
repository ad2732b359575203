#include "vaemi/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "vaemi/errors.hpp"
#include "vaemi/summation.hpp"

namespace vaemi {

GaussianMixture1 GaussianMixture1::equal_weights(std::vector<Gaussian1> components) {
    GaussianMixture1 mix;
    const double w = components.empty() ? 0.0 : 1.0 / static_cast<double>(components.size());
    mix.weights.assign(components.size(), w);
    mix.components = std::move(components);
    return mix;
}

void GaussianMixture1::validate() const {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (weights.size() != components.size())
        throw std::invalid_argument("mixture weights and components differ in length");
    for (const auto& c : components) check_gaussian(c);
    for (const double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("mixture weights must be finite and >= 0");
    const double total = pairwise_sum(std::span<const double>(weights));
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

void QuadratureSpec::validate() const {
    if (order < 16) throw std::invalid_argument("quadrature order must be >= 16");
    if (half_width < 8.0) throw std::invalid_argument("quadrature half-width must be >= 8 standard deviations");
    if (limit < 1) throw std::invalid_argument("quadrature refinement limit must be >= 1");
    if (!(abs_tolerance > 0.0) || !(rel_tolerance >= 0.0)) throw std::invalid_argument("quadrature tolerances must be positive");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Log-density evaluation of a mixture with the zero-weight components removed.
class MixtureDensity {
public:
    explicit MixtureDensity(const GaussianMixture1& mix) {
        mix.validate();
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < mix.size(); ++i)
            if (mix.weights[i] > 0.0) keep.push_back(i);
        const auto n = static_cast<Eigen::Index>(keep.size());
        means_.resize(n);
        inv_var_.resize(n);
        log_w_.resize(n);
        offset_.resize(n);
        sd_.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto& c = mix.components[keep[static_cast<std::size_t>(k)]];
            means_[k] = c.mean;
            inv_var_[k] = 1.0 / c.variance;
            sd_[k] = c.stddev();
            log_w_[k] = std::log(mix.weights[keep[static_cast<std::size_t>(k)]]);
            offset_[k] = log_w_[k] - 0.5 * (kLog2Pi + std::log(c.variance));
        }
        terms_.resize(n);
    }

    Eigen::Index size() const { return means_.size(); }
    const Eigen::ArrayXd& means() const { return means_; }
    const Eigen::ArrayXd& stddevs() const { return sd_; }
    const Eigen::ArrayXd& log_weights() const { return log_w_; }

    // Fills terms_ with log(w_m p_m(z)) and returns log p(z).
    double log_density(double z) const {
        terms_ = offset_ - 0.5 * (z - means_).square() * inv_var_;
        const double top = terms_.maxCoeff();
        if (!std::isfinite(top)) return top;
        const Eigen::ArrayXd scaled = (terms_ - top).exp();
        return top + std::log(pairwise_sum(scaled));
    }

    // log(w_m p_m(z)) for the most recent log_density call.
    const Eigen::ArrayXd& last_terms() const { return terms_; }

private:
    Eigen::ArrayXd means_, inv_var_, log_w_, offset_, sd_;
    mutable Eigen::ArrayXd terms_;
};

struct Interval {
    double lo, hi;
};

// Breakpoints spaced one standard deviation apart over every involved
// component's window, merged into disjoint integration regions.
std::vector<std::vector<double>> integration_panels(const Eigen::ArrayXd& means, const Eigen::ArrayXd& sds,
                                                    double half_width) {
    std::vector<Interval> windows;
    windows.reserve(static_cast<std::size_t>(means.size()));
    for (Eigen::Index i = 0; i < means.size(); ++i)
        windows.push_back({means[i] - half_width * sds[i], means[i] + half_width * sds[i]});
    std::sort(windows.begin(), windows.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

    std::vector<Interval> merged;
    for (const auto& w : windows) {
        if (!merged.empty() && w.lo <= merged.back().hi)
            merged.back().hi = std::max(merged.back().hi, w.hi);
        else
            merged.push_back(w);
    }

    const double min_gap = 0.25 * sds.minCoeff();
    std::vector<double> points;
    const int steps = static_cast<int>(std::ceil(half_width));
    for (Eigen::Index i = 0; i < means.size(); ++i)
        for (int k = -steps; k <= steps; ++k) points.push_back(means[i] + k * sds[i]);
    std::sort(points.begin(), points.end());

    std::vector<std::vector<double>> regions;
    auto it = points.begin();
    for (const auto& r : merged) {
        std::vector<double> bp{r.lo};
        while (it != points.end() && *it <= r.lo) ++it;
        for (; it != points.end() && *it < r.hi; ++it)
            if (*it - bp.back() >= min_gap && r.hi - *it >= min_gap) bp.push_back(*it);
        bp.push_back(r.hi);
        regions.push_back(std::move(bp));
    }
    return regions;
}

struct SimpsonStats {
    double error = 0.0;
    double unconverged = 0.0;
};

template <typename F>
double simpson_refine(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                      int depth, int limit, SimpsonStats& stats) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= limit) {
        stats.unconverged += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    if (depth > 0 && std::abs(delta) <= 15.0 * tol) {
        stats.error += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, limit, stats) +
           simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, limit, stats);
}

template <typename F>
QuadratureResult adaptive_simpson(const F& f, const std::vector<std::vector<double>>& regions,
                                  const QuadratureSpec& spec, const char* what) {
    struct Panel {
        double a, b, fa, fm, fb, whole;
    };
    std::vector<Panel> panels;
    double span = 0.0;
    for (const auto& bp : regions) {
        double fprev = f(bp.front());
        for (std::size_t i = 1; i < bp.size(); ++i) {
            const double a = bp[i - 1], b = bp[i];
            const double fb = f(b);
            const double fm = f(0.5 * (a + b));
            panels.push_back({a, b, fprev, fm, fb, (b - a) / 6.0 * (fprev + 4.0 * fm + fb)});
            span += b - a;
            fprev = fb;
        }
    }
    std::vector<double> coarse(panels.size());
    std::transform(panels.begin(), panels.end(), coarse.begin(), [](const Panel& p) { return p.whole; });
    const double estimate = pairwise_sum(std::span<const double>(coarse));
    const double tol = std::max(spec.abs_tolerance, spec.rel_tolerance * std::abs(estimate));

    SimpsonStats stats;
    std::vector<double> parts(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const auto& p = panels[i];
        parts[i] = simpson_refine(f, p.a, p.b, p.fa, p.fm, p.fb, p.whole, tol * (p.b - p.a) / span, 0, spec.limit, stats);
    }
    const double achieved = stats.error + stats.unconverged;
    if (stats.unconverged > 0.0 && achieved > tol)
        throw NumericError(std::string(what) + ": adaptive Simpson did not converge (achieved tolerance " +
                               std::to_string(achieved) + ", requested " + std::to_string(tol) + ")",
                           achieved);
    return {pairwise_sum(std::span<const double>(parts)), achieved};
}

// Sum over components m of w_m * E_{p_m}[g(z)] using the Gauss-Hermite rule.
template <typename G>
double gauss_hermite_mixture(const MixtureDensity& mix, const GaussHermiteRule& rule, const G& g) {
    const auto n = mix.size();
    Eigen::ArrayXd per_component(n);
    std::vector<double> node_terms(rule.nodes.size());
    for (Eigen::Index m = 0; m < n; ++m) {
        const double mu = mix.means()[m];
        const double scale = std::numbers::sqrt2 * mix.stddevs()[m];
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            node_terms[i] = rule.weights[i] * g(mu + scale * rule.nodes[i], m);
        per_component[m] = std::exp(mix.log_weights()[m]) * pairwise_sum(std::span<const double>(node_terms)) /
                           std::sqrt(std::numbers::pi);
    }
    return pairwise_sum(per_component);
}

template <typename G>
QuadratureResult gauss_hermite_with_estimate(const MixtureDensity& mix, int order, const G& g) {
    const double full = gauss_hermite_mixture(mix, gauss_hermite_rule(order), g);
    const double half = gauss_hermite_mixture(mix, gauss_hermite_rule(std::max(order / 2, 2)), g);
    return {full, std::abs(full - half)};
}

Eigen::ArrayXd concat(const Eigen::ArrayXd& a, double extra) {
    Eigen::ArrayXd out(a.size() + 1);
    out << a, extra;
    return out;
}

double clamp_nonnegative(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

GaussHermiteRule gauss_hermite_rule(int order) {
    if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be positive");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(0.5 * k);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
        rule.weights[static_cast<std::size_t>(i)] = std::sqrt(std::numbers::pi) * v0 * v0;
    }
    return rule;
}

QuadratureResult mixture_kl_quadrature(const GaussianMixture1& p, const Gaussian1& q, const QuadratureSpec& spec) {
    spec.validate();
    check_gaussian(q);
    const MixtureDensity mix(p);
    QuadratureResult r;
    if (spec.scheme == QuadratureScheme::GaussHermite) {
        r = gauss_hermite_with_estimate(mix, spec.order,
                                        [&](double z, Eigen::Index) { return mix.log_density(z) - q.log_density(z); });
    } else {
        const auto regions = integration_panels(concat(mix.means(), q.mean), concat(mix.stddevs(), q.stddev()),
                                                spec.half_width);
        r = adaptive_simpson(
            [&](double z) {
                const double lp = mix.log_density(z);
                return std::isfinite(lp) ? std::exp(lp) * (lp - q.log_density(z)) : 0.0;
            },
            regions, spec, "mixture_kl_quadrature");
    }
    r.value = clamp_nonnegative(r.value);
    return r;
}

QuadratureResult mixture_mi(const GaussianMixture1& p, const QuadratureSpec& spec) {
    spec.validate();
    const MixtureDensity mix(p);
    QuadratureResult r;
    if (spec.scheme == QuadratureScheme::GaussHermite) {
        r = gauss_hermite_with_estimate(mix, spec.order, [&](double z, Eigen::Index m) {
            const double lp = mix.log_density(z);
            return mix.last_terms()[m] - mix.log_weights()[m] - lp;
        });
    } else {
        const auto regions = integration_panels(mix.means(), mix.stddevs(), spec.half_width);
        r = adaptive_simpson(
            [&](double z) {
                const double lp = mix.log_density(z);
                if (!std::isfinite(lp)) return 0.0;
                const Eigen::ArrayXd& t = mix.last_terms();
                const Eigen::ArrayXd contrib = t.exp() * (t - mix.log_weights() - lp);
                return pairwise_sum(contrib);
            },
            regions, spec, "mixture_mi");
    }
    r.value = clamp_nonnegative(r.value);
    return r;
}

QuadratureResult mixture_entropy(const GaussianMixture1& p, const QuadratureSpec& spec) {
    spec.validate();
    const MixtureDensity mix(p);
    if (spec.scheme == QuadratureScheme::GaussHermite)
        return gauss_hermite_with_estimate(mix, spec.order, [&](double z, Eigen::Index) { return -mix.log_density(z); });
    const auto regions = integration_panels(mix.means(), mix.stddevs(), spec.half_width);
    return adaptive_simpson(
        [&](double z) {
            const double lp = mix.log_density(z);
            return std::isfinite(lp) ? -std::exp(lp) * lp : 0.0;
        },
        regions, spec, "mixture_entropy");
}

}  // namespace vaemi
