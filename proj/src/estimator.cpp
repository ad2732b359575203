#include "vaemi/estimator.hpp"

#include <stdexcept>

#include "vaemi/summation.hpp"

namespace vaemi {

QStar solve_q_star(const EncoderSnapshot& snapshot, bool fit_mean) {
    require_valid(snapshot);
    const auto factors = snapshot.num_factors();
    QStar q;
    q.mean_fitted = fit_mean;
    q.variances.resize(factors);
    q.means = Eigen::VectorXd::Zero(factors);
    for (Eigen::Index h = 0; h < factors; ++h) {
        const auto mu = snapshot.mu.col(h).array();
        const auto sigma = snapshot.sigma.col(h).array();
        if (fit_mean) {
            const double centre = pairwise_mean(mu);
            q.means[h] = centre;
            q.variances[h] = pairwise_mean((sigma.square() + (mu - centre).square()).eval());
        } else {
            q.variances[h] = pairwise_mean((sigma.square() + mu.square()).eval());
        }
    }
    return q;
}

Eigen::VectorXd estimate_factor_mi(const EncoderSnapshot& snapshot, const QStar& q_star) {
    const auto factors = snapshot.num_factors();
    if (q_star.variances.size() != factors || q_star.means.size() != factors)
        throw std::invalid_argument("estimate_factor_mi: q* has " + std::to_string(q_star.variances.size()) +
                                    " factors, snapshot has " + std::to_string(factors));
    const auto samples = snapshot.num_samples();
    Eigen::VectorXd mi(factors);
    Eigen::ArrayXd kl(samples);
    for (Eigen::Index h = 0; h < factors; ++h) {
        const Gaussian1 ref = q_star.factor(h);
        for (Eigen::Index m = 0; m < samples; ++m) {
            const double s = snapshot.sigma(m, h);
            kl[m] = kl_univariate(Gaussian1{snapshot.mu(m, h), s * s}, ref);
        }
        mi[h] = pairwise_mean(kl);
    }
    return mi;
}

double estimate_total_mi(const Eigen::Ref<const Eigen::VectorXd>& per_factor) {
    if (!per_factor.allFinite()) throw std::invalid_argument("estimate_total_mi: non-finite entry");
    return pairwise_sum(per_factor);
}

std::vector<Gaussian1> prior_references(Eigen::Index num_factors) {
    return std::vector<Gaussian1>(static_cast<std::size_t>(num_factors), Gaussian1{0.0, 1.0});
}

std::vector<FactorAudit> decomposition_audit(const EncoderSnapshot& snapshot, const std::vector<Gaussian1>& references,
                                             const QuadratureSpec& spec) {
    require_valid(snapshot);
    const auto factors = snapshot.num_factors();
    if (static_cast<Eigen::Index>(references.size()) != factors)
        throw std::invalid_argument("decomposition_audit: need one reference per factor");
    const auto samples = snapshot.num_samples();
    std::vector<FactorAudit> out;
    out.reserve(static_cast<std::size_t>(factors));
    for (Eigen::Index h = 0; h < factors; ++h) {
        const Gaussian1& ref = references[static_cast<std::size_t>(h)];
        std::vector<Gaussian1> comps;
        comps.reserve(static_cast<std::size_t>(samples));
        Eigen::ArrayXd kl(samples);
        for (Eigen::Index m = 0; m < samples; ++m) {
            const double s = snapshot.sigma(m, h);
            comps.push_back({snapshot.mu(m, h), s * s});
            kl[m] = kl_univariate(comps.back(), ref);
        }
        const auto mixture = GaussianMixture1::equal_weights(std::move(comps));
        FactorAudit a;
        a.index = h;
        a.lhs = pairwise_mean(kl);
        const auto mi = mixture_mi(mixture, spec);
        const auto marg = mixture_kl_quadrature(mixture, ref, spec);
        a.mixture_mi = mi.value;
        a.marginal_kl = marg.value;
        a.residual = a.lhs - (a.mixture_mi + a.marginal_kl);
        a.tolerance = mi.error_estimate + marg.error_estimate;
        out.push_back(a);
    }
    return out;
}

MiReport analyze(const EncoderSnapshot& snapshot, const AnalyzeOptions& options) {
    if (!(options.threshold >= 0.0) || !std::isfinite(options.threshold))
        throw std::invalid_argument("analyze: threshold must be finite and >= 0");
    MiReport report;
    report.threshold = options.threshold;
    report.q_star = solve_q_star(snapshot, options.fit_mean);
    report.per_factor_mi = estimate_factor_mi(snapshot, report.q_star);
    report.total_mi = estimate_total_mi(report.per_factor_mi);
    report.ranking = rank_factors(report.per_factor_mi);
    report.influential = select_influential(report.per_factor_mi, ThresholdRule{options.threshold}).keep;
    if (options.with_audit)
        report.audit = decomposition_audit(snapshot, prior_references(snapshot.num_factors()), options.quadrature);
    return report;
}

}  // namespace vaemi
