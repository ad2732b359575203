#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vaemi/gaussian.hpp"
#include "vaemi/quadrature.hpp"
#include "vaemi/selection.hpp"
#include "vaemi/snapshot.hpp"

namespace vaemi {

/// Factorized Gaussian fit q*(z) to the aggregate posterior.
struct QStar {
    Eigen::VectorXd variances;
    Eigen::VectorXd means;
    bool mean_fitted = false;

    Gaussian1 factor(Eigen::Index h) const { return {means[h], variances[h]}; }
};

/// One factor's check of E KL(q(z_h|x) || r) = I(x; z_h) + KL(q(z_h) || r).
struct FactorAudit {
    Eigen::Index index = 0;
    double lhs = 0.0;          // average closed-form KL to the reference
    double mixture_mi = 0.0;   // quadrature
    double marginal_kl = 0.0;  // quadrature
    double residual = 0.0;     // lhs - (mixture_mi + marginal_kl)
    double tolerance = 0.0;    // combined quadrature error estimate
};

struct MiReport {
    Eigen::VectorXd per_factor_mi;
    double total_mi = 0.0;
    QStar q_star;
    std::vector<Eigen::Index> ranking;
    FactorFlags influential;
    double threshold = 0.5;
    std::optional<std::vector<FactorAudit>> audit;

    Eigen::Index num_factors() const { return per_factor_mi.size(); }
    Eigen::Index influential_count() const { return influential.count(); }
};

/// Closed-form minimizer of the average KL from each row's posterior to a
/// factorized Gaussian. Zero-mean by default: variance_h = mean(sigma^2 + mu^2).
QStar solve_q_star(const EncoderSnapshot& snapshot, bool fit_mean = false);

/// Average over samples of KL(q(z_h|x^m) || q*_h), one entry per factor.
Eigen::VectorXd estimate_factor_mi(const EncoderSnapshot& snapshot, const QStar& q_star);

/// Sum of the per-factor estimates (pairwise summation).
double estimate_total_mi(const Eigen::Ref<const Eigen::VectorXd>& per_factor);

/// Per-factor audit against `references` (one Gaussian per factor).
std::vector<FactorAudit> decomposition_audit(const EncoderSnapshot& snapshot, const std::vector<Gaussian1>& references,
                                             const QuadratureSpec& spec = {});

/// The standard normal prior, repeated once per factor.
std::vector<Gaussian1> prior_references(Eigen::Index num_factors);

struct AnalyzeOptions {
    double threshold = 0.5;
    bool fit_mean = false;
    bool with_audit = false;
    QuadratureSpec quadrature{};
};

/// End-to-end estimate: q*, per-factor and total MI, ranking and influential
/// mask. The optional audit runs against the N(0,1) prior.
MiReport analyze(const EncoderSnapshot& snapshot, const AnalyzeOptions& options = {});

// Serialization. Key order is fixed; numbers use the shortest representation
// that round-trips, so identical reports produce identical bytes.
std::string report_to_json(const MiReport& report);
std::string report_to_csv(const MiReport& report);
/// Factor index vs MI, for pulse plots.
std::string report_pulse_csv(const MiReport& report);
/// Reads the fields written by report_to_json; throws FormatError.
MiReport report_from_json(const std::string& text);

}  // namespace vaemi
