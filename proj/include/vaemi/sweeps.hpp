#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vaemi/estimator.hpp"
#include "vaemi/linear_world.hpp"

namespace vaemi {

/// One row of a truncation or classification sweep. `measured` is an MSE or
/// an error rate depending on the sweep; `bound` is the matching lower bound.
struct SweepRow {
    double fraction = 0.0;
    Eigen::Index kept = 0;
    double mi_retained = 0.0;
    double measured = 0.0;
    double bound = 0.0;
};

/// Reconstruction with the top fraction of factors (ranked by the report's
/// MI). The bound applies the scalar MSE bound to each data coordinate with
/// the retained MI and sums over coordinates.
std::vector<SweepRow> truncation_sweep(const LinearWorld& world, const MiReport& report,
                                       const std::vector<double>& fractions);

/// Maps intrinsic coordinates y to a class in [0, num_classes).
struct LabelRule {
    int num_classes = 0;
    std::function<int(const Eigen::Ref<const Eigen::RowVectorXd>&)> classify;

    /// Sign quadrant of (y_0, y_1); four classes.
    static LabelRule quadrant();
};

/// Plug-in Gaussian classifier (class means, shared diagonal covariance) on
/// the kept latent means, trained on `eval_samples` draws and scored on as
/// many fresh ones. Throws EvaluationError if a class has no training samples.
std::vector<SweepRow> classification_sweep(const LinearWorld& world, const LabelRule& labels, const MiReport& report,
                                           const std::vector<double>& fractions, Eigen::Index eval_samples,
                                           std::uint64_t seed);

/// Index of the first row whose measurement falls below its bound by more
/// than `tolerance` (relative to max(1, bound)).
std::optional<std::size_t> first_bound_violation(const std::vector<SweepRow>& rows, double tolerance = 1e-9);

/// Columns: fraction,k,mi_retained_nats,measured,bound.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string sweep_to_json(const std::vector<SweepRow>& rows, const std::string& kind);

/// Parses "1,0.5,0"; throws std::invalid_argument on anything else.
std::vector<double> parse_fraction_list(const std::string& text);

}  // namespace vaemi
