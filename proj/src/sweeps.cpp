#include "vaemi/sweeps.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "text_format.hpp"
#include "vaemi/errors.hpp"
#include "vaemi/summation.hpp"

namespace vaemi {

namespace {

void check_compatible(const LinearWorld& world, const MiReport& report) {
    world.validate();
    if (report.num_factors() != world.latent_dim)
        throw std::invalid_argument("sweep: report has " + std::to_string(report.num_factors()) +
                                    " factors, world has " + std::to_string(world.latent_dim));
}

double retained_mi(const MiReport& report, const FactorMask& mask) {
    return pairwise_sum((report.per_factor_mi.array() * mask.keep.cast<double>()).eval());
}

std::vector<Eigen::Index> kept_columns(const FactorMask& mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index h = 0; h < mask.keep.size(); ++h)
        if (mask.keep[h]) cols.push_back(h);
    return cols;
}

struct LabelledSet {
    Eigen::MatrixXd features;  // latent means, M x H
    std::vector<int> labels;
};

LabelledSet draw_labelled(const LinearWorld& world, const LabelRule& rule, Eigen::Index samples, std::uint64_t seed) {
    const auto sample = sample_world(world, samples, seed);
    // Features are draws z ~ q(z|x), not the posterior means: the bound concerns
    // the information z carries, and mu(x) alone can carry more.
    const auto code = encode_data(world, sample.data);
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    LabelledSet set;
    set.features = code.mu;
    for (Eigen::Index m = 0; m < samples; ++m)
        for (Eigen::Index h = 0; h < set.features.cols(); ++h) set.features(m, h) += code.sigma(m, h) * normal(rng);
    set.labels.resize(static_cast<std::size_t>(samples));
    for (Eigen::Index m = 0; m < samples; ++m) {
        const int c = rule.classify(sample.intrinsic.row(m));
        if (c < 0 || c >= rule.num_classes) throw std::invalid_argument("label rule produced an out-of-range class");
        set.labels[static_cast<std::size_t>(m)] = c;
    }
    return set;
}

// Class-conditional Gaussians with a pooled diagonal covariance.
class PlugInClassifier {
public:
    PlugInClassifier(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes) {
        const auto n = x.rows();
        const auto dim = x.cols();
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(classes);
        means_ = Eigen::MatrixXd::Zero(classes, dim);
        for (Eigen::Index m = 0; m < n; ++m) {
            const int c = y[static_cast<std::size_t>(m)];
            counts[c] += 1.0;
            means_.row(c) += x.row(m);
        }
        for (int c = 0; c < classes; ++c)
            if (counts[c] == 0.0) throw EvaluationError("class " + std::to_string(c) + " has no training samples");
        means_.array().colwise() /= counts.array();
        log_prior_ = (counts.array() / static_cast<double>(n)).log().matrix();
        Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index m = 0; m < n; ++m)
            var += (x.row(m) - means_.row(y[static_cast<std::size_t>(m)])).array().square().matrix().transpose();
        inv_var_ = (var / static_cast<double>(n)).cwiseMax(1e-300).cwiseInverse();
    }

    int predict(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < means_.rows(); ++c) {
            const double score =
                log_prior_[c] - 0.5 * ((z - means_.row(c)).array().square() * inv_var_.transpose().array()).sum();
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(c);
            }
        }
        return best;
    }

private:
    Eigen::MatrixXd means_;
    Eigen::VectorXd log_prior_;
    Eigen::VectorXd inv_var_;
};

double empirical_entropy(const std::vector<int>& labels, int classes) {
    Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(classes);
    for (const int c : labels) counts[c] += 1.0;
    const Eigen::ArrayXd p = counts / static_cast<double>(labels.size());
    return -pairwise_sum((p > 0.0).select(p * p.log(), 0.0).eval());
}

}  // namespace

LabelRule LabelRule::quadrant() {
    LabelRule rule;
    rule.num_classes = 4;
    rule.classify = [](const Eigen::Ref<const Eigen::RowVectorXd>& y) {
        if (y.size() < 2) throw std::invalid_argument("quadrant labels need at least two intrinsic coordinates");
        return (y[0] >= 0.0 ? 0 : 1) + (y[1] >= 0.0 ? 0 : 2);
    };
    return rule;
}

std::vector<SweepRow> truncation_sweep(const LinearWorld& world, const MiReport& report,
                                       const std::vector<double>& fractions) {
    check_compatible(world, report);
    const Eigen::VectorXd entropies = coordinate_entropies(world);
    std::vector<SweepRow> rows;
    for (const double f : fractions) {
        const auto mask = select_influential(report.per_factor_mi, TopFractionRule{f});
        SweepRow row;
        row.fraction = f;
        row.kept = mask.count();
        row.mi_retained = retained_mi(report, mask);
        row.measured = optimal_truncated_mse(world, mask.keep);
        Eigen::ArrayXd per_coord(entropies.size());
        for (Eigen::Index d = 0; d < entropies.size(); ++d)
            per_coord[d] = mse_lower_bound(entropies[d], std::max(0.0, row.mi_retained)).value;
        row.bound = pairwise_sum(per_coord);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SweepRow> classification_sweep(const LinearWorld& world, const LabelRule& labels, const MiReport& report,
                                           const std::vector<double>& fractions, Eigen::Index eval_samples,
                                           std::uint64_t seed) {
    check_compatible(world, report);
    if (labels.num_classes < 2 || !labels.classify) throw std::invalid_argument("classification sweep needs a label rule");
    if (eval_samples < 1) throw std::invalid_argument("classification sweep needs eval samples >= 1");
    const auto train = draw_labelled(world, labels, eval_samples, seed);
    const auto test = draw_labelled(world, labels, eval_samples, seed ^ 0x5bd1e995a5a5a5a5ULL);
    const double label_entropy = empirical_entropy(train.labels, labels.num_classes);

    std::vector<SweepRow> rows;
    for (const double f : fractions) {
        const auto mask = select_influential(report.per_factor_mi, TopFractionRule{f});
        const auto cols = kept_columns(mask);
        const Eigen::MatrixXd train_x = train.features(Eigen::all, cols);
        const Eigen::MatrixXd test_x = test.features(Eigen::all, cols);
        const PlugInClassifier classifier(train_x, train.labels, labels.num_classes);
        std::size_t wrong = 0;
        for (Eigen::Index m = 0; m < test_x.rows(); ++m)
            if (classifier.predict(test_x.row(m)) != test.labels[static_cast<std::size_t>(m)]) ++wrong;
        SweepRow row;
        row.fraction = f;
        row.kept = mask.count();
        row.mi_retained = retained_mi(report, mask);
        row.measured = static_cast<double>(wrong) / static_cast<double>(test_x.rows());
        row.bound = fano_bound(label_entropy, labels.num_classes, std::max(0.0, row.mi_retained)).value;
        rows.push_back(row);
    }
    return rows;
}

std::optional<std::size_t> first_bound_violation(const std::vector<SweepRow>& rows, double tolerance) {
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].measured < rows[i].bound - tolerance * std::max(1.0, rows[i].bound)) return i;
    return std::nullopt;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    using detail::format_double;
    std::string out = "fraction,k,mi_retained_nats,measured,bound\n";
    for (const auto& r : rows)
        out += format_double(r.fraction) + ',' + std::to_string(r.kept) + ',' + format_double(r.mi_retained) + ',' +
               format_double(r.measured) + ',' + format_double(r.bound) + '\n';
    return out;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows, const std::string& kind) {
    nlohmann::ordered_json doc;
    doc["kind"] = kind;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json e;
        e["fraction"] = r.fraction;
        e["k"] = r.kept;
        e["mi_retained_nats"] = r.mi_retained;
        e["measured"] = r.measured;
        e["bound"] = r.bound;
        arr.push_back(std::move(e));
    }
    doc["rows"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<double> parse_fraction_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string::npos ? text.size() : comma;
        std::string_view field(text.data() + start, end - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("malformed fraction list '" + text + "': each entry must be a number in [0, 1]");
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace vaemi
