#include <json.hpp>

#include "text_format.hpp"
#include "vaemi/errors.hpp"
#include "vaemi/estimator.hpp"

namespace vaemi {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<Eigen::Index> rank_positions(const MiReport& r) {
    std::vector<Eigen::Index> pos(r.ranking.size());
    for (std::size_t i = 0; i < r.ranking.size(); ++i) pos[static_cast<std::size_t>(r.ranking[i])] = static_cast<Eigen::Index>(i);
    return pos;
}

}  // namespace

std::string report_to_json(const MiReport& r) {
    ordered_json doc;
    doc["threshold"] = r.threshold;
    doc["fit_mean"] = r.q_star.mean_fitted;
    const auto pos = rank_positions(r);
    ordered_json factors = ordered_json::array();
    for (Eigen::Index h = 0; h < r.num_factors(); ++h) {
        ordered_json f;
        f["index"] = h;
        f["mi_nats"] = r.per_factor_mi[h];
        f["sigma_star_sq"] = r.q_star.variances[h];
        if (r.q_star.mean_fitted) f["mean_star"] = r.q_star.means[h];
        f["rank"] = pos[static_cast<std::size_t>(h)];
        f["influential"] = bool(r.influential[h]);
        factors.push_back(std::move(f));
    }
    doc["factors"] = std::move(factors);
    doc["total_mi_nats"] = r.total_mi;
    if (r.audit) {
        ordered_json audit = ordered_json::array();
        for (const auto& a : *r.audit) {
            ordered_json e;
            e["index"] = a.index;
            e["lhs"] = a.lhs;
            e["mixture_mi"] = a.mixture_mi;
            e["marginal_kl"] = a.marginal_kl;
            e["residual"] = a.residual;
            audit.push_back(std::move(e));
        }
        doc["audit"] = std::move(audit);
    }
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const MiReport& r) {
    using detail::format_double;
    const bool audited = r.audit.has_value();
    std::string out = "index,mi_nats,sigma_star_sq,rank,influential";
    if (audited) out += ",lhs,mixture_mi,marginal_kl,residual";
    out += '\n';
    const auto pos = rank_positions(r);
    for (Eigen::Index h = 0; h < r.num_factors(); ++h) {
        out += std::to_string(h) + ',' + format_double(r.per_factor_mi[h]) + ',' + format_double(r.q_star.variances[h]) +
               ',' + std::to_string(pos[static_cast<std::size_t>(h)]) + ',' + (r.influential[h] ? "1" : "0");
        if (audited) {
            const auto& a = (*r.audit)[static_cast<std::size_t>(h)];
            out += ',' + format_double(a.lhs) + ',' + format_double(a.mixture_mi) + ',' + format_double(a.marginal_kl) +
                   ',' + format_double(a.residual);
        }
        out += '\n';
    }
    return out;
}

std::string report_pulse_csv(const MiReport& r) {
    std::string out = "index,mi_nats\n";
    for (Eigen::Index h = 0; h < r.num_factors(); ++h)
        out += std::to_string(h) + ',' + detail::format_double(r.per_factor_mi[h]) + '\n';
    return out;
}

MiReport report_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        MiReport r;
        r.threshold = doc.at("threshold").get<double>();
        r.q_star.mean_fitted = doc.at("fit_mean").get<bool>();
        const auto& factors = doc.at("factors");
        const auto n = static_cast<Eigen::Index>(factors.size());
        if (n == 0) throw FormatError("report has no factors");
        r.per_factor_mi.resize(n);
        r.q_star.variances.resize(n);
        r.q_star.means = Eigen::VectorXd::Zero(n);
        r.influential = FactorFlags::Constant(n, false);
        r.ranking.assign(static_cast<std::size_t>(n), -1);
        for (const auto& f : factors) {
            const auto h = f.at("index").get<Eigen::Index>();
            const auto rank = f.at("rank").get<Eigen::Index>();
            if (h < 0 || h >= n || rank < 0 || rank >= n) throw FormatError("report factor index or rank out of range");
            r.per_factor_mi[h] = f.at("mi_nats").get<double>();
            r.q_star.variances[h] = f.at("sigma_star_sq").get<double>();
            if (f.contains("mean_star")) r.q_star.means[h] = f.at("mean_star").get<double>();
            r.influential[h] = f.at("influential").get<bool>();
            r.ranking[static_cast<std::size_t>(rank)] = h;
        }
        for (const auto idx : r.ranking)
            if (idx < 0) throw FormatError("report ranks do not form a permutation");
        r.total_mi = doc.at("total_mi_nats").get<double>();
        if (doc.contains("audit")) {
            std::vector<FactorAudit> audit;
            for (const auto& e : doc.at("audit")) {
                FactorAudit a;
                a.index = e.at("index").get<Eigen::Index>();
                a.lhs = e.at("lhs").get<double>();
                a.mixture_mi = e.at("mixture_mi").get<double>();
                a.marginal_kl = e.at("marginal_kl").get<double>();
                a.residual = e.at("residual").get<double>();
                audit.push_back(a);
            }
            r.audit = std::move(audit);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report JSON: ") + e.what());
    }
}

}  // namespace vaemi
