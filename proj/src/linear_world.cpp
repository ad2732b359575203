#include "vaemi/linear_world.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "vaemi/errors.hpp"
#include "vaemi/summation.hpp"

namespace vaemi {

namespace {

bool is_positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument(std::string("linear world: ") + name + " has shape " + std::to_string(m.rows()) +
                                    "x" + std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
}

std::vector<Eigen::Index> kept_indices(const FactorFlags& keep) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index h = 0; h < keep.size(); ++h)
        if (keep[h]) idx.push_back(h);
    return idx;
}

// Optimal affine decoder weights for the kept factors: Sigma_x A_K^T Sigma_zz^{-1}.
Eigen::MatrixXd optimal_decoder(const LinearWorld& w, const std::vector<Eigen::Index>& kept) {
    const auto k = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd decoder = Eigen::MatrixXd::Zero(w.data_dim, w.latent_dim);
    if (k == 0) return decoder;
    const Eigen::MatrixXd a = w.encoder(kept, Eigen::all);
    Eigen::MatrixXd szz = a * w.data_cov * a.transpose();
    szz.diagonal() += w.encoder_noise(kept).array().square().matrix();
    const Eigen::MatrixXd cross = w.data_cov * a.transpose();
    const Eigen::MatrixXd weights = szz.llt().solve(cross.transpose()).transpose();
    decoder(Eigen::all, kept) = weights;
    return decoder;
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw FormatError(std::string("world JSON: ") + name + " has the wrong number of rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw FormatError(std::string("world JSON: ") + name + " has the wrong number of columns");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const nlohmann::json& j, Eigen::Index size, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw FormatError(std::string("world JSON: ") + name + " has the wrong length");
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

void LinearWorld::validate() const {
    if (data_dim < 1 || intrinsic_dim < 1 || latent_dim < 1)
        throw std::invalid_argument("linear world: dimensions must be >= 1");
    if (intrinsic_dim > data_dim) throw std::invalid_argument("linear world: intrinsic dimension exceeds data dimension");
    expect_shape(generator, data_dim, intrinsic_dim, "generator");
    expect_shape(data_cov, data_dim, data_dim, "data_cov");
    expect_shape(encoder, latent_dim, data_dim, "encoder");
    expect_shape(decoder, data_dim, latent_dim, "decoder");
    if (encoder_offset.size() != latent_dim || encoder_noise.size() != latent_dim || decoder_offset.size() != data_dim)
        throw std::invalid_argument("linear world: offset or noise vector has the wrong length");
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level))
        throw std::invalid_argument("linear world: noise level must be finite and >= 0");
    if (!encoder_noise.array().unaryExpr([](double s) { return is_positive_finite(s); }).all())
        throw std::invalid_argument("linear world: encoder noise scales must be positive");
    if (!is_positive_finite(decoder_noise)) throw std::invalid_argument("linear world: decoder noise must be positive");
    if (!generator.allFinite() || !encoder.allFinite() || !decoder.allFinite() || !encoder_offset.allFinite() ||
        !decoder_offset.allFinite() || !data_cov.allFinite())
        throw std::invalid_argument("linear world: non-finite parameter");
    if (!data_cov.isApprox(data_cov.transpose(), 1e-12)) throw std::invalid_argument("linear world: data_cov not symmetric");
    if (data_cov.llt().info() != Eigen::Success)
        throw std::invalid_argument("linear world: data_cov is not positive definite");
}

LinearWorld make_world(Eigen::Index data_dim, Eigen::Index intrinsic_dim, Eigen::Index latent_dim,
                       const Eigen::VectorXd& spectrum, double noise_level, const EncoderSpec& spec,
                       std::uint64_t seed) {
    if (data_dim < 1 || intrinsic_dim < 1 || latent_dim < 1 || intrinsic_dim > data_dim)
        throw std::invalid_argument("make_world: need 1 <= P <= D and H >= 1");
    if (spectrum.size() != intrinsic_dim || !(spectrum.array() > 0.0).all() || !spectrum.allFinite())
        throw std::invalid_argument("make_world: spectrum must hold P positive values");

    LinearWorld w;
    w.data_dim = data_dim;
    w.intrinsic_dim = intrinsic_dim;
    w.latent_dim = latent_dim;
    w.seed = seed;
    w.noise_level = noise_level;
    w.generator = Eigen::MatrixXd::Zero(data_dim, intrinsic_dim);
    w.generator.diagonal() = spectrum.cwiseSqrt();
    w.data_cov = w.generator * w.generator.transpose();
    w.data_cov.diagonal().array() += noise_level * noise_level;

    switch (spec.kind) {
        case EncoderKind::Diagonal:
            w.encoder = Eigen::MatrixXd::Identity(latent_dim, data_dim);
            break;
        case EncoderKind::Zero:
            w.encoder = Eigen::MatrixXd::Zero(latent_dim, data_dim);
            break;
        case EncoderKind::Random: {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(data_dim)));
            w.encoder.resize(latent_dim, data_dim);
            for (Eigen::Index r = 0; r < latent_dim; ++r)
                for (Eigen::Index c = 0; c < data_dim; ++c) w.encoder(r, c) = normal(rng);
            break;
        }
    }
    if (spec.noise_per_factor.size() > 0) {
        if (spec.noise_per_factor.size() != latent_dim) throw std::invalid_argument("make_world: noise needs H entries");
        w.encoder_noise = spec.noise_per_factor;
    } else {
        w.encoder_noise = Eigen::VectorXd::Constant(latent_dim, spec.noise);
    }
    if (spec.offset.size() > 0) {
        if (spec.offset.size() != latent_dim) throw std::invalid_argument("make_world: offset needs H entries");
        w.encoder_offset = spec.offset;
    } else {
        w.encoder_offset = Eigen::VectorXd::Zero(latent_dim);
    }
    std::vector<Eigen::Index> all(static_cast<std::size_t>(latent_dim));
    for (Eigen::Index h = 0; h < latent_dim; ++h) all[static_cast<std::size_t>(h)] = h;
    w.decoder_noise = 1.0;
    w.decoder_offset = Eigen::VectorXd::Zero(data_dim);
    w.decoder = Eigen::MatrixXd::Zero(data_dim, latent_dim);
    w.validate();
    w.decoder = optimal_decoder(w, all);
    w.decoder_offset = -w.decoder * w.encoder_offset;
    return w;
}

Eigen::VectorXd analytic_factor_mi(const LinearWorld& w) {
    Eigen::VectorXd mi(w.latent_dim);
    for (Eigen::Index h = 0; h < w.latent_dim; ++h) {
        const Eigen::VectorXd a = w.encoder.row(h).transpose();
        const double signal = a.dot(w.data_cov * a);
        const double s2 = w.encoder_noise[h] * w.encoder_noise[h];
        mi[h] = 0.5 * std::log1p(signal / s2);
    }
    return mi;
}

double analytic_joint_mi(const LinearWorld& w) {
    Eigen::MatrixXd szz = w.encoder * w.data_cov * w.encoder.transpose();
    szz.diagonal() += w.encoder_noise.array().square().matrix();
    // Work with the noise-whitened covariance so identical diagonals give exact zeros.
    const Eigen::VectorXd inv_s = w.encoder_noise.cwiseInverse();
    const Eigen::MatrixXd whitened = inv_s.asDiagonal() * szz * inv_s.asDiagonal();
    const Eigen::LLT<Eigen::MatrixXd> llt(whitened);
    return pairwise_sum(llt.matrixLLT().diagonal().array().log().eval());
}

SeparationCheck separation_check(const LinearWorld& w, double tolerance) {
    SeparationCheck c;
    c.joint_mi = analytic_joint_mi(w);
    c.factor_sum = pairwise_sum(analytic_factor_mi(w).array());
    c.gap = c.factor_sum - c.joint_mi;
    Eigen::MatrixXd signal = w.encoder * w.data_cov * w.encoder.transpose();
    const double scale = std::max(1.0, signal.cwiseAbs().maxCoeff());
    signal.diagonal().setZero();
    c.code_factorizes = signal.cwiseAbs().maxCoeff() <= 1e-12 * scale;
    c.holds = std::abs(c.gap) <= tolerance;
    return c;
}

WorldSample sample_world(const LinearWorld& w, Eigen::Index samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("sample_world: need at least one sample");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    WorldSample out;
    out.intrinsic.resize(samples, w.intrinsic_dim);
    Eigen::MatrixXd noise(samples, w.data_dim);
    for (Eigen::Index m = 0; m < samples; ++m) {
        for (Eigen::Index p = 0; p < w.intrinsic_dim; ++p) out.intrinsic(m, p) = normal(rng);
        for (Eigen::Index d = 0; d < w.data_dim; ++d) noise(m, d) = normal(rng);
    }
    out.data = out.intrinsic * w.generator.transpose() + w.noise_level * noise;
    return out;
}

EncoderSnapshot encode_data(const LinearWorld& w, const Eigen::Ref<const Eigen::MatrixXd>& data) {
    if (data.cols() != w.data_dim) throw std::invalid_argument("encode_data: data has the wrong dimension");
    EncoderSnapshot snap;
    snap.mu = (data * w.encoder.transpose()).rowwise() + w.encoder_offset.transpose();
    snap.sigma = w.encoder_noise.transpose().replicate(data.rows(), 1);
    snap.provenance = "linear-world seed " + std::to_string(w.seed);
    return snap;
}

EncoderSnapshot sample_snapshot(const LinearWorld& w, Eigen::Index samples, std::uint64_t seed) {
    return encode_data(w, sample_world(w, samples, seed).data);
}

double optimal_truncated_mse(const LinearWorld& w, const FactorFlags& keep) {
    if (keep.size() != w.latent_dim) throw std::invalid_argument("optimal_truncated_mse: mask has the wrong length");
    const auto kept = kept_indices(keep);
    const double total = w.data_cov.trace();
    if (kept.empty()) return total;
    const Eigen::MatrixXd a = w.encoder(kept, Eigen::all);
    Eigen::MatrixXd szz = a * w.data_cov * a.transpose();
    szz.diagonal() += w.encoder_noise(kept).array().square().matrix();
    const Eigen::MatrixXd cross = w.data_cov * a.transpose();
    const Eigen::MatrixXd solved = szz.llt().solve(cross.transpose());
    const double explained = (cross.array() * solved.transpose().array()).sum();
    return std::max(0.0, total - explained);
}

Eigen::VectorXd coordinate_entropies(const LinearWorld& w) {
    return (0.5 * (2.0 * std::numbers::pi * std::numbers::e * w.data_cov.diagonal().array()).log()).matrix();
}

double data_entropy(const LinearWorld& w) {
    const Eigen::LLT<Eigen::MatrixXd> llt(w.data_cov);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (static_cast<double>(w.data_dim) * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det);
}

std::string world_to_json(const LinearWorld& w) {
    nlohmann::ordered_json doc;
    doc["data_dim"] = w.data_dim;
    doc["intrinsic_dim"] = w.intrinsic_dim;
    doc["latent_dim"] = w.latent_dim;
    doc["seed"] = w.seed;
    doc["noise_level"] = w.noise_level;
    doc["generator"] = matrix_json(w.generator);
    doc["data_cov"] = matrix_json(w.data_cov);
    doc["encoder"] = matrix_json(w.encoder);
    doc["encoder_offset"] = vector_json(w.encoder_offset);
    doc["encoder_noise"] = vector_json(w.encoder_noise);
    doc["decoder"] = matrix_json(w.decoder);
    doc["decoder_offset"] = vector_json(w.decoder_offset);
    doc["decoder_noise"] = w.decoder_noise;
    return doc.dump(2) + "\n";
}

LinearWorld world_from_json(const std::string& text) {
    LinearWorld w;
    try {
        const auto doc = nlohmann::json::parse(text);
        w.data_dim = doc.at("data_dim").get<Eigen::Index>();
        w.intrinsic_dim = doc.at("intrinsic_dim").get<Eigen::Index>();
        w.latent_dim = doc.at("latent_dim").get<Eigen::Index>();
        if (w.data_dim < 1 || w.intrinsic_dim < 1 || w.latent_dim < 1) throw FormatError("world JSON: bad dimensions");
        w.seed = doc.at("seed").get<std::uint64_t>();
        w.noise_level = doc.at("noise_level").get<double>();
        w.generator = matrix_from(doc.at("generator"), w.data_dim, w.intrinsic_dim, "generator");
        w.data_cov = matrix_from(doc.at("data_cov"), w.data_dim, w.data_dim, "data_cov");
        w.encoder = matrix_from(doc.at("encoder"), w.latent_dim, w.data_dim, "encoder");
        w.encoder_offset = vector_from(doc.at("encoder_offset"), w.latent_dim, "encoder_offset");
        w.encoder_noise = vector_from(doc.at("encoder_noise"), w.latent_dim, "encoder_noise");
        w.decoder = matrix_from(doc.at("decoder"), w.data_dim, w.latent_dim, "decoder");
        w.decoder_offset = vector_from(doc.at("decoder_offset"), w.data_dim, "decoder_offset");
        w.decoder_noise = doc.at("decoder_noise").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed world JSON: ") + e.what());
    }
    try {
        w.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return w;
}

}  // namespace vaemi
