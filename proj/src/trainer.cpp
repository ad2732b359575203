#include "vaemi/trainer.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "vaemi/errors.hpp"

namespace vaemi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Residuals {
    Eigen::MatrixXd b;      // I - W A
    Eigen::VectorXd mean;   // (I - W A) m - (W b + c)
    Eigen::VectorXd s2;     // encoder variances
    double sq_error = 0.0;  // E ||x - W z - c||^2
};

Residuals residuals(const LinearVaeParams& p, const DataMoments& d) {
    Residuals r;
    const auto dim = p.decoder.rows();
    r.b = Eigen::MatrixXd::Identity(dim, dim) - p.decoder * p.encoder;
    r.mean = r.b * d.mean - (p.decoder * p.encoder_offset + p.decoder_offset);
    r.s2 = (2.0 * p.log_encoder_noise.array()).exp().matrix();
    r.sq_error = (r.b * d.cov * r.b.transpose()).trace() + r.mean.squaredNorm() +
                 (p.decoder.colwise().squaredNorm().transpose().array() * r.s2.array()).sum();
    return r;
}

void axpy(LinearVaeParams& p, double step, const LinearVaeParams& g, bool move_decoder_noise) {
    p.encoder += step * g.encoder;
    p.encoder_offset += step * g.encoder_offset;
    p.log_encoder_noise += step * g.log_encoder_noise;
    p.decoder += step * g.decoder;
    p.decoder_offset += step * g.decoder_offset;
    if (move_decoder_noise) p.log_decoder_noise += step * g.log_decoder_noise;
}

LinearWorld world_skeleton(const TrainConfig& c) {
    EncoderSpec zero;
    zero.kind = EncoderKind::Zero;
    return make_world(c.data_dim, c.intrinsic_dim, c.latent_dim, c.spectrum, c.noise_level, zero, c.seed);
}

}  // namespace

DataMoments DataMoments::of(const Eigen::Ref<const Eigen::MatrixXd>& data) {
    DataMoments m;
    const double n = static_cast<double>(data.rows());
    m.mean = data.colwise().sum().transpose() / n;
    const Eigen::MatrixXd centred = data.rowwise() - m.mean.transpose();
    m.cov = centred.transpose() * centred / n;
    return m;
}

BetaElbo beta_elbo(const LinearVaeParams& p, const DataMoments& d, double beta) {
    const auto r = residuals(p, d);
    const double dim = static_cast<double>(p.decoder.rows());
    const double var_dec = std::exp(2.0 * p.log_decoder_noise);
    BetaElbo e;
    e.reconstruction = -0.5 * dim * kLog2Pi - dim * p.log_decoder_noise - r.sq_error / (2.0 * var_dec);
    const Eigen::VectorXd code_mean = p.encoder * d.mean + p.encoder_offset;
    const double signal = (p.encoder * d.cov).cwiseProduct(p.encoder).sum();
    e.kl = 0.5 * (r.s2.sum() + signal + code_mean.squaredNorm() - static_cast<double>(p.encoder.rows()) -
                  2.0 * p.log_encoder_noise.sum());
    e.objective = e.reconstruction - beta * e.kl;
    return e;
}

LinearVaeParams beta_elbo_gradient(const LinearVaeParams& p, const DataMoments& d, double beta) {
    const auto r = residuals(p, d);
    const double dim = static_cast<double>(p.decoder.rows());
    const double var_dec = std::exp(2.0 * p.log_decoder_noise);
    const double rec_scale = -1.0 / (2.0 * var_dec);

    // Gradients of the squared error E.
    const Eigen::MatrixXd d_b = 2.0 * r.b * d.cov + 2.0 * r.mean * d.mean.transpose();
    const Eigen::MatrixXd de_dw = -d_b * p.encoder.transpose() - 2.0 * r.mean * p.encoder_offset.transpose() +
                                  2.0 * p.decoder * r.s2.asDiagonal();
    const Eigen::MatrixXd de_da = -p.decoder.transpose() * d_b;
    const Eigen::VectorXd de_db = -2.0 * p.decoder.transpose() * r.mean;
    const Eigen::VectorXd de_dc = -2.0 * r.mean;
    const Eigen::VectorXd de_dls = 2.0 * (r.s2.array() * p.decoder.colwise().squaredNorm().transpose().array()).matrix();

    // Gradients of the KL term.
    const Eigen::VectorXd code_mean = p.encoder * d.mean + p.encoder_offset;
    const Eigen::MatrixXd dk_da = p.encoder * d.cov + code_mean * d.mean.transpose();
    const Eigen::VectorXd dk_dls = (r.s2.array() - 1.0).matrix();

    LinearVaeParams g;
    g.encoder = rec_scale * de_da - beta * dk_da;
    g.encoder_offset = rec_scale * de_db - beta * code_mean;
    g.log_encoder_noise = rec_scale * de_dls - beta * dk_dls;
    g.decoder = rec_scale * de_dw;
    g.decoder_offset = rec_scale * de_dc;
    g.log_decoder_noise = -dim + r.sq_error / var_dec;
    return g;
}

Eigen::VectorXd default_spectrum(Eigen::Index intrinsic_dim) {
    Eigen::VectorXd s(intrinsic_dim);
    for (Eigen::Index i = 0; i < intrinsic_dim; ++i) s[i] = 25.0 * std::pow(0.8, static_cast<double>(i));
    return s;
}

TrainResult train_beta_vae(const TrainConfig& config) {
    if (!(config.beta > 0.0) || !std::isfinite(config.beta)) throw std::invalid_argument("train_beta_vae: beta must be > 0");
    if (config.steps < 1) throw std::invalid_argument("train_beta_vae: steps must be >= 1");
    if (config.samples < 1) throw std::invalid_argument("train_beta_vae: need at least one sample");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train_beta_vae: learning rate must be > 0");
    if (!(config.decoder_noise > 0.0)) throw std::invalid_argument("train_beta_vae: decoder noise must be > 0");

    TrainResult result;
    result.world = world_skeleton(config);
    LinearWorld& world = result.world;
    const auto moments = DataMoments::of(sample_world(world, config.samples, config.seed).data);

    const auto dim = config.data_dim;
    const auto latent = config.latent_dim;
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    LinearVaeParams params;
    params.encoder.resize(latent, dim);
    params.decoder.resize(dim, latent);
    for (Eigen::Index r = 0; r < latent; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) params.encoder(r, c) = normal(rng);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < latent; ++c) params.decoder(r, c) = normal(rng);
    params.encoder_offset = Eigen::VectorXd::Zero(latent);
    params.log_encoder_noise = Eigen::VectorXd::Zero(latent);
    params.decoder_offset = Eigen::VectorXd::Zero(dim);
    params.log_decoder_noise = std::log(config.decoder_noise);

    BetaElbo current = beta_elbo(params, moments, config.beta);
    if (!std::isfinite(current.objective)) throw TrainingError("beta-ELBO is non-finite at initialization", 0);
    double rate = config.learning_rate;
    result.trace.reserve(config.steps);
    for (std::size_t step = 1; step <= config.steps; ++step) {
        const auto grad = beta_elbo_gradient(params, moments, config.beta);
        LinearVaeParams trial = params;
        axpy(trial, rate, grad, config.learn_decoder_noise);
        const BetaElbo next = beta_elbo(trial, moments, config.beta);
        if (!std::isfinite(next.objective))
            throw TrainingError("beta-ELBO diverged at step " + std::to_string(step), step);
        if (next.objective >= current.objective) {
            params = std::move(trial);
            current = next;
        } else {
            rate *= 0.5;
        }
        result.trace.push_back({step, current.objective, current.reconstruction, current.kl});
    }

    world.encoder = params.encoder;
    world.encoder_offset = params.encoder_offset;
    world.encoder_noise = params.log_encoder_noise.array().exp().matrix();
    world.decoder = params.decoder;
    world.decoder_offset = params.decoder_offset;
    world.decoder_noise = std::exp(params.log_decoder_noise);
    world.validate();
    return result;
}

}  // namespace vaemi
