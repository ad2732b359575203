#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vaemi/linear_world.hpp"

namespace vaemi {

/// Parameters of a linear Gaussian VAE. Positive scales are stored as logs.
struct LinearVaeParams {
    Eigen::MatrixXd encoder;         // A, H x D
    Eigen::VectorXd encoder_offset;  // b
    Eigen::VectorXd log_encoder_noise;
    Eigen::MatrixXd decoder;         // W, D x H
    Eigen::VectorXd decoder_offset;  // c
    double log_decoder_noise = 0.0;
};

/// First and second moments of the training data (covariance normalized by M).
struct DataMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    static DataMoments of(const Eigen::Ref<const Eigen::MatrixXd>& data);
};

struct BetaElbo {
    double objective = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

/// Data-averaged beta-ELBO with every expectation in closed form:
/// E log p(x|z) - beta * KL(q(z|x) || N(0, I)).
BetaElbo beta_elbo(const LinearVaeParams& params, const DataMoments& data, double beta);

/// Analytic gradient of beta_elbo(...).objective with respect to every parameter
/// (the decoder-noise entry is included regardless of whether it is trained).
LinearVaeParams beta_elbo_gradient(const LinearVaeParams& params, const DataMoments& data, double beta);

struct TrainRecord {
    std::size_t step = 0;
    double objective = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};
using TrainTrace = std::vector<TrainRecord>;

struct TrainConfig {
    Eigen::Index data_dim = 1;
    Eigen::Index intrinsic_dim = 1;
    Eigen::Index latent_dim = 1;
    Eigen::VectorXd spectrum;
    double noise_level = 0.01;
    double beta = 1.0;
    Eigen::Index samples = 10000;
    std::size_t steps = 20000;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    double decoder_noise = 1.0;
    bool learn_decoder_noise = false;
};

struct TrainResult {
    LinearWorld world;
    TrainTrace trace;
};

/// Full-batch gradient ascent on the closed-form beta-ELBO. A step that would
/// lower the objective is rejected and the learning rate halved. Throws
/// TrainingError when the objective becomes non-finite.
TrainResult train_beta_vae(const TrainConfig& config);

/// Default intrinsic spectrum 25 * 0.8^i, i = 0..P-1.
Eigen::VectorXd default_spectrum(Eigen::Index intrinsic_dim);

}  // namespace vaemi
