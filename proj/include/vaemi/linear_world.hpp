#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "vaemi/selection.hpp"
#include "vaemi/snapshot.hpp"

namespace vaemi {

/// Ground-truth linear-Gaussian world.
///
/// Data: x = U y + gamma * eps with y ~ N(0, I_P), eps ~ N(0, I_D), so
/// Cov(x) = U U^T + gamma^2 I. Encoder: q(z|x) = N(A x + b, diag(s^2)).
/// Decoder: p(x|z) = N(W z + c, sigma_dec^2 I). Because (x, z_h) is jointly
/// Gaussian every per-factor mutual information has a closed form.
struct LinearWorld {
    Eigen::Index data_dim = 0;
    Eigen::Index intrinsic_dim = 0;
    Eigen::Index latent_dim = 0;
    Eigen::MatrixXd generator;  // D x P
    double noise_level = 0.0;   // gamma
    Eigen::MatrixXd data_cov;   // D x D
    Eigen::MatrixXd encoder;    // H x D
    Eigen::VectorXd encoder_offset;
    Eigen::VectorXd encoder_noise;  // standard deviations s_h
    Eigen::MatrixXd decoder;        // D x H
    Eigen::VectorXd decoder_offset;
    double decoder_noise = 1.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on inconsistent shapes, non-positive
    /// noise or a data covariance that is not symmetric positive definite.
    void validate() const;
};

enum class EncoderKind { Diagonal, Random, Zero };

struct EncoderSpec {
    EncoderKind kind = EncoderKind::Diagonal;
    double noise = 1.0;             // s_h for every factor unless noise_per_factor is set
    Eigen::VectorXd noise_per_factor;  // optional, length H
    Eigen::VectorXd offset;            // optional b, length H; zero when empty
};

/// Deterministic world construction. U holds the first P canonical directions
/// scaled by sqrt(spectrum); the decoder is the optimal linear decoder for
/// the encoder.
LinearWorld make_world(Eigen::Index data_dim, Eigen::Index intrinsic_dim, Eigen::Index latent_dim,
                       const Eigen::VectorXd& spectrum, double noise_level, const EncoderSpec& encoder,
                       std::uint64_t seed);

/// 0.5 * ln((a_h^T Sigma_x a_h + s_h^2) / s_h^2) per factor.
Eigen::VectorXd analytic_factor_mi(const LinearWorld& world);

/// I(x; z) for the whole code: 0.5 ln det(A Sigma_x A^T + S^2) - sum ln s_h.
double analytic_joint_mi(const LinearWorld& world);

/// Whether the joint MI separates into the per-factor sum.
struct SeparationCheck {
    double joint_mi = 0.0;
    double factor_sum = 0.0;
    double gap = 0.0;         // factor_sum - joint_mi
    bool code_factorizes = false;  // A Sigma_x A^T diagonal
    bool holds = false;       // |gap| <= tolerance
};
SeparationCheck separation_check(const LinearWorld& world, double tolerance = 1e-9);

struct WorldSample {
    Eigen::MatrixXd intrinsic;  // M x P
    Eigen::MatrixXd data;       // M x D
};

/// M draws of (y, x), deterministic given the seed.
WorldSample sample_world(const LinearWorld& world, Eigen::Index samples, std::uint64_t seed);

/// Snapshot rows mu = A x + b, sigma = s for each row of `data`.
EncoderSnapshot encode_data(const LinearWorld& world, const Eigen::Ref<const Eigen::MatrixXd>& data);

EncoderSnapshot sample_snapshot(const LinearWorld& world, Eigen::Index samples, std::uint64_t seed);

/// Expected squared error of the best affine decoder that sees only the kept
/// factors: tr(Sigma_x) - tr(C Sigma_zz^{-1} C^T).
double optimal_truncated_mse(const LinearWorld& world, const FactorFlags& keep);

/// Marginal differential entropy of each data coordinate.
Eigen::VectorXd coordinate_entropies(const LinearWorld& world);

/// 0.5 ln((2 pi e)^D det Sigma_x).
double data_entropy(const LinearWorld& world);

std::string world_to_json(const LinearWorld& world);
/// Throws FormatError on malformed JSON or inconsistent contents.
LinearWorld world_from_json(const std::string& text);

}  // namespace vaemi
