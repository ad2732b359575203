#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vaemi {

/// Per-sample diagonal posterior parameters exported from an encoder:
/// row m holds mu_h(x^m) and sigma_h(x^m) (standard deviations, not variances).
struct EncoderSnapshot {
    Eigen::MatrixXd mu;
    Eigen::MatrixXd sigma;
    std::string provenance;

    Eigen::Index num_samples() const { return mu.rows(); }
    Eigen::Index num_factors() const { return mu.cols(); }
};

enum class SnapshotFormat { Csv, Binary };

/// "csv" or "binary"; throws std::invalid_argument otherwise.
SnapshotFormat parse_snapshot_format(const std::string& name);
/// Csv for a ".csv" extension, Binary for anything else.
SnapshotFormat snapshot_format_for(const std::filesystem::path& path);

struct Violation {
    enum class Kind { NonPositiveSigma, NonFinite, ShapeMismatch, Empty };
    Kind kind;
    Eigen::Index row = -1;
    Eigen::Index col = -1;
    bool in_sigma = false;

    /// e.g. "NonPositiveSigma(0,0)" or "NonFinite(2,1)".
    std::string to_string() const;
    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every broken invariant, in row-major order; empty iff the snapshot is valid.
std::vector<Violation> validate_snapshot(const EncoderSnapshot& snapshot);

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Throws ValidationError when validate_snapshot reports anything.
void require_valid(const EncoderSnapshot& snapshot);

/// Parses and validates. FormatError on malformed content, IoError when the
/// file cannot be read, ValidationError on invariant violations.
EncoderSnapshot read_snapshot(const std::filesystem::path& path, SnapshotFormat format);

/// Parses without validating the values (shape and syntax are still checked).
EncoderSnapshot read_snapshot_unchecked(const std::filesystem::path& path, SnapshotFormat format);

/// Binary layout: "FSNAP", version byte 0x01, M and H as little-endian u32,
/// then M*H little-endian f64 of mu (row-major) followed by M*H of sigma.
/// CSV layout: header mu_1..mu_H,sigma_1..sigma_H then one row per sample,
/// numbers with 17 significant digits.
void write_snapshot(const EncoderSnapshot& snapshot, const std::filesystem::path& path, SnapshotFormat format);

std::vector<unsigned char> encode_binary_snapshot(const EncoderSnapshot& snapshot);
EncoderSnapshot decode_binary_snapshot(const std::vector<unsigned char>& bytes);

}  // namespace vaemi
