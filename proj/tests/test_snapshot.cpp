#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "vaemi/errors.hpp"
#include "vaemi/estimator.hpp"
#include "vaemi/snapshot.hpp"

namespace fs = std::filesystem;
using vaemi::EncoderSnapshot;
using vaemi::SnapshotFormat;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "vaemi_snapshot_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

EncoderSnapshot random_snapshot(std::mt19937_64& rng, int max_m, int max_h) {
    std::uniform_int_distribution<int> m(1, max_m), h(1, max_h);
    std::normal_distribution<double> n;
    EncoderSnapshot s;
    s.mu.resize(m(rng), h(rng));
    s.sigma.resizeLike(s.mu);
    for (Eigen::Index i = 0; i < s.mu.size(); ++i) {
        s.mu.data()[i] = n(rng) * 3.0;
        s.sigma.data()[i] = std::exp(n(rng));
    }
    return s;
}

bool bit_identical(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(SnapshotCsv, MinimalFileParses) {
    const auto path = scratch("minimal.csv");
    write_text(path, "mu_1,sigma_1\n0.0,1.0\n");
    const auto s = vaemi::read_snapshot(path, SnapshotFormat::Csv);
    EXPECT_EQ(s.num_samples(), 1);
    EXPECT_EQ(s.num_factors(), 1);
    EXPECT_EQ(s.mu(0, 0), 0.0);
    EXPECT_EQ(s.sigma(0, 0), 1.0);
}

TEST(SnapshotCsv, ToleratesCrlfAndSpaces) {
    const auto path = scratch("crlf.csv");
    write_text(path, "mu_1,mu_2,sigma_1,sigma_2\r\n 1.5 , -2 ,0.5,2\r\n");
    const auto s = vaemi::read_snapshot(path, SnapshotFormat::Csv);
    EXPECT_EQ(s.mu(0, 1), -2.0);
    EXPECT_EQ(s.sigma(0, 0), 0.5);
}

TEST(SnapshotCsv, ZeroSigmaIsRejectedWithLocation) {
    const auto path = scratch("zero_sigma.csv");
    write_text(path, "mu_1,sigma_1\n0.5,1.0\n0.0,0.0\n");
    try {
        vaemi::read_snapshot(path, SnapshotFormat::Csv);
        FAIL() << "expected ValidationError";
    } catch (const vaemi::ValidationError& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].to_string(), "NonPositiveSigma(1,0)");
    }
}

TEST(SnapshotCsv, MalformedContentIsFormatError) {
    const std::vector<std::string> bad = {
        "",                                  // no header
        "mu_1,sigma_1\n",                    // no rows
        "mu_1,sigma_2\n0,1\n",               // wrong header names
        "mu_1,mu_2,sigma_1\n0,0,1\n",        // odd column count
        "mu_1,sigma_1\n0,1,2\n",             // ragged row
        "mu_1,sigma_1\nabc,1\n",             // not a number
        "mu_1,sigma_1\n1.0x,1\n",            // trailing garbage
    };
    for (std::size_t i = 0; i < bad.size(); ++i) {
        const auto path = scratch("bad" + std::to_string(i) + ".csv");
        write_text(path, bad[i]);
        EXPECT_THROW(vaemi::read_snapshot(path, SnapshotFormat::Csv), vaemi::FormatError) << bad[i];
    }
}

TEST(SnapshotCsv, RoundTripIsExact) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10; ++i) {
        const auto s = random_snapshot(rng, 30, 6);
        const auto path = scratch("rt.csv");
        vaemi::write_snapshot(s, path, SnapshotFormat::Csv);
        const auto back = vaemi::read_snapshot(path, SnapshotFormat::Csv);
        EXPECT_TRUE(bit_identical(s.mu, back.mu));
        EXPECT_TRUE(bit_identical(s.sigma, back.sigma));
    }
}

TEST(SnapshotBinary, LayoutForSingleEntry) {
    EncoderSnapshot s;
    s.mu = Eigen::MatrixXd::Constant(1, 1, 0.0);
    s.sigma = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const auto bytes = vaemi::encode_binary_snapshot(s);
    ASSERT_EQ(bytes.size(), 14u + 8u + 8u);
    const unsigned char header[] = {'F', 'S', 'N', 'A', 'P', 0x01, 1, 0, 0, 0, 1, 0, 0, 0};
    EXPECT_EQ(std::memcmp(bytes.data(), header, sizeof header), 0);
    for (int i = 14; i < 22; ++i) EXPECT_EQ(bytes[i], 0);
    // 1.0 is 0x3FF0000000000000, little-endian
    const unsigned char one[] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
    EXPECT_EQ(std::memcmp(bytes.data() + 22, one, 8), 0);
}

TEST(SnapshotBinary, RoundTripIsBitExact) {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 50; ++i) {
        const auto s = random_snapshot(rng, 40, 8);
        const auto back = vaemi::decode_binary_snapshot(vaemi::encode_binary_snapshot(s));
        EXPECT_TRUE(bit_identical(s.mu, back.mu));
        EXPECT_TRUE(bit_identical(s.sigma, back.sigma));
    }
}

TEST(SnapshotBinary, FileRoundTripPreservesReports) {
    std::mt19937_64 rng(8);
    const auto s = random_snapshot(rng, 50, 4);
    const auto path = scratch("rt.fsnap");
    vaemi::write_snapshot(s, path, SnapshotFormat::Binary);
    const auto back = vaemi::read_snapshot(path, SnapshotFormat::Binary);
    EXPECT_EQ(back.provenance, "rt.fsnap");
    EXPECT_EQ(vaemi::report_to_json(vaemi::analyze(s)), vaemi::report_to_json(vaemi::analyze(back)));
}

TEST(SnapshotBinary, CorruptBytesAreFormatErrors) {
    EncoderSnapshot s;
    s.mu = Eigen::MatrixXd::Zero(2, 2);
    s.sigma = Eigen::MatrixXd::Ones(2, 2);
    const auto good = vaemi::encode_binary_snapshot(s);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_THROW(vaemi::decode_binary_snapshot(bad_magic), vaemi::FormatError);
    auto bad_version = good;
    bad_version[5] = 2;
    EXPECT_THROW(vaemi::decode_binary_snapshot(bad_version), vaemi::FormatError);
    auto truncated = good;
    truncated.pop_back();
    EXPECT_THROW(vaemi::decode_binary_snapshot(truncated), vaemi::FormatError);
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(vaemi::decode_binary_snapshot(trailing), vaemi::FormatError);
    EXPECT_THROW(vaemi::decode_binary_snapshot({'F', 'S'}), vaemi::FormatError);
}

TEST(SnapshotIo, MissingFileIsIoError) {
    EXPECT_THROW(vaemi::read_snapshot(scratch("does_not_exist.fsnap"), SnapshotFormat::Binary), vaemi::IoError);
}

TEST(SnapshotIo, FormatSelection) {
    EXPECT_EQ(vaemi::snapshot_format_for("a/b.csv"), SnapshotFormat::Csv);
    EXPECT_EQ(vaemi::snapshot_format_for("a/b.fsnap"), SnapshotFormat::Binary);
    EXPECT_EQ(vaemi::parse_snapshot_format("csv"), SnapshotFormat::Csv);
    EXPECT_EQ(vaemi::parse_snapshot_format("binary"), SnapshotFormat::Binary);
    EXPECT_THROW(vaemi::parse_snapshot_format("json"), std::invalid_argument);
}

TEST(SnapshotValidation, ReportsEveryViolation) {
    EncoderSnapshot s;
    s.mu = Eigen::MatrixXd::Zero(3, 2);
    s.sigma = Eigen::MatrixXd::Ones(3, 2);
    s.sigma(0, 0) = 0.0;
    s.mu(2, 1) = std::numeric_limits<double>::quiet_NaN();
    const auto v = vaemi::validate_snapshot(s);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].to_string(), "NonPositiveSigma(0,0)");
    EXPECT_EQ(v[1].to_string(), "NonFinite(2,1)");
}

TEST(SnapshotValidation, InfiniteSigmaIsNonFinite) {
    EncoderSnapshot s;
    s.mu = Eigen::MatrixXd::Zero(1, 1);
    s.sigma = Eigen::MatrixXd::Constant(1, 1, std::numeric_limits<double>::infinity());
    const auto v = vaemi::validate_snapshot(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, vaemi::Violation::Kind::NonFinite);
}

TEST(SnapshotValidation, ShapeAndEmptiness) {
    EncoderSnapshot s;
    EXPECT_FALSE(vaemi::validate_snapshot(s).empty());
    s.mu = Eigen::MatrixXd::Zero(2, 2);
    s.sigma = Eigen::MatrixXd::Ones(2, 3);
    const auto v = vaemi::validate_snapshot(s);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v[0].kind, vaemi::Violation::Kind::ShapeMismatch);
    EXPECT_THROW(vaemi::require_valid(s), vaemi::ValidationError);
}

TEST(SnapshotValidation, UncheckedReadKeepsBadValues) {
    const auto path = scratch("neg.csv");
    write_text(path, "mu_1,sigma_1\n0,-1\n");
    const auto s = vaemi::read_snapshot_unchecked(path, SnapshotFormat::Csv);
    EXPECT_EQ(s.sigma(0, 0), -1.0);
}
