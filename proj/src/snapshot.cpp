#include "vaemi/snapshot.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "vaemi/errors.hpp"

namespace vaemi {

namespace {

constexpr std::array<unsigned char, 5> kMagic{'F', 'S', 'N', 'A', 'P'};
constexpr unsigned char kVersion = 0x01;
constexpr std::size_t kHeaderBytes = 14;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    return v;
}

double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading " + path.string());
    return data;
}

void write_file(const std::filesystem::path& path, const char* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw IoError("error writing " + path.string());
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last)
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse number '" + std::string(field) + "'");
    return v;
}

EncoderSnapshot parse_csv(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        lines.push_back(rest.substr(0, nl));
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw FormatError("empty CSV snapshot");

    const auto header = split_fields(trim(lines.front()));
    if (header.size() < 2 || header.size() % 2 != 0)
        throw FormatError("CSV header must hold mu_1..mu_H,sigma_1..sigma_H");
    const std::size_t factors = header.size() / 2;
    for (std::size_t h = 0; h < factors; ++h) {
        if (header[h] != "mu_" + std::to_string(h + 1))
            throw FormatError("CSV header column " + std::to_string(h + 1) + " should be mu_" + std::to_string(h + 1));
        if (header[factors + h] != "sigma_" + std::to_string(h + 1))
            throw FormatError("CSV header column " + std::to_string(factors + h + 1) + " should be sigma_" +
                              std::to_string(h + 1));
    }
    const std::size_t rows = lines.size() - 1;
    if (rows == 0) throw FormatError("CSV snapshot has no sample rows");

    EncoderSnapshot snap;
    const auto m_rows = static_cast<Eigen::Index>(rows);
    const auto m_cols = static_cast<Eigen::Index>(factors);
    snap.mu.resize(m_rows, m_cols);
    snap.sigma.resize(m_rows, m_cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto fields = split_fields(trim(lines[r + 1]));
        if (fields.size() != 2 * factors)
            throw FormatError("line " + std::to_string(r + 2) + ": expected " + std::to_string(2 * factors) +
                              " fields, found " + std::to_string(fields.size()));
        for (std::size_t h = 0; h < factors; ++h) {
            snap.mu(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(h)) = parse_number(fields[h], r + 2);
            snap.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(h)) =
                parse_number(fields[factors + h], r + 2);
        }
    }
    return snap;
}

void append_number(std::string& out, double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general,
                                   std::numeric_limits<double>::max_digits10);
    out.append(buf.data(), res.ptr);
}

std::string encode_csv(const EncoderSnapshot& snap) {
    std::string out;
    const auto factors = snap.num_factors();
    for (Eigen::Index h = 0; h < factors; ++h) out += (h ? ",mu_" : "mu_") + std::to_string(h + 1);
    for (Eigen::Index h = 0; h < factors; ++h) out += ",sigma_" + std::to_string(h + 1);
    out += '\n';
    for (Eigen::Index m = 0; m < snap.num_samples(); ++m) {
        for (Eigen::Index h = 0; h < factors; ++h) {
            if (h) out += ',';
            append_number(out, snap.mu(m, h));
        }
        for (Eigen::Index h = 0; h < factors; ++h) {
            out += ',';
            append_number(out, snap.sigma(m, h));
        }
        out += '\n';
    }
    return out;
}

}  // namespace

SnapshotFormat parse_snapshot_format(const std::string& name) {
    if (name == "csv") return SnapshotFormat::Csv;
    if (name == "binary") return SnapshotFormat::Binary;
    throw std::invalid_argument("unknown snapshot format '" + name + "' (expected csv or binary)");
}

SnapshotFormat snapshot_format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? SnapshotFormat::Csv : SnapshotFormat::Binary;
}

std::string Violation::to_string() const {
    switch (kind) {
        case Kind::NonPositiveSigma:
            return "NonPositiveSigma(" + std::to_string(row) + "," + std::to_string(col) + ")";
        case Kind::NonFinite:
            return "NonFinite(" + std::to_string(row) + "," + std::to_string(col) + ")";
        case Kind::ShapeMismatch:
            return "ShapeMismatch";
        case Kind::Empty:
            return "Empty";
    }
    return "Unknown";
}

std::vector<Violation> validate_snapshot(const EncoderSnapshot& snap) {
    std::vector<Violation> out;
    if (snap.mu.rows() != snap.sigma.rows() || snap.mu.cols() != snap.sigma.cols()) {
        out.push_back({Violation::Kind::ShapeMismatch});
        return out;
    }
    if (snap.mu.rows() == 0 || snap.mu.cols() == 0) {
        out.push_back({Violation::Kind::Empty});
        return out;
    }
    for (Eigen::Index m = 0; m < snap.mu.rows(); ++m) {
        for (Eigen::Index h = 0; h < snap.mu.cols(); ++h) {
            if (!std::isfinite(snap.mu(m, h))) out.push_back({Violation::Kind::NonFinite, m, h, false});
            const double s = snap.sigma(m, h);
            if (!std::isfinite(s))
                out.push_back({Violation::Kind::NonFinite, m, h, true});
            else if (!(s > 0.0))
                out.push_back({Violation::Kind::NonPositiveSigma, m, h, true});
        }
    }
    return out;
}

namespace {
std::string describe(const std::vector<Violation>& violations) {
    std::ostringstream msg;
    msg << "invalid snapshot:";
    for (const auto& v : violations) msg << ' ' << v.to_string();
    return msg.str();
}
}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(describe(violations)), violations_(std::move(violations)) {}

void require_valid(const EncoderSnapshot& snapshot) {
    auto violations = validate_snapshot(snapshot);
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<unsigned char> encode_binary_snapshot(const EncoderSnapshot& snap) {
    require_valid(snap);
    const auto rows = snap.num_samples();
    const auto cols = snap.num_factors();
    if (rows > std::numeric_limits<std::uint32_t>::max() || cols > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("snapshot dimensions exceed the 32-bit header fields");
    std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
    out.reserve(kHeaderBytes + 16 * static_cast<std::size_t>(rows * cols));
    out.push_back(kVersion);
    put_u32(out, static_cast<std::uint32_t>(rows));
    put_u32(out, static_cast<std::uint32_t>(cols));
    for (Eigen::Index m = 0; m < rows; ++m)
        for (Eigen::Index h = 0; h < cols; ++h) put_f64(out, snap.mu(m, h));
    for (Eigen::Index m = 0; m < rows; ++m)
        for (Eigen::Index h = 0; h < cols; ++h) put_f64(out, snap.sigma(m, h));
    return out;
}

EncoderSnapshot decode_binary_snapshot(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kHeaderBytes) throw FormatError("binary snapshot shorter than its 14-byte header");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic (expected FSNAP)");
    if (bytes[5] != kVersion) throw FormatError("unsupported snapshot version " + std::to_string(int(bytes[5])));
    const std::uint64_t rows = get_u32(bytes.data() + 6);
    const std::uint64_t cols = get_u32(bytes.data() + 10);
    if (rows == 0 || cols == 0) throw FormatError("binary snapshot declares an empty matrix");
    const std::uint64_t cells = rows * cols;
    if (bytes.size() != kHeaderBytes + 16 * cells)
        throw FormatError("binary snapshot size " + std::to_string(bytes.size()) + " does not match declared " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    EncoderSnapshot snap;
    snap.mu.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    snap.sigma.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const unsigned char* p = bytes.data() + kHeaderBytes;
    for (Eigen::Index m = 0; m < snap.mu.rows(); ++m)
        for (Eigen::Index h = 0; h < snap.mu.cols(); ++h, p += 8) snap.mu(m, h) = get_f64(p);
    for (Eigen::Index m = 0; m < snap.mu.rows(); ++m)
        for (Eigen::Index h = 0; h < snap.mu.cols(); ++h, p += 8) snap.sigma(m, h) = get_f64(p);
    return snap;
}

EncoderSnapshot read_snapshot_unchecked(const std::filesystem::path& path, SnapshotFormat format) {
    const std::string data = read_file(path);
    EncoderSnapshot snap = format == SnapshotFormat::Csv
                               ? parse_csv(data)
                               : decode_binary_snapshot(std::vector<unsigned char>(data.begin(), data.end()));
    snap.provenance = path.filename().string();
    return snap;
}

EncoderSnapshot read_snapshot(const std::filesystem::path& path, SnapshotFormat format) {
    EncoderSnapshot snap = read_snapshot_unchecked(path, format);
    require_valid(snap);
    return snap;
}

void write_snapshot(const EncoderSnapshot& snapshot, const std::filesystem::path& path, SnapshotFormat format) {
    if (format == SnapshotFormat::Binary) {
        const auto bytes = encode_binary_snapshot(snapshot);
        write_file(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
    } else {
        require_valid(snapshot);
        const auto text = encode_csv(snapshot);
        write_file(path, text.data(), text.size());
    }
}

}  // namespace vaemi
