#include "vaemi/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "text_format.hpp"
#include "vaemi/errors.hpp"
#include "vaemi/estimator.hpp"
#include "vaemi/linear_world.hpp"
#include "vaemi/sweeps.hpp"
#include "vaemi/trainer.hpp"

namespace vaemi::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kActiveThreshold = 0.1;
constexpr double kInactiveThreshold = 0.01;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("error writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

SnapshotFormat resolve_format(const std::string& name, const fs::path& path) {
    return name == "auto" ? snapshot_format_for(path) : parse_snapshot_format(name);
}

std::string format_12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Eigen::VectorXd parse_spectrum(const std::vector<double>& values, Eigen::Index intrinsic) {
    if (values.empty()) return default_spectrum(intrinsic);
    if (static_cast<Eigen::Index>(values.size()) != intrinsic)
        throw std::invalid_argument("--spectrum needs exactly --intrinsic values");
    return Eigen::Map<const Eigen::VectorXd>(values.data(), intrinsic);
}

struct AnalyzeArgs {
    std::string snapshot;
    std::string format = "auto";
    double threshold = 0.5;
    bool fit_mean = false;
    bool audit = false;
    std::string out;
    std::string emit = "json";
    std::string plot;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
    const fs::path path(a.snapshot);
    const auto snapshot = read_snapshot(path, resolve_format(a.format, path));
    AnalyzeOptions options;
    options.threshold = a.threshold;
    options.fit_mean = a.fit_mean;
    options.with_audit = a.audit;
    const auto report = analyze(snapshot, options);
    write_text(a.out, a.emit == "csv" ? report_to_csv(report) : report_to_json(report));
    if (!a.plot.empty()) write_text(a.plot, report_pulse_csv(report));
    out << "total_mi_nats=" << detail::format_double(report.total_mi) << " influential=" << report.influential_count()
        << "/" << report.num_factors() << " threshold=" << detail::format_double(report.threshold) << "\n";
    return kOk;
}

struct SimulateArgs {
    Eigen::Index intrinsic = 4;
    Eigen::Index data_dim = 8;
    Eigen::Index latent = 16;
    double beta = 4.0;
    Eigen::Index samples = 10000;
    std::size_t steps = 20000;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    double gamma = 0.01;
    double threshold = 0.5;
    std::vector<double> spectrum;
    bool learn_decoder_noise = false;
    std::string out_dir;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    TrainConfig config;
    config.data_dim = a.data_dim;
    config.intrinsic_dim = a.intrinsic;
    config.latent_dim = a.latent;
    config.spectrum = parse_spectrum(a.spectrum, a.intrinsic);
    config.noise_level = a.gamma;
    config.beta = a.beta;
    config.samples = a.samples;
    config.steps = a.steps;
    config.learning_rate = a.learning_rate;
    config.seed = a.seed;
    config.learn_decoder_noise = a.learn_decoder_noise;
    if (a.intrinsic > a.data_dim) throw std::invalid_argument("--intrinsic must not exceed --data-dim");

    const auto trained = train_beta_vae(config);
    const auto snapshot = sample_snapshot(trained.world, a.samples, a.seed + 1);
    AnalyzeOptions options;
    options.threshold = a.threshold;
    const auto report = analyze(snapshot, options);
    const auto analytic = analytic_factor_mi(trained.world);

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_text(dir / "world.json", world_to_json(trained.world));
    write_snapshot(snapshot, dir / "snapshot.fsnap", SnapshotFormat::Binary);
    write_text(dir / "report.json", report_to_json(report));
    write_text(dir / "pulse.csv", report_pulse_csv(report));

    nlohmann::ordered_json exact;
    auto factors = nlohmann::ordered_json::array();
    for (Eigen::Index h = 0; h < analytic.size(); ++h) factors.push_back({{"index", h}, {"mi_nats", analytic[h]}});
    exact["factors"] = std::move(factors);
    exact["total_mi_nats"] = analytic.sum();
    exact["joint_mi_nats"] = analytic_joint_mi(trained.world);
    write_text(dir / "analytic_mi.json", exact.dump(2) + "\n");

    const auto active = (report.per_factor_mi.array() > kActiveThreshold).count();
    const auto inactive = (report.per_factor_mi.array() < kInactiveThreshold).count();
    nlohmann::ordered_json summary;
    summary["beta"] = a.beta;
    summary["latent_dim"] = a.latent;
    summary["intrinsic_dim"] = a.intrinsic;
    summary["active_threshold_nats"] = kActiveThreshold;
    summary["inactive_threshold_nats"] = kInactiveThreshold;
    summary["active"] = active;
    summary["inactive"] = inactive;
    summary["final_objective"] = trained.trace.back().objective;
    write_text(dir / "sparsity.json", summary.dump(2) + "\n");

    std::string trace = "step,objective,reconstruction,kl\n";
    for (const auto& r : trained.trace)
        trace += std::to_string(r.step) + ',' + detail::format_double(r.objective) + ',' +
                 detail::format_double(r.reconstruction) + ',' + detail::format_double(r.kl) + '\n';
    write_text(dir / "trace.csv", trace);

    out << "active=" << active << " inactive=" << inactive << " latent=" << a.latent
        << " total_mi_nats=" << detail::format_double(report.total_mi) << "\n";
    return kOk;
}

struct SweepArgs {
    std::string world;
    std::string report;
    std::string kind = "truncate";
    std::string fractions = "1,0.5,0.25,0";
    std::uint64_t seed = 0;
    Eigen::Index samples = 5000;
    std::string out;
    std::string emit = "csv";
};

int run_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    const auto fractions = parse_fraction_list(a.fractions);
    const auto world = world_from_json(read_text(a.world));
    const auto report = report_from_json(read_text(a.report));
    if (report.num_factors() != world.latent_dim)
        throw FormatError("report and world disagree on the number of factors");
    const auto rows = a.kind == "classify"
                          ? classification_sweep(world, LabelRule::quadrant(), report, fractions, a.samples, a.seed)
                          : truncation_sweep(world, report, fractions);
    write_text(a.out, a.emit == "json" ? sweep_to_json(rows, a.kind) : sweep_to_csv(rows));
    out << "rows=" << rows.size() << " kind=" << a.kind << "\n";
    if (const auto bad = first_bound_violation(rows)) {
        const auto& r = rows[*bad];
        err << "bound violated at row " << *bad << ": fraction=" << detail::format_double(r.fraction)
            << " measured=" << detail::format_double(r.measured) << " bound=" << detail::format_double(r.bound) << "\n";
        return kNumericFailure;
    }
    return kOk;
}

int run_validate(const std::string& snapshot, const std::string& format, std::ostream& out, std::ostream& err) {
    const fs::path path(snapshot);
    const auto snap = read_snapshot_unchecked(path, resolve_format(format, path));
    const auto violations = validate_snapshot(snap);
    if (violations.empty()) {
        out << "valid M=" << snap.num_samples() << " H=" << snap.num_factors() << "\n";
        return kOk;
    }
    for (const auto& v : violations) err << v.to_string() << (v.in_sigma ? " sigma" : " mu") << "\n";
    return kDataError;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Per-factor mutual information for VAE encoders"};
    app.require_subcommand(1);

    AnalyzeArgs an;
    auto* analyze_cmd = app.add_subcommand("analyze", "Estimate per-factor MI from an encoder snapshot");
    analyze_cmd->add_option("snapshot", an.snapshot, "Snapshot file")->required();
    analyze_cmd->add_option("--format", an.format, "Snapshot format")->check(CLI::IsMember({"auto", "csv", "binary"}));
    analyze_cmd->add_option("--threshold", an.threshold, "Influence threshold in nats")->check(CLI::NonNegativeNumber);
    analyze_cmd->add_flag("--fit-mean", an.fit_mean, "Fit the mean of q* instead of fixing it at zero");
    analyze_cmd->add_flag("--audit", an.audit, "Run the quadrature decomposition audit against N(0,1)");
    analyze_cmd->add_option("--out", an.out, "Report path")->required();
    analyze_cmd->add_option("--emit", an.emit, "Report format")->check(CLI::IsMember({"json", "csv"}));
    analyze_cmd->add_option("--plot", an.plot, "Also write factor-vs-MI CSV here");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Train a linear beta-VAE and analyze its encoder");
    simulate_cmd->add_option("--intrinsic", sim.intrinsic, "Intrinsic dimension P")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--data-dim", sim.data_dim, "Data dimension D")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--latent", sim.latent, "Latent dimension H")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--beta", sim.beta, "KL weight")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--samples", sim.samples, "Training and evaluation samples M")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--steps", sim.steps, "Gradient steps")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--learning-rate", sim.learning_rate, "Initial learning rate")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", sim.seed, "Random seed");
    simulate_cmd->add_option("--gamma", sim.gamma, "Isotropic data noise level")->check(CLI::NonNegativeNumber);
    simulate_cmd->add_option("--spectrum", sim.spectrum, "Intrinsic variances (P values)")->delimiter(',');
    simulate_cmd->add_option("--threshold", sim.threshold, "Influence threshold for the report")
        ->check(CLI::NonNegativeNumber);
    simulate_cmd->add_flag("--learn-decoder-noise", sim.learn_decoder_noise, "Also train the decoder noise scale");
    simulate_cmd->add_option("--out", sim.out_dir, "Output directory")->required();

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Top-fraction truncation or classification sweep with bounds");
    sweep_cmd->add_option("--world", sw.world, "World JSON")->required();
    sweep_cmd->add_option("--report", sw.report, "Report JSON")->required();
    sweep_cmd->add_option("--kind", sw.kind, "Sweep kind")->check(CLI::IsMember({"truncate", "classify"}));
    sweep_cmd->add_option("--fractions", sw.fractions, "Comma-separated fractions in [0,1]");
    sweep_cmd->add_option("--seed", sw.seed, "Random seed (classify)");
    sweep_cmd->add_option("--samples", sw.samples, "Train/test samples (classify)")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sw.out, "Output path")->required();
    sweep_cmd->add_option("--emit", sw.emit, "Output format")->check(CLI::IsMember({"csv", "json"}));

    auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the MSE or Fano lower bound");
    bounds_cmd->require_subcommand(1);
    double entropy = 0.0, mi = 0.0, label_entropy = 0.0;
    int classes = 0;
    auto* mse_cmd = bounds_cmd->add_subcommand("mse", "exp(2(H - I)) / (2 pi e)");
    mse_cmd->add_option("--entropy", entropy, "Differential entropy of x (nats)")->required();
    mse_cmd->add_option("--mi", mi, "Mutual information (nats)")->required()->check(CLI::NonNegativeNumber);
    auto* fano_cmd = bounds_cmd->add_subcommand("fano", "(H(y) - I - 1) / ln|Y|, clamped at 0");
    fano_cmd->add_option("--label-entropy", label_entropy, "Label entropy (nats)")->required()->check(CLI::NonNegativeNumber);
    fano_cmd->add_option("--classes", classes, "Number of classes")->required()->check(CLI::Range(2, 1 << 30));
    fano_cmd->add_option("--mi", mi, "Mutual information (nats)")->required()->check(CLI::NonNegativeNumber);

    std::string validate_path, validate_format = "auto";
    auto* validate_cmd = app.add_subcommand("validate", "Check a snapshot file against its invariants");
    validate_cmd->add_option("snapshot", validate_path, "Snapshot file")->required();
    validate_cmd->add_option("--format", validate_format, "Snapshot format")->check(CLI::IsMember({"auto", "csv", "binary"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*analyze_cmd) return run_analyze(an, out);
        if (*simulate_cmd) return run_simulate(sim, out);
        if (*sweep_cmd) return run_sweep(sw, out, err);
        if (*validate_cmd) return run_validate(validate_path, validate_format, out, err);
        if (*mse_cmd) {
            out << format_12(mse_lower_bound(entropy, mi).value) << "\n";
            return kOk;
        }
        if (*fano_cmd) {
            out << format_12(fano_bound(label_entropy, classes, mi).value) << "\n";
            return kOk;
        }
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations()) err << v.to_string() << (v.in_sigma ? " sigma" : " mu") << "\n";
        return kDataError;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kDataError;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const TrainingError& e) {
        err << "training failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const EvaluationError& e) {
        err << "evaluation failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const std::logic_error& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace vaemi::cli
