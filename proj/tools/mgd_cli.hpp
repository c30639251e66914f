#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 ok, 2 malformed input or arguments, 3 dimension mismatch,
// 4 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgd/bench.hpp"
#include "mgd/calculus.hpp"
#include "mgd/error.hpp"
#include "mgd/fit.hpp"
#include "mgd/fusion.hpp"
#include "mgd/gaussian.hpp"
#include "mgd/metrics.hpp"
#include "mgd/mgd_file.hpp"
#include "mgd/parallel.hpp"
#include "mgd/special_losses.hpp"

namespace mgd::cli {

enum ExitCode : int { kOk = 0, kParse = 2, kDimension = 3, kNumeric = 4 };

inline constexpr const char* kNoFactor = "none";
inline constexpr std::size_t kDenseCheckLimit = 4096;

struct RunConfig {
    double sigma = kDefaultSigma;
    Index rank = kDefaultRank;
    std::uint64_t seed = 42;
    double cap = kIndoorCap;
    Boundary boundary = Boundary::Dirichlet;
    std::string out;
    bool rank_given = false;
    bool sigma_given = false;
};

namespace detail {

inline std::string fixed12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12f", v);
    return buf;
}

inline std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    MgdFile file;
    std::string path;
};

inline Field load(const std::string& path) { return {read_mgd(path), path}; }

inline void require_same_grid(const Field& a, const Field& b) {
    if (a.file.rows != b.file.rows || a.file.cols != b.file.cols) {
        throw DimensionError(b.path + " is " + std::to_string(b.file.rows) + "x" + std::to_string(b.file.cols) +
                             ", expected " + std::to_string(a.file.rows) + "x" + std::to_string(a.file.cols));
    }
}

/// Loads a (mean, factor) pair; factor path "none" means rank 0.
inline LowRankGaussian load_gaussian(const Field& mu, const std::string& psi_path, const RunConfig& cfg) {
    const Vector mean = mgd_to_vector(mu.file);
    Matrix psi(mean.size(), 0);
    if (psi_path != kNoFactor) {
        const Field psi_field = load(psi_path);
        require_same_grid(mu, psi_field);
        psi = mgd_to_factor(psi_field.file);
    }
    if (cfg.rank_given && psi.cols() != cfg.rank) {
        throw DimensionError("factor has " + std::to_string(psi.cols()) + " channels but --rank is " +
                             std::to_string(cfg.rank));
    }
    return LowRankGaussian(mean, std::move(psi), cfg.sigma);
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
    std::filesystem::path dir = cfg.out.empty() ? std::filesystem::path(".") : std::filesystem::path(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ParseError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_gaussian(const std::filesystem::path& dir, std::size_t rows, std::size_t cols,
                           const LowRankGaussian& g) {
    write_mgd((dir / "mu.mgd").string(), vector_to_mgd(rows, cols, g.mu()));
    if (g.m() > 0) write_mgd((dir / "psi.mgd").string(), factor_to_mgd(rows, cols, g.psi()));
}

inline std::pair<Index, Index> parse_sweep(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("--n-sweep expects LO:HI");
    try {
        std::size_t used = 0;
        const long long lo = std::stoll(text.substr(0, colon), &used);
        if (used != colon) throw ParseError("--n-sweep: bad lower bound");
        const std::string hi_text = text.substr(colon + 1);
        const long long hi = std::stoll(hi_text, &used);
        if (used != hi_text.size()) throw ParseError("--n-sweep: bad upper bound");
        if (lo < 1 || hi < lo) throw ParseError("--n-sweep: need 1 <= LO <= HI");
        return {static_cast<Index>(lo), static_cast<Index>(hi)};
    } catch (const std::logic_error&) {
        throw ParseError("--n-sweep expects integers LO:HI");
    }
}

}  // namespace detail

/// Parses and runs one invocation. Never throws.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank multivariate Gaussian depth distributions", "mgd"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string boundary = "dirichlet";
    app.add_option("--sigma", cfg.sigma, "isotropic noise std-dev")->check(CLI::PositiveNumber);
    app.add_option("--rank", cfg.rank, "rank budget M")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", cfg.seed, "generator seed");
    app.add_option("--cap", cfg.cap, "depth cap in meters")->check(CLI::PositiveNumber);
    app.add_option("--boundary", boundary, "difference operator border")
        ->check(CLI::IsMember({"forward", "dirichlet"}));
    app.add_option("--out", cfg.out, "output file or directory");

    // nll
    auto* nll_cmd = app.add_subcommand("nll", "negative log likelihood of Z");
    std::string mu_path, psi_path, z_path;
    bool dense_check = false;
    nll_cmd->add_option("mu", mu_path)->required();
    nll_cmd->add_option("psi", psi_path, "factor raster, or 'none' for rank 0")->required();
    nll_cmd->add_option("z", z_path)->required();
    nll_cmd->add_flag("--dense-check", dense_check, "compare against the dense O(N^3) evaluation");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "draw samples");
    Index count = 1;
    sample_cmd->add_option("mu", mu_path)->required();
    sample_cmd->add_option("psi", psi_path)->required();
    sample_cmd->add_option("--count", count)->check(CLI::PositiveNumber);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit to samples");
    std::vector<std::string> sample_paths;
    FitConfig fit_cfg;
    fit_cmd->add_option("samples", sample_paths)->required();
    fit_cmd->add_option("--iterations", fit_cfg.iterations)->check(CLI::PositiveNumber);
    fit_cmd->add_option("--step", fit_cfg.step_size)->check(CLI::Range(1e-300, 1.0));
    fit_cmd->add_flag("--fit-sigma", fit_cfg.fit_sigma);

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "moment-match an equal-weight ensemble");
    std::vector<std::string> component_paths;
    std::string probe_path;
    Index truncate = -1;
    fuse_cmd->add_option("components", component_paths, "MU PSI pairs")->required();
    fuse_cmd->add_option("--probe", probe_path, "raster to score under the mixture and the fused Gaussian");
    fuse_cmd->add_option("--truncate", truncate, "keep this many leading factor directions")
        ->check(CLI::NonNegativeNumber);

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "depth evaluation statistics");
    std::string pred_path, gt_path;
    bool align = false;
    metrics_cmd->add_option("pred", pred_path)->required();
    metrics_cmd->add_option("gt", gt_path)->required();
    metrics_cmd->add_flag("--align", align, "least-squares scale and shift before scoring");

    // covrow
    auto* covrow_cmd = app.add_subcommand("covrow", "one row of the covariance as a raster");
    Index pixel = 0;
    covrow_cmd->add_option("psi", psi_path)->required();
    covrow_cmd->add_option("--pixel", pixel)->required();

    // reduce-check
    auto* reduce_cmd = app.add_subcommand("reduce-check", "affine gap between NLL and classical losses");
    Index reduce_n = 16;
    Index probes = 64;
    reduce_cmd->add_option("--n", reduce_n)->check(CLI::Range(Index{2}, Index{1} << 14));
    reduce_cmd->add_option("--probes", probes)->check(CLI::Range(Index{8}, Index{1} << 20));

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "nll_lowrank wall time over an N sweep");
    Index bench_m = 8;
    std::string sweep = "4096:32768";
    bench_cmd->add_option("--m", bench_m)->check(CLI::Range(Index{0}, Index{4096}));
    bench_cmd->add_option("--n-sweep", sweep, "LO:HI, doubling");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "mgd: " << e.what() << "\n";
        return kParse;
    }
    cfg.boundary = boundary == "forward" ? Boundary::Forward : Boundary::Dirichlet;
    cfg.rank_given = app.get_option("--rank")->count() > 0;
    cfg.sigma_given = app.get_option("--sigma")->count() > 0;

    try {
        if (*nll_cmd) {
            const auto mu = detail::load(mu_path);
            const auto z = detail::load(z_path);
            detail::require_same_grid(mu, z);
            const LowRankGaussian g = detail::load_gaussian(mu, psi_path, cfg);
            const Vector zv = mgd_to_vector(z.file);
            const double value = nll_lowrank(g, zv);
            out << detail::fixed12(value) << "\n";
            if (dense_check) {
                if (static_cast<std::size_t>(g.n()) > kDenseCheckLimit) {
                    throw DimensionError("--dense-check limited to N <= " + std::to_string(kDenseCheckLimit));
                }
                const double dense = nll_dense(dense_covariance(g), zv);
                out << "dense " << detail::fixed12(dense) << "\n";
                out << "gap " << detail::sci(std::abs(dense - value)) << "\n";
            }
        } else if (*sample_cmd) {
            const auto mu = detail::load(mu_path);
            const LowRankGaussian g = detail::load_gaussian(mu, psi_path, cfg);
            const auto dir = detail::out_dir(cfg);
            Rng rng(cfg.seed);
            const auto draws = sample(g, rng, count);
            for (std::size_t k = 0; k < draws.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof name, "sample_%05zu.mgd", k);
                write_mgd((dir / name).string(), vector_to_mgd(mu.file.rows, mu.file.cols, draws[k]));
            }
            out << "wrote " << draws.size() << " samples to " << dir.string() << "\n";
        } else if (*fit_cmd) {
            if (sample_paths.size() < 2) throw DomainError("fit needs at least 2 sample rasters");
            std::vector<Vector> samples;
            const auto first = detail::load(sample_paths.front());
            samples.push_back(mgd_to_vector(first.file));
            for (std::size_t k = 1; k < sample_paths.size(); ++k) {
                const auto s = detail::load(sample_paths[k]);
                detail::require_same_grid(first, s);
                samples.push_back(mgd_to_vector(s.file));
            }
            fit_cfg.m = cfg.rank;
            fit_cfg.seed = cfg.seed;
            if (cfg.sigma_given) fit_cfg.sigma = cfg.sigma;
            const FitResult fit = fit_mle(samples, fit_cfg);
            const auto dir = detail::out_dir(cfg);
            detail::write_gaussian(dir, first.file.rows, first.file.cols, fit.model);
            std::string log = "iteration mean_nll step\n";
            for (const auto& c : fit.checkpoints) {
                log += std::to_string(c.iteration) + " " + detail::g17(c.mean_nll) + " " + detail::g17(c.step) + "\n";
            }
            detail::write_text(dir / "fit_log.txt", log);
            out << "rank " << fit.model.m() << "\n";
            out << "sigma " << detail::g17(fit.model.sigma()) << "\n";
            out << "iterations " << fit.iterations_run << "\n";
            out << "final_mean_nll " << detail::fixed12(fit.final_nll) << "\n";
        } else if (*fuse_cmd) {
            if (component_paths.size() % 2 != 0) throw ParseError("fuse expects MU PSI pairs");
            std::vector<LowRankGaussian> parts;
            const auto first = detail::load(component_paths.front());
            for (std::size_t k = 0; k < component_paths.size(); k += 2) {
                const auto mu = k == 0 ? first : detail::load(component_paths[k]);
                detail::require_same_grid(first, mu);
                parts.push_back(detail::load_gaussian(mu, component_paths[k + 1], cfg));
            }
            const GaussianEnsemble ensemble(std::move(parts));
            LowRankGaussian fused = fuse(ensemble);
            if (truncate >= 0) fused = truncate_rank(fused, truncate);
            const auto dir = detail::out_dir(cfg);
            detail::write_gaussian(dir, first.file.rows, first.file.cols, fused);
            out << "components " << ensemble.size() << "\n";
            out << "width " << fused.m() << "\n";
            if (!probe_path.empty()) {
                const auto probe = detail::load(probe_path);
                detail::require_same_grid(first, probe);
                const Vector z = mgd_to_vector(probe.file);
                const double mixture = ensemble_nll(ensemble, z, threads_from_env());
                const double single = nll_lowrank(fused, z);
                const double n = static_cast<double>(z.size());
                out << "mixture_nll " << detail::fixed12(mixture) << "\n";
                out << "fused_nll " << detail::fixed12(single) << "\n";
                out << "mixture_nll_per_pixel " << detail::fixed12(mixture / n) << "\n";
                out << "fused_nll_per_pixel " << detail::fixed12(single / n) << "\n";
            }
        } else if (*metrics_cmd) {
            const auto pred = detail::load(pred_path);
            const auto gt = detail::load(gt_path);
            detail::require_same_grid(pred, gt);
            if (pred.file.channels != 1 || gt.file.channels != 1) {
                throw DimensionError("metrics expects single-channel rasters");
            }
            DepthRaster p = DepthRaster::prediction(pred.file.rows, pred.file.cols, pred.file.values, cfg.cap);
            const DepthRaster g = DepthRaster::ground_truth(gt.file.rows, gt.file.cols, gt.file.values, cfg.cap);
            std::optional<Alignment> alignment;
            if (align) {
                alignment = align_scale_shift(p, g);
                p = alignment->aligned;
            }
            const MetricReport r = evaluate(p, g);
            out << "silog " << detail::g17(r.silog) << "\n";
            out << "abs_rel " << detail::g17(r.abs_rel) << "\n";
            out << "rms " << detail::g17(r.rms) << "\n";
            out << "rms_log " << detail::g17(r.rms_log) << "\n";
            out << "sq_rel " << detail::g17(r.sq_rel) << "\n";
            out << "irms " << detail::g17(r.irms) << "\n";
            out << "delta1 " << detail::g17(r.delta1) << "\n";
            out << "delta2 " << detail::g17(r.delta2) << "\n";
            out << "delta3 " << detail::g17(r.delta3) << "\n";
            out << "irms_per_m " << detail::g17(r.irms_per_m) << "\n";
            out << "valid_pixels " << r.valid_pixels << "\n";
            if (alignment) {
                out << "scale " << detail::g17(alignment->scale) << "\n";
                out << "shift " << detail::g17(alignment->shift) << "\n";
            }
        } else if (*covrow_cmd) {
            const auto psi = detail::load(psi_path);
            const Matrix factor = mgd_to_factor(psi.file);
            if (cfg.rank_given && factor.cols() != cfg.rank) {
                throw DimensionError("factor has " + std::to_string(factor.cols()) + " channels but --rank is " +
                                     std::to_string(cfg.rank));
            }
            const LowRankGaussian g(Vector::Zero(factor.rows()), factor, cfg.sigma);
            const Vector row = covariance_row(g, pixel);
            const std::string path = cfg.out.empty() ? "covrow.mgd" : cfg.out;
            write_mgd(path, vector_to_mgd(psi.file.rows, psi.file.cols, row));
            out << "wrote covariance row " << pixel << " to " << path << "\n";
        } else if (*reduce_cmd) {
            Rng rng(cfg.seed);
            ReductionOptions options;
            options.boundary = cfg.boundary;
            options.rank = cfg.rank_given ? cfg.rank : reduce_n;
            out << "kind affine_gap relative_gap\n";
            for (ReductionKind kind : {ReductionKind::L2, ReductionKind::SI, ReductionKind::Gradient}) {
                const ReductionReport rep = check_reduction(kind, reduce_n, cfg.sigma, probes, rng, options);
                out << to_string(kind) << " " << detail::sci(rep.affine_gap) << " " << detail::sci(rep.relative_gap)
                    << "\n";
            }
        } else if (*bench_cmd) {
            const auto [lo, hi] = detail::parse_sweep(sweep);
            BenchOptions options;
            options.seed = cfg.seed;
            for (const BenchRow& row : bench_nll_scaling(bench_m, doubling_sweep(lo, hi), options)) {
                char line[96];
                std::snprintf(line, sizeof line, "%lld %lld %.0f\n", static_cast<long long>(row.n),
                              static_cast<long long>(row.m), row.nanos);
                out << line;
            }
        }
    } catch (const ParseError& e) {
        err << "mgd: " << e.what() << "\n";
        return kParse;
    } catch (const DomainError& e) {
        err << "mgd: " << e.what() << "\n";
        return kParse;
    } catch (const DimensionError& e) {
        err << "mgd: " << e.what() << "\n";
        return kDimension;
    } catch (const NumericError& e) {
        err << "mgd: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        err << "mgd: " << e.what() << "\n";
        return kNumeric;
    }
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args), out, err);
}

}  // namespace mgd::cli
