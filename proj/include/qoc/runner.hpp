#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qoc/config.hpp"
#include "qoc/csv.hpp"
#include "qoc/models.hpp"
#include "qoc/rng.hpp"
#include "qoc/tradeoff.hpp"

namespace qoc {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;
constexpr int kExitStalled = 4;

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

namespace runner_detail {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        threads = hc == 0 ? 1 : static_cast<int>(hc);
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

struct ModelHandle {
    std::unique_ptr<HamiltonianModel> model;
    std::string kind;
};

inline ModelHandle build_model(const Config& cfg) {
    const std::string type = cfg.get_string("model.type");
    const double omega = cfg.get_double("model.omega_max_rad_per_s", 6.283185307179586e7);
    if (!(omega > 0.0)) throw ConfigError("key 'model.omega_max_rad_per_s': must be positive");
    if (type == "two_level")
        return {std::make_unique<LinearModel>(two_level_model(omega)), type};
    if (type == "rydberg") {
        const long n = cfg.get_int("model.n_atoms", 3);
        if (n < 1 || n > 64) throw ConfigError("key 'model.n_atoms': must lie in [1, 64]");
        return {std::make_unique<RydbergModel>(static_cast<int>(n), omega), type};
    }
    throw ConfigError("key 'model.type': unknown model '" + type + "'");
}

inline OptimizerConfig optimizer_config(const Config& cfg) {
    OptimizerConfig oc;
    oc.step_alpha = cfg.get_double("optimizer.step_alpha", oc.step_alpha);
    oc.max_sweeps = static_cast<int>(cfg.get_int("optimizer.max_sweeps", oc.max_sweeps));
    oc.fidelity_tol = cfg.get_double("optimizer.fidelity_tol", oc.fidelity_tol);
    oc.sigma_q_tol = cfg.get_double("optimizer.sigma_q_tol", oc.sigma_q_tol);
    const std::string dir = cfg.get_string("optimizer.sweep_direction", "forward");
    if (dir == "forward")
        oc.direction = OptimizerConfig::Direction::forward;
    else if (dir == "backward")
        oc.direction = OptimizerConfig::Direction::backward;
    else if (dir == "alternating")
        oc.direction = OptimizerConfig::Direction::alternating;
    else
        throw ConfigError("key 'optimizer.sweep_direction': unknown value '" + dir + "'");
    oc.line_search = cfg.get_bool("optimizer.line_search", oc.line_search);
    oc.shrink = cfg.get_double("optimizer.line_search_shrink", oc.shrink);
    const std::string samp = cfg.get_string("optimizer.gradient_sampling", "midpoint");
    if (samp == "midpoint")
        oc.sampling = OptimizerConfig::Sampling::midpoint;
    else if (samp == "endpoint")
        oc.sampling = OptimizerConfig::Sampling::endpoint;
    else
        throw ConfigError("key 'optimizer.gradient_sampling': unknown value '" + samp + "'");
    oc.stall_sweeps = static_cast<int>(cfg.get_int("optimizer.stall_sweeps", oc.stall_sweeps));
    if (!(oc.step_alpha > 0.0) || !(oc.fidelity_tol > 0.0) || !(oc.sigma_q_tol > 0.0) ||
        oc.max_sweeps < 0 || oc.stall_sweeps < 1 || !(oc.shrink > 0.0) || oc.shrink >= 1.0)
        throw ConfigError("section 'optimizer': value out of range");
    return oc;
}

inline TraceConfig trace_config(const Config& cfg) {
    TraceConfig tc;
    tc.f_step = cfg.get_double("tradeoff.f_step", tc.f_step);
    tc.f_step_fine = cfg.get_double("tradeoff.f_step_fine", tc.f_step_fine);
    tc.f_max = cfg.get_double("tradeoff.f_max", tc.f_max);
    tc.f_min = cfg.get_double("tradeoff.f_min", tc.f_min);
    tc.fid_tol = cfg.get_double("tradeoff.fid_tol", tc.fid_tol);
    tc.outer_cap = static_cast<int>(cfg.get_int("tradeoff.outer_cap", tc.outer_cap));
    tc.family_threshold = cfg.get_double("tradeoff.family_threshold", tc.family_threshold);
    tc.resample_points =
        static_cast<int>(cfg.get_int("tradeoff.resample_points", tc.resample_points));
    const std::string dir = cfg.get_string("tradeoff.direction", "up");
    if (dir == "up") {
        tc.go_up = true;
        tc.go_down = false;
    } else if (dir == "down") {
        tc.go_up = false;
        tc.go_down = true;
    } else if (dir == "both") {
        tc.go_up = true;
        tc.go_down = true;
    } else {
        throw ConfigError("key 'tradeoff.direction': unknown value '" + dir + "'");
    }
    if (!(tc.f_step > 0.0) || !(tc.f_step_fine > 0.0) || !(tc.fid_tol > 0.0) ||
        tc.f_max <= 0.0 || tc.f_max > 1.0 || tc.f_min < 0.0 || tc.f_min >= tc.f_max ||
        tc.outer_cap < 1 || tc.resample_points < 1 || !(tc.family_threshold > 0.0))
        throw ConfigError("section 'tradeoff': value out of range");
    return tc;
}

inline RealVector constant_seed_value(const Config& cfg, const HamiltonianModel& model) {
    const std::vector<double> vals = cfg.get_double_list("seed_control.value", {1.0});
    RealVector u(model.control_count());
    if (vals.size() == 1) {
        u.setConstant(vals[0]);
    } else if (vals.size() == static_cast<std::size_t>(model.control_count())) {
        for (int k = 0; k < model.control_count(); ++k)
            u[k] = vals[static_cast<std::size_t>(k)];
    } else {
        throw ConfigError("key 'seed_control.value': expected 1 or " +
                          std::to_string(model.control_count()) + " values");
    }
    if (!model.in_bounds(u))
        throw ConfigError("key 'seed_control.value': outside the model's control bounds");
    return u;
}

inline ControlSequence build_seed(const Config& cfg, const HamiltonianModel& model,
                                  const TimeGrid& grid, SplitMix64& rng) {
    const std::string kind = cfg.get_string("seed_control.kind", "constant");
    if (kind == "constant") return constant_controls(constant_seed_value(cfg, model), grid);
    if (kind == "file") {
        const std::string path = cfg.get_string("seed_control.path");
        ControlSequence seq = load_controls(path);
        for (const auto& u : seq.controls)
            if (!model.in_bounds(u))
                throw ConfigError("key 'seed_control.path': file holds out-of-bounds controls");
        return seq;
    }
    if (kind == "random") {
        std::vector<RealVector> controls;
        controls.reserve(grid.segments());
        for (std::size_t j = 0; j < grid.segments(); ++j) {
            RealVector u(model.control_count());
            for (int k = 0; k < model.control_count(); ++k) {
                const ControlBounds b = model.bounds(k);
                u[k] = rng.uniform_in(b.lo, b.hi);
            }
            controls.push_back(u);
        }
        return ControlSequence(std::move(controls), grid);
    }
    throw ConfigError("key 'seed_control.kind': unknown value '" + kind + "'");
}

// command-line flags override the config, but the keys still count as read
inline std::filesystem::path resolve_out_dir(const Config& cfg, const CliOptions& opts) {
    const std::string from_cfg = cfg.get_string("output.dir", "out");
    const std::string dir = opts.out_dir ? *opts.out_dir : from_cfg;
    if (dir.empty()) throw ConfigError("key 'output.dir': empty path");
    return dir;
}

inline std::uint64_t resolve_seed(const Config& cfg, const CliOptions& opts) {
    const std::uint64_t from_cfg = cfg.get_u64("run.seed", 0);
    return opts.seed ? *opts.seed : from_cfg;
}

inline int resolve_threads(const Config& cfg, const CliOptions& opts) {
    const long t = opts.threads ? *opts.threads : cfg.get_int("run.threads", 1);
    if (t < 0) throw ConfigError("key 'run.threads': must be nonnegative");
    return static_cast<int>(t);
}

inline std::string sigma_cell(const std::optional<double>& s) {
    return s ? format_double(*s) : "nan";
}

inline void write_trace_files(const std::filesystem::path& dir, const ClassTrace& trace,
                              int resample_points) {
    CsvWriter tw(dir / "trace.csv", {"T_seconds", "F_opt", "Q_opt_rad_per_s", "sigma_Q",
                                     "class_id", "slipped_from"});
    for (const auto& s : trace.samples)
        tw.row({format_double(s.t), format_double(s.f), format_double(s.q_opt),
                sigma_cell(s.sigma_q), std::to_string(s.class_id),
                std::to_string(s.slipped_from)});

    const auto nc = trace.samples.front().seq.controls.front().size();
    std::vector<std::string> header{"T_seconds"};
    for (Eigen::Index k = 0; k < nc; ++k)
        for (int p = 0; p < resample_points; ++p)
            header.push_back("u" + std::to_string(k) + "_" + std::to_string(p));
    CsvWriter sw(dir / "controls_surface.csv", header);
    for (const auto& s : trace.samples) {
        std::vector<std::string> cells{format_double(s.t)};
        for (Eigen::Index k = 0; k < nc; ++k)
            for (int p = 0; p < resample_points; ++p) {
                const double x = (p + 0.5) / resample_points;
                const auto j = s.seq.grid.segment_at(x * s.seq.grid.total());
                cells.push_back(format_double(s.seq.controls[j][k]));
            }
        sw.row(cells);
    }
}

inline ClassTrace run_trace_from_config(const Config& cfg, const CliOptions& opts,
                                        const HamiltonianModel& model) {
    const OptimizerConfig oc = optimizer_config(cfg);
    const TraceConfig tc = trace_config(cfg);
    const double t0 = cfg.get_double("grid.t_total_s");
    const long segs = cfg.get_int("grid.segments", 200);
    if (!(t0 > 0.0)) throw ConfigError("key 'grid.t_total_s': must be positive");
    if (segs < 1) throw ConfigError("key 'grid.segments': must be at least 1");
    SplitMix64 rng(resolve_seed(cfg, opts));
    const ControlSequence seed =
        build_seed(cfg, model, TimeGrid::uniform(t0, static_cast<std::size_t>(segs)), rng);
    return trace_class(seed, model, oc, tc);
}

}  // namespace runner_detail

/// Constant-control scan over a duration range; one CSV row per duration.
inline int cmd_evolve(const CliOptions& opts) {
    using namespace runner_detail;
    const Config cfg = Config::parse_file(opts.config_path);
    const ModelHandle mh = build_model(cfg);
    const double t_min = cfg.get_double("grid.t_min_s");
    const double t_max = cfg.get_double("grid.t_max_s");
    const long points = cfg.get_int("grid.t_points");
    const long segs = cfg.get_int("grid.segments", 200);
    if (!(t_min >= 0.0)) throw ConfigError("key 'grid.t_min_s': must be nonnegative");
    if (!(t_max > t_min)) throw ConfigError("key 'grid.t_max_s': must exceed grid.t_min_s");
    if (points < 2) throw ConfigError("key 'grid.t_points': need at least 2");
    if (segs < 1) throw ConfigError("key 'grid.segments': must be at least 1");
    const std::string kind = cfg.get_string("seed_control.kind", "constant");
    if (kind != "constant")
        throw ConfigError("key 'seed_control.kind': evolve scans constant controls only");
    const RealVector u = constant_seed_value(cfg, *mh.model);
    const int threads = resolve_threads(cfg, opts);
    const std::filesystem::path dir = resolve_out_dir(cfg, opts);
    cfg.require_all_consumed();

    const QuantumState psi0 = mh.model->initial_state();
    const QuantumState chiT = mh.model->target_state();
    const Matrix h = mh.model->build(u);
    struct Row {
        double t, f, q, de, c;
    };
    std::vector<Row> rows(static_cast<std::size_t>(points));
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const double t = t_min + (t_max - t_min) * static_cast<double>(i) /
                                     static_cast<double>(points - 1);
        if (t <= 0.0) {
            rows[i] = {0.0, fidelity(chiT, psi0), direct_velocity(chiT, psi0, h).q,
                       energy_uncertainty(psi0, h), 0.0};
            return;
        }
        const TimeGrid grid = TimeGrid::uniform(t, static_cast<std::size_t>(segs));
        const ControlSequence seq = constant_controls(u, grid);
        const TrajectoryRecord rec = record_diagnostics(psi0, chiT, seq, *mh.model);
        rows[i] = {t, fidelity(chiT, rec.forward.back()), rec.q.values.back(),
                   rec.delta_e.values.back(), trajectory_length(rec)};
    });

    std::filesystem::create_directories(dir);
    CsvWriter w(dir / "scan.csv", {"T_seconds", "F", "Q_rad_per_s", "dE_rad_per_s", "C_rad"});
    for (const auto& r : rows)
        w.row({format_double(r.t), format_double(r.f), format_double(r.q),
               format_double(r.de), format_double(r.c)});
    std::cout << "scan: " << rows.size() << " durations in [" << format_double(t_min) << ", "
              << format_double(t_max) << "] s -> " << (dir / "scan.csv").string() << "\n";
    return kExitOk;
}

/// Single fixed-duration optimization; writes the report and the control schedule.
inline int cmd_optimize(const CliOptions& opts) {
    using namespace runner_detail;
    const Config cfg = Config::parse_file(opts.config_path);
    const ModelHandle mh = build_model(cfg);
    const OptimizerConfig oc = optimizer_config(cfg);
    const double t0 = cfg.get_double("grid.t_total_s");
    const long segs = cfg.get_int("grid.segments", 200);
    if (!(t0 > 0.0)) throw ConfigError("key 'grid.t_total_s': must be positive");
    if (segs < 1) throw ConfigError("key 'grid.segments': must be at least 1");
    SplitMix64 rng(resolve_seed(cfg, opts));
    const ControlSequence seed =
        build_seed(cfg, *mh.model, TimeGrid::uniform(t0, static_cast<std::size_t>(segs)), rng);
    const std::filesystem::path dir = resolve_out_dir(cfg, opts);
    cfg.require_all_consumed();

    const OptimizationReport rep = optimize(seed, *mh.model, oc);
    const TrajectoryRecord rec =
        record_diagnostics(mh.model->initial_state(), mh.model->target_state(), rep.seq,
                           *mh.model);

    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.txt");
        out << "model = " << mh.kind << "\n";
        out << "t_total_s = " << format_double(rep.seq.grid.total()) << "\n";
        out << "segments = " << rep.seq.grid.segments() << "\n";
        out << "final_fidelity = " << format_double(rep.final_fidelity) << "\n";
        out << "mean_q_rad_per_s = " << format_double(rep.q_mean) << "\n";
        out << "sigma_q = " << sigma_cell(rep.sigma_q) << "\n";
        out << "trajectory_length_rad = " << format_double(trajectory_length(rec)) << "\n";
        out << "sweeps = " << rep.sweeps << "\n";
        out << "termination = " << to_string(rep.reason) << "\n";
    }
    save_controls(dir / "controls_opt.csv", rep.seq);
    {
        CsvWriter w(dir / "q_series.csv", {"t_right_s", "Q_rad_per_s", "dE_rad_per_s"});
        for (std::size_t j = 0; j < rep.seq.grid.segments(); ++j)
            w.row({format_double(rep.seq.grid.boundary(j + 1)),
                   format_double(rep.q.values[j]), format_double(rec.delta_e.values[j])});
    }
    {
        CsvWriter w(dir / "fidelity_history.csv", {"sweep", "F", "sigma_Q"});
        for (std::size_t i = 0; i < rep.fidelity_history.size(); ++i)
            w.row({std::to_string(i), format_double(rep.fidelity_history[i]),
                   i < rep.sigma_q_history.size()
                       ? format_double(rep.sigma_q_history[i])
                       : std::string("nan")});
    }
    std::cout << "optimize: F = " << format_double(rep.final_fidelity) << " after "
              << rep.sweeps << " sweeps (" << to_string(rep.reason) << "), sigma_Q = "
              << sigma_cell(rep.sigma_q) << "\n";
    const bool ok =
        rep.reason == StopReason::converged || rep.reason == StopReason::target_reached;
    return ok ? kExitOk : kExitStalled;
}

/// Continuation trace of the seed's optimum class; emits the trade-off curve
/// and the control surface.
inline int cmd_trace(const CliOptions& opts) {
    using namespace runner_detail;
    const Config cfg = Config::parse_file(opts.config_path);
    const ModelHandle mh = build_model(cfg);
    const std::filesystem::path dir = resolve_out_dir(cfg, opts);
    const int resample = static_cast<int>(cfg.get_int("tradeoff.resample_points", 64));
    const ClassTrace trace = run_trace_from_config(cfg, opts, *mh.model);
    cfg.require_all_consumed();

    std::filesystem::create_directories(dir);
    write_trace_files(dir, trace, resample);
    save_controls(dir / "controls_last.csv", trace.samples.back().seq);
    std::cout << "trace: " << trace.samples.size() << " samples, " << trace.slips.size()
              << " slip(s)";
    if (!trace.stop_up.empty()) std::cout << ", up: " << trace.stop_up;
    if (!trace.stop_down.empty()) std::cout << ", down: " << trace.stop_down;
    std::cout << "\n";
    return trace.samples.size() > 1 ? kExitOk : kExitStalled;
}

/// Speed-limit extrapolation from a trace file or an inline trace run.
inline int cmd_qsl(const CliOptions& opts) {
    using namespace runner_detail;
    const Config cfg = Config::parse_file(opts.config_path);
    const double f_from = cfg.get_double("qsl.f_from", 0.9);
    if (!(f_from > 0.0) || f_from > 1.0)
        throw ConfigError("key 'qsl.f_from': must lie in (0, 1]");
    std::vector<CurvePoint> points;
    std::filesystem::path dir;
    if (cfg.has("qsl.trace_csv")) {
        const std::string path = cfg.get_string("qsl.trace_csv");
        const ModelHandle mh = build_model(cfg);  // validates the model section
        (void)mh;
        dir = resolve_out_dir(cfg, opts);
        cfg.require_all_consumed();
        const CsvTable t = read_csv(path);
        const int ct = t.column("T_seconds"), cf = t.column("F_opt"),
                  cq = t.column("Q_opt_rad_per_s");
        if (ct < 0 || cf < 0 || cq < 0)
            throw ContractViolation(path + ": missing trace columns");
        for (const auto& row : t.rows)
            points.push_back({parse_double(row[static_cast<std::size_t>(ct)]),
                              parse_double(row[static_cast<std::size_t>(cf)]),
                              parse_double(row[static_cast<std::size_t>(cq)])});
    } else {
        const ModelHandle mh = build_model(cfg);
        dir = resolve_out_dir(cfg, opts);
        const ClassTrace trace = run_trace_from_config(cfg, opts, *mh.model);
        cfg.require_all_consumed();
        points = curve_points(trace);
    }
    const auto est = extrapolate_tqsl(points, f_from);
    if (!est) {
        std::cerr << "qsl: no usable sample near F = " << format_double(f_from) << "\n";
        return kExitStalled;
    }
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "qsl.txt");
        out << "t_qsl_s = " << format_double(est->t_qsl) << "\n";
        out << "t1_s = " << format_double(est->t1) << "\n";
        out << "f1 = " << format_double(est->f1) << "\n";
        out << "q1_rad_per_s = " << format_double(est->q1) << "\n";
    }
    std::cout << "qsl: T_QSL = " << format_double(est->t_qsl) << " s (from T1 = "
              << format_double(est->t1) << " s, F1 = " << format_double(est->f1)
              << ", Q_opt = " << format_double(est->q1) << " rad/s)\n";
    return kExitOk;
}

/// Duration-preserving redistribution experiment: predicted first-order
/// distance change against the measured one, per weight choice and epsilon.
inline int cmd_redistribute_check(const CliOptions& opts) {
    using namespace runner_detail;
    const Config cfg = Config::parse_file(opts.config_path);
    const ModelHandle mh = build_model(cfg);
    const OptimizerConfig oc = optimizer_config(cfg);
    const double t0 = cfg.get_double("grid.t_total_s");
    const long segs = cfg.get_int("grid.segments", 200);
    if (!(t0 > 0.0)) throw ConfigError("key 'grid.t_total_s': must be positive");
    if (segs < 1) throw ConfigError("key 'grid.segments': must be at least 1");
    const bool optimize_first = cfg.get_bool("redistribute.optimize_first", true);
    const std::vector<double> epsilons =
        cfg.get_double_list("redistribute.epsilons", {1e-3, 1e-4});
    SplitMix64 rng(resolve_seed(cfg, opts));
    ControlSequence seq =
        build_seed(cfg, *mh.model, TimeGrid::uniform(t0, static_cast<std::size_t>(segs)), rng);
    const std::filesystem::path dir = resolve_out_dir(cfg, opts);
    cfg.require_all_consumed();

    if (optimize_first) seq = optimize(seq, *mh.model, oc).seq;
    const QuantumState psi0 = mh.model->initial_state();
    const QuantumState chiT = mh.model->target_state();
    const TrajectoryRecord rec = record_diagnostics(psi0, chiT, seq, *mh.model);
    const double d_before = distance(chiT, rec.forward.back());

    std::vector<std::pair<std::string, GridSeries>> weights;
    {
        const double mean = time_average(rec.q);
        double var = covariance(rec.q, rec.q);
        if (var < 0.0) var = 0.0;
        const double sd = std::sqrt(var);
        std::vector<double> aligned(rec.q.values.size(), 0.0);
        if (sd > 0.0)
            for (std::size_t j = 0; j < aligned.size(); ++j)
                aligned[j] = (rec.q.values[j] - mean) / sd;
        weights.emplace_back("q_aligned", GridSeries(std::move(aligned), seq.grid));
        std::vector<double> random(rec.q.values.size());
        for (double& x : random) x = rng.uniform_in(-1.0, 1.0);
        weights.emplace_back("random", GridSeries(std::move(random), seq.grid));
    }

    std::filesystem::create_directories(dir);
    CsvWriter w(dir / "redistribute.csv",
                {"nu", "epsilon", "predicted_dD_rad", "measured_dD_rad", "residual_rad"});
    for (const auto& [name, nu] : weights) {
        for (const double eps : epsilons) {
            const double predicted = -eps * seq.grid.total() * covariance(rec.q, nu);
            const ControlSequence pert = redistribute(seq, nu, eps);
            const auto fwd = propagate_forward(psi0, pert, *mh.model);
            const double measured = distance(chiT, fwd.back()) - d_before;
            w.row({name, format_double(eps), format_double(predicted),
                   format_double(measured), format_double(measured - predicted)});
        }
    }
    std::cout << "redistribute-check: " << weights.size() * epsilons.size()
              << " rows -> " << (dir / "redistribute.csv").string() << "\n";
    return kExitOk;
}

/// Maps exceptions onto the documented exit codes.
inline int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalFailure;
    }
}

}  // namespace qoc
