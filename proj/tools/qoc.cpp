#include <cstdint>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "qoc/runner.hpp"

namespace {

void add_common(CLI::App* cmd, qoc::CliOptions& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "Output directory (defaults to output.dir)");
    cmd->add_option("--seed", opts.seed, "RNG seed override (defaults to run.seed)");
    cmd->add_option("--threads", opts.threads, "Worker threads, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum optimal control on the projective-space geometry"};
    app.require_subcommand(1);

    qoc::CliOptions opts;
    std::function<int()> body;

    auto* evolve = app.add_subcommand("evolve", "Constant-control scan over durations");
    add_common(evolve, opts);
    evolve->callback([&] { body = [&] { return qoc::cmd_evolve(opts); }; });

    auto* optimize = app.add_subcommand("optimize", "Optimize controls at a fixed duration");
    add_common(optimize, opts);
    optimize->callback([&] { body = [&] { return qoc::cmd_optimize(opts); }; });

    auto* trace = app.add_subcommand("trace", "Trace an optimum class along the trade-off curve");
    add_common(trace, opts);
    trace->callback([&] { body = [&] { return qoc::cmd_trace(opts); }; });

    auto* qsl = app.add_subcommand("qsl", "Extrapolate the speed-limit duration");
    add_common(qsl, opts);
    qsl->callback([&] { body = [&] { return qoc::cmd_qsl(opts); }; });

    auto* redis = app.add_subcommand("redistribute-check",
                                     "First-order check of duration redistribution");
    add_common(redis, opts);
    redis->callback([&] { body = [&] { return qoc::cmd_redistribute_check(opts); }; });

    CLI11_PARSE(app, argc, argv);
    return qoc::run_guarded(body);
}
