#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfa/run_config.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "path to the JSON run configuration")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory (default: config 'out' field)");
    sub->add_option("--seed", args.seed, "base seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->add_option("--threads", args.threads, "worker thread count override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multifractal spectrum toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* spectrum = app.add_subcommand("spectrum", "evaluate D(alpha) over a grid");
    CLI::App* hull = app.add_subcommand("hull", "rotation set and parabolic hull geometry");
    CLI::App* moran = app.add_subcommand("moran", "build and certify a Moran schedule");
    CLI::App* check = app.add_subcommand("check", "run the numerical invariant suite");
    for (CLI::App* sub : {spectrum, hull, moran, check}) add_common(sub, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        mfa::RunConfig cfg = mfa::RunConfig::load(args.config_path);
        if (args.seed_set) cfg.doc()["seed"] = args.seed;
        if (args.threads > 0) cfg.doc()["threads"] = args.threads;
        cfg.validate();
        const std::string out = args.out_dir.empty() ? cfg.out_dir() : args.out_dir;

        if (*spectrum) return mfa::cmd_spectrum(cfg, out);
        if (*hull) return mfa::cmd_hull(cfg, out);
        if (*moran) return mfa::cmd_moran(cfg, out);
        if (*check) return mfa::cmd_check(cfg, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
