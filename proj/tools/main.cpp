#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oselab/drivers.hpp"

namespace {

int exit_code_for(const oselab::Error& e) {
    switch (e.kind()) {
        case oselab::ErrorKind::Config: return 2;
        case oselab::ErrorKind::Certificate: return 3;
        case oselab::ErrorKind::Numerical: return 4;
    }
    return 4;
}

void write_error_json(const std::string& out_dir, const std::string& kind,
                      const std::string& message, int code) {
    try {
        std::filesystem::create_directories(out_dir);
        nlohmann::json err;
        err["error"] = kind;
        err["message"] = message;
        err["exit_code"] = code;
        std::ofstream out(out_dir + "/error.json");
        out << err.dump(1) << "\n";
    } catch (...) {
        // The error report is best effort; the exit code carries the verdict.
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oselab: cocycle splitting, regularity and distance-bound pipelines"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string scenario_path;
    std::string out_dir;
    long seed_override = -1;
    int threads = 1;
    bool single_thread = false;

    app.add_option("--scenario", scenario_path, "scenario config file")->required();
    app.add_option("--out", out_dir, "output directory (default: env OSELAB_OUT or scenario)");
    app.add_option("--seed", seed_override, "override the scenario seed");
    app.add_option("--threads", threads, "worker count (default 1)");
    app.add_flag("--single-thread", single_thread, "force one worker for bit-exact debugging");

    auto* sub_spectrum = app.add_subcommand("spectrum", "per-point growth rate table");
    auto* sub_splitting = app.add_subcommand("splitting", "invariant splittings with certificates");
    auto* sub_regular = app.add_subcommand("regular-set", "regularity functions and the level set");
    auto* sub_verify = app.add_subcommand("verify", "pairwise distance bounds and exponent fits");
    auto* sub_filtration = app.add_subcommand("filtration", "forward filtration pipeline");
    auto* sub_lemma = app.add_subcommand("lemma-lab", "synthetic perturbation-bound instances");

    CLI11_PARSE(app, argc, argv);

    try {
        oselab::Scenario scenario = oselab::Scenario::load(scenario_path);
        if (seed_override >= 0) scenario.seed = static_cast<std::uint64_t>(seed_override);
        if (out_dir.empty()) {
            const char* env = std::getenv("OSELAB_OUT");
            out_dir = env && *env ? std::string(env) + "/" + scenario.name : scenario.out_dir;
        }
        if (single_thread) threads = 1;
        if (threads < 1) threads = 1;

        oselab::RunResult result;
        if (sub_spectrum->parsed()) result = oselab::run_spectrum(scenario, out_dir, threads);
        if (sub_splitting->parsed()) result = oselab::run_splitting(scenario, out_dir, threads);
        if (sub_regular->parsed()) result = oselab::run_regular_set(scenario, out_dir, threads);
        if (sub_verify->parsed()) result = oselab::run_verify(scenario, out_dir, threads);
        if (sub_filtration->parsed()) result = oselab::run_filtration(scenario, out_dir, threads);
        if (sub_lemma->parsed()) result = oselab::run_lemma_lab(scenario, out_dir, threads);

        for (const auto& f : result.files) std::cout << out_dir << "/" << f << "\n";
        if (result.exit_code != 0)
            std::cerr << "certificate failure: see " << out_dir << " reports\n";
        return result.exit_code;
    } catch (const oselab::Error& e) {
        int code = exit_code_for(e);
        std::cerr << "error: " << e.what() << "\n";
        if (!out_dir.empty()) write_error_json(out_dir, "oselab", e.what(), code);
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!out_dir.empty()) write_error_json(out_dir, "unexpected", e.what(), 4);
        return 4;
    }
}
