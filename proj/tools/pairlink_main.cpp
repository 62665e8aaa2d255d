#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pairlink/config.hpp"
#include "pairlink/errors.hpp"
#include "pairlink/pipeline.hpp"

namespace {

using namespace pairlink;

std::filesystem::path resolve_out_dir(const std::string& flag_value,
                                      const std::string& config_value)
{
    if (!flag_value.empty())
        return flag_value;
    if (!config_value.empty())
        return config_value;
    if (const char* env = std::getenv("PAIRLINK_OUT_DIR"); env && *env)
        return env;
    return "pairlink_out";
}

struct AnalysisOverrides {
    std::optional<int64_t> bin_width_ps;
    std::optional<int64_t> range_ps;
    std::optional<int64_t> window_ps;
    std::optional<std::string> center; // "auto" or a fixed delay in ps
    std::optional<double> threshold_sigma;

    bool any() const
    {
        return bin_width_ps || range_ps || window_ps || center
            || threshold_sigma;
    }

    void apply(AnalysisParams& params) const
    {
        if (bin_width_ps)
            params.bin_width_ps = *bin_width_ps;
        if (range_ps)
            params.range_ps = *range_ps;
        if (window_ps)
            params.window_ps = *window_ps;
        if (center) {
            if (*center == "auto") {
                params.center_policy = CenterDelayPolicy::Auto;
            } else {
                params.center_policy = CenterDelayPolicy::Fixed;
                params.center_delay_ps = std::stoll(*center);
            }
        }
        if (threshold_sigma)
            params.peak_threshold_sigma = *threshold_sigma;
    }
};

void print_presets(const std::string& name)
{
    if (name.empty()) {
        std::cout << "experiment presets:\n";
        for (const auto& preset : experiment_preset_names())
            std::cout << "  " << preset << '\n';
        std::cout << "budget presets:\n";
        for (const auto& preset : budget_preset_names())
            std::cout << "  " << preset << '\n';
        return;
    }
    for (const auto& preset : experiment_preset_names()) {
        if (preset == name) {
            std::cout << serialize_experiment_config(experiment_preset(name));
            return;
        }
    }
    for (const auto& preset : budget_preset_names()) {
        if (preset == name) {
            std::cout << serialize_budget_config(budget_preset(name));
            return;
        }
    }
    throw ConfigError("unknown preset '" + name + "'");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "pairlink: entangled photon-pair fiber link simulator "
                   "and time-tag analyzer" };
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir, format_name = "bin";
    std::optional<uint64_t> seed;

    auto* simulate = app.add_subcommand(
        "simulate", "run a seeded experiment and write tag files + manifest");
    simulate->add_option("--config", config_path, "experiment config file");
    simulate->add_option("--preset", preset_name, "experiment preset name");
    simulate->add_option("--seed", seed, "override the config seed");
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--format", format_name, "tag file format (bin|csv)")
        ->check(CLI::IsMember({ "bin", "csv" }));

    std::string manifest_path, tags_a, tags_b;
    double duration_hint = 0.0;
    AnalysisOverrides overrides;
    std::string center_value;
    auto* analyze = app.add_subcommand(
        "analyze", "reconstruct histogram, peaks, rates and visibility from tags");
    analyze->add_option("--manifest", manifest_path,
                        "manifest written by simulate");
    analyze->add_option("--tags-a", tags_a, "bare channel-A tag file");
    analyze->add_option("--tags-b", tags_b, "bare channel-B tag file");
    analyze->add_option("--format", format_name, "tag file format (bin|csv)")
        ->check(CLI::IsMember({ "bin", "csv" }));
    analyze->add_option("--duration-s", duration_hint,
                        "acquisition duration of bare tag files");
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--bin-width-ps", overrides.bin_width_ps,
                        "histogram bin width");
    analyze->add_option("--range-ps", overrides.range_ps,
                        "histogram half range");
    analyze->add_option("--window-ps", overrides.window_ps,
                        "coincidence window");
    analyze->add_option("--center-ps", center_value,
                        "coincidence window center ('auto' or ps)");
    analyze->add_option("--threshold-sigma", overrides.threshold_sigma,
                        "peak threshold in floor sigmas");

    bool calibrate = false;
    auto* budget = app.add_subcommand(
        "budget", "tabulate analytic pair-rate curves and crossover markers");
    budget->add_option("--config", config_path, "budget config file");
    budget->add_option("--preset", preset_name, "budget preset name");
    budget->add_option("--out", out_dir, "output directory");
    budget->add_flag("--calibrate", calibrate,
                     "solve fixed losses against the configured targets");

    std::string preset_to_show;
    auto* presets = app.add_subcommand("presets", "list or print presets");
    presets->add_option("name", preset_to_show, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (simulate->parsed()) {
            ExperimentConfig config;
            if (!config_path.empty())
                config = load_experiment_config(config_path);
            else if (!preset_name.empty())
                config = experiment_preset(preset_name);
            else
                throw ConfigError("simulate needs --config or --preset");
            if (seed)
                config.seed = *seed;
            config.validate();
            const auto dir = resolve_out_dir(out_dir, config.output_dir);
            const auto result = run_simulate(config, dir,
                                             tag_format_from_string(format_name));
            std::cout << "wrote " << result.tag_files.size()
                      << " tag files and " << result.manifest_path.string()
                      << '\n';
            return 0;
        }

        if (analyze->parsed()) {
            if (!center_value.empty())
                overrides.center = center_value;
            const auto dir = resolve_out_dir(out_dir, "");
            AnalyzeOutput result;
            if (!manifest_path.empty()) {
                std::optional<AnalysisParams> params;
                if (overrides.any()) {
                    AnalysisParams merged
                        = load_manifest(manifest_path).config.analysis;
                    overrides.apply(merged);
                    params = merged;
                }
                result = run_analyze(manifest_path, params, dir);
            } else if (!tags_a.empty() && !tags_b.empty()) {
                AnalysisParams params;
                overrides.apply(params);
                result = run_analyze_pair(tags_a, tags_b,
                                          tag_format_from_string(format_name),
                                          params, duration_hint, dir);
            } else {
                throw ConfigError(
                    "analyze needs --manifest or both --tags-a and --tags-b");
            }
            for (const auto& file : result.files)
                std::cout << "wrote " << file.string() << '\n';
            if (result.result.degenerate) {
                std::cerr << "analysis degenerate (undefined visibility or "
                             "empty input)\n";
                return 4;
            }
            return 0;
        }

        if (budget->parsed()) {
            BudgetConfig config;
            if (!config_path.empty())
                config = load_budget_config(config_path);
            else if (!preset_name.empty())
                config = budget_preset(preset_name);
            else
                throw ConfigError("budget needs --config or --preset");
            const auto dir = resolve_out_dir(out_dir, "");
            const auto result = run_budget(config, dir, calibrate);
            for (const auto& file : result.files)
                std::cout << "wrote " << file.string() << '\n';
            for (const auto& marker : result.curve.markers) {
                std::cout << "crossover " << marker.system_a << " vs "
                          << marker.system_b << ": ";
                if (marker.length_km)
                    std::cout << format_double(*marker.length_km) << " km\n";
                else
                    std::cout << "none\n";
            }
            return 0;
        }

        if (presets->parsed()) {
            print_presets(preset_to_show);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const OutOfCalibrationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
