#include "fkd/errors.hpp"
#include "fkd/experiment.hpp"
#include "fkd/serialization.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

const char* error_name(const fkd::Error& e) {
    if (dynamic_cast<const fkd::ExperimentError*>(&e)) return "experiment_error";
    if (dynamic_cast<const fkd::ValidationError*>(&e)) return "validation_error";
    if (dynamic_cast<const fkd::DegenerateAttributeError*>(&e)) return "degenerate_attribute";
    if (dynamic_cast<const fkd::CollinearityError*>(&e)) return "collinearity";
    if (dynamic_cast<const fkd::LandmarkError*>(&e)) return "landmark_error";
    if (dynamic_cast<const fkd::ConvexityError*>(&e)) return "convexity_error";
    if (dynamic_cast<const fkd::ConvergenceError*>(&e)) return "convergence_error";
    if (dynamic_cast<const fkd::IoError*>(&e)) return "io_error";
    return "error";
}

void print_error_json(const json& body) { std::cerr << body.dump() << std::endl; }

void write_runtime_sidecar(const std::filesystem::path& dir,
                           const std::vector<fkd::PhaseRuntimes>& runs) {
    json doc;
    json entries = json::array();
    for (const auto& r : runs) {
        entries.push_back({{"load_ms", r.load_ms},
                           {"kernel_ms", r.kernel_ms},
                           {"decompose_ms", r.decompose_ms},
                           {"fit_ms", r.fit_ms},
                           {"predict_ms", r.predict_ms},
                           {"score_ms", r.score_ms},
                           {"total_ms", r.total_ms}});
    }
    doc["runs"] = entries;
    std::ofstream out(dir / "runtime.json", std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
}

void print_aggregates(const fkd::ExperimentResult& result) {
    for (const auto& row : result.aggregates) {
        std::cout << "m=" << row.m;
        for (const auto& [name, summary] : row.metrics) {
            std::cout << "  " << name << "=" << summary.mean << "(" << summary.std_dev << ")";
        }
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-validated fairness/accuracy experiments over kernel decompositions"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> thread_override;
    std::vector<double> sweep_values;
    std::string transform_path;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON experiment config file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--output", output_dir, "Output directory, overrides config output_path");
        cmd->add_option("--seed", seed_override, "Override the cross-validation seed");
        cmd->add_option("--threads", thread_override, "Worker threads for the fold loop");
    };

    CLI::App* run_cmd =
        app.add_subcommand("run", "Run the cross-validated experiment over the configured "
                                  "iteration counts");
    add_common(run_cmd);

    CLI::App* alpha_cmd = app.add_subcommand(
        "sweep-alpha", "Repeat the experiment across direction-fit regularization values");
    add_common(alpha_cmd);
    alpha_cmd->add_option("--values", sweep_values,
                          "Regularization values; falls back to sweep.alpha_values in the config");

    CLI::App* nystroem_cmd = app.add_subcommand(
        "sweep-nystroem",
        "Repeat the experiment across landmark fractions plus an exact-inverse reference");
    add_common(nystroem_cmd);
    nystroem_cmd->add_option("--values", sweep_values,
                             "Landmark fractions in (0, 1]; falls back to sweep.fractions "
                             "in the config");

    CLI::App* inspect_cmd =
        app.add_subcommand("inspect-transform", "Print a container file summary as JSON");
    inspect_cmd->add_option("file", transform_path, "Container file to inspect")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json({{"error", "cli_parse_error"}, {"message", e.what()}});
        const int code = app.exit(e, std::cout, std::cerr);
        return code == 0 ? 1 : code;
    }

    try {
        if (inspect_cmd->parsed()) {
            json summary = fkd::read_container_header(transform_path);
            if (summary.value("type", "") == "fair_transform") {
                const fkd::FairTransform transform = fkd::load_transform(transform_path);
                summary["frobenius_norm"] = transform.matrix().norm();
                summary["payload_ok"] = true;
            }
            std::cout << summary.dump(2) << std::endl;
            return 0;
        }

        fkd::ExperimentConfig config = fkd::load_config(config_path);
        if (seed_override) config.cv.seed = *seed_override;
        if (thread_override) config.threads = *thread_override;
        if (!output_dir.empty()) config.output_path = output_dir;
        if (config.output_path.empty()) config.output_path = ".";
        const std::filesystem::path out_dir(config.output_path);

        if (run_cmd->parsed()) {
            const fkd::ExperimentResult result = fkd::run_experiment(config);
            fkd::emit_results(result, out_dir.string());
            write_runtime_sidecar(out_dir, {result.runtime});
            print_aggregates(result);
            std::cout << "wrote " << (out_dir / "results.json").string() << " and "
                      << (out_dir / "results.csv").string() << "\n";
        } else if (alpha_cmd->parsed()) {
            const std::vector<double>& values =
                sweep_values.empty() ? config.sweep_alpha_values : sweep_values;
            if (values.empty()) {
                throw fkd::ValidationError(
                    "no sweep values: pass --values or set sweep.alpha_values in the config");
            }
            const fkd::AlphaSweepResult sweep = fkd::sweep_alpha_tilde(config, values);
            fkd::emit_alpha_sweep(sweep, out_dir.string());
            std::vector<fkd::PhaseRuntimes> runtimes;
            for (const auto& run : sweep.runs) runtimes.push_back(run.runtime);
            write_runtime_sidecar(out_dir, runtimes);
            std::cout << "wrote " << (out_dir / "sweep_alpha.json").string() << " and "
                      << (out_dir / "sweep_alpha.csv").string() << "\n";
        } else if (nystroem_cmd->parsed()) {
            const std::vector<double>& values =
                sweep_values.empty() ? config.sweep_fractions : sweep_values;
            if (values.empty()) {
                throw fkd::ValidationError(
                    "no sweep values: pass --values or set sweep.fractions in the config");
            }
            const fkd::NystroemSweepResult sweep = fkd::sweep_nystroem(config, values);
            fkd::emit_nystroem_sweep(sweep, out_dir.string());
            std::vector<fkd::PhaseRuntimes> runtimes;
            runtimes.push_back(sweep.exact.runtime);
            for (const auto& run : sweep.runs) runtimes.push_back(run.runtime);
            write_runtime_sidecar(out_dir, runtimes);
            std::cout << "wrote " << (out_dir / "sweep_nystroem.json").string() << " and "
                      << (out_dir / "sweep_nystroem.csv").string() << "\n";
        }
        return 0;
    } catch (const fkd::ExperimentError& e) {
        json body = {{"error", error_name(e)}, {"message", e.what()}, {"fold", e.fold()}};
        if (e.m() >= 0) {
            body["m"] = e.m();
        } else {
            body["m"] = nullptr;
        }
        print_error_json(body);
        return 1;
    } catch (const fkd::Error& e) {
        print_error_json({{"error", error_name(e)}, {"message", e.what()}});
        return 1;
    } catch (const std::exception& e) {
        print_error_json({{"error", "internal_error"}, {"message", e.what()}});
        return 1;
    }
}
