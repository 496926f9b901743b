#include "ius/errors.hpp"
#include "ius/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    double stage_timeout = 0.0;
    std::string log;
    bool on_reconstruction = false;
};

void add_common(CLI::App* sub, Options& o)
{
    sub->add_option("--config", o.config, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--stage-timeout", o.stage_timeout, "wall-clock budget per stage in seconds (0 = none)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

ius::ScenarioConfig load(const Options& o)
{
    ius::ScenarioConfig config = ius::load_scenario_config(o.config);
    if (o.seed) {
        config.seed = *o.seed;
    }
    return config;
}

int run_stage(const Options& o, ius::Command command)
{
    ius::ScenarioRunner runner(load(o), o.out, o.stage_timeout);
    const ius::ScenarioReport report = runner.run(command);
    std::cout << ius::format_report(report, runner.config());
    return report.ok() ? 0 : 1;
}

int run_report(const Options& o)
{
    const ius::ScenarioConfig config = load(o);
    const std::filesystem::path log_path = o.log.empty() ? std::filesystem::path(o.out) / "scan_log.csv" : std::filesystem::path(o.log);
    const std::string text = ius::report_from_log(ius::load_scan_log(log_path), config, !o.on_reconstruction);
    std::filesystem::create_directories(o.out);
    std::ofstream(std::filesystem::path(o.out) / "log_report.txt", std::ios::binary) << text;
    std::cout << text;
    return text.find("FAIL ") == std::string::npos ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulated robotic ultrasound scanning"};
    app.require_subcommand(1);
    Options o;
    struct Sub {
        const char* name;
        const char* help;
        std::optional<ius::Command> command;
    };
    const Sub subs[] = {
        {"localize", "fit the phantom plane from synthetic markers and solve the alignment pose", ius::Command::localize},
        {"reconstruct", "localize, then fuse orbit depth views into a surface mesh", ius::Command::reconstruct},
        {"scan", "contact and raster scan with the controller on the ground-truth chart", ius::Command::scan},
        {"pipeline", "localize, reconstruct, then scan on the reconstructed chart", ius::Command::pipeline},
        {"report", "evaluate the checks from an existing scan log", std::nullopt},
    };
    std::vector<std::pair<CLI::App*, std::optional<ius::Command>>> registered;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, o);
        if (!s.command) {
            sub->add_option("--log", o.log, "scan log (default <out>/scan_log.csv)");
            sub->add_flag("--on-reconstruction", o.on_reconstruction,
                          "the log came from a scan on a reconstructed chart");
        }
        registered.emplace_back(sub, s.command);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& [sub, command] : registered) {
            if (sub->parsed()) {
                return command ? run_stage(o, *command) : run_report(o);
            }
        }
    } catch (const ius::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
