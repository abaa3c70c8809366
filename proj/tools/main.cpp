#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "horizonsim/report.hpp"
#include "horizonsim/scenario.hpp"
#include "horizonsim/sim.hpp"

namespace {

constexpr int kExitParse = 64;

int verdict_exit_code(horizonsim::Verdict v) {
    switch (v) {
        case horizonsim::Verdict::Completed: return 0;
        case horizonsim::Verdict::Deadlock: return 2;
        case horizonsim::Verdict::BudgetExhausted: return 3;
    }
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

horizonsim::ScenarioPlan make_pattern(const std::string& pattern, std::uint32_t procs,
                                      std::uint32_t group_size) {
    if (pattern == "ep") return horizonsim::gen_ep_like(procs, group_size);
    if (pattern == "dt") return horizonsim::gen_dt_like(procs);
    throw horizonsim::InvalidScenario("unknown pattern: " + pattern);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace horizonsim;

    CLI::App app{"deterministic simulator for fault-aware MPI session initialisation"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "execute one scenario and report the outcome");
    std::string scenario_path, run_mode, run_format = "human", run_out;
    std::uint64_t seed = 0, max_events = 1'000'000;
    run_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
    run_cmd->add_option("--mode", run_mode, "none|naive|horizon (default: scenario's mode)");
    run_cmd->add_option("--seed", seed, "seed recorded in the report");
    run_cmd->add_option("--max-events", max_events, "event budget before giving up");
    run_cmd->add_option("--format", run_format, "human|machine")
        ->check(CLI::IsMember({"human", "machine"}));
    run_cmd->add_option("--out", run_out, "write the report here instead of stdout");

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "generate a workload scenario file");
    std::string pattern = "ep", gen_out;
    std::uint32_t procs = 8, group_size = 4;
    gen_cmd->add_option("--pattern", pattern, "ep|dt")->check(CLI::IsMember({"ep", "dt"}));
    gen_cmd->add_option("--procs", procs, "process count")->required();
    gen_cmd->add_option("--group-size", group_size, "creation group size (ep)");
    gen_cmd->add_option("--out", gen_out, "output path")->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run a pattern across sizes and modes");
    std::string sweep_pattern = "ep", sweep_procs = "8,16,32,64", sweep_format = "machine";
    std::string sweep_out;
    std::uint32_t sweep_group = 4;
    std::uint64_t sweep_seed = 0, sweep_budget = 1'000'000;
    sweep_cmd->add_option("--pattern", sweep_pattern, "ep|dt")
        ->check(CLI::IsMember({"ep", "dt"}));
    sweep_cmd->add_option("--procs", sweep_procs, "comma-separated sizes");
    sweep_cmd->add_option("--group-size", sweep_group, "creation group size (ep)");
    sweep_cmd->add_option("--format", sweep_format, "human|machine")
        ->check(CLI::IsMember({"human", "machine"}));
    sweep_cmd->add_option("--seed", sweep_seed, "seed recorded in the reports");
    sweep_cmd->add_option("--max-events", sweep_budget, "event budget per run");
    sweep_cmd->add_option("--out", sweep_out, "output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            ScenarioPlan plan = parse_scenario(read_file(scenario_path));
            FtMode mode = run_mode.empty() ? plan.mode : ft_mode_from_string(run_mode);
            RunReport report = run_scenario(plan, mode, seed, max_events);
            write_output(run_out, emit_report(report, run_format == "machine"
                                                          ? ReportFormat::Machine
                                                          : ReportFormat::Human));
            return verdict_exit_code(report.verdict);
        }

        if (gen_cmd->parsed()) {
            ScenarioPlan plan = make_pattern(pattern, procs, group_size);
            write_output(gen_out, serialize_scenario(plan));
            return 0;
        }

        // sweep: one report per (size, mode)
        std::vector<std::uint32_t> sizes;
        for (std::stringstream ss(sweep_procs); ss.good();) {
            std::string tok;
            std::getline(ss, tok, ',');
            if (!tok.empty()) sizes.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        }
        if (sizes.empty()) throw InvalidScenario("sweep needs at least one size");

        int exit_code = 0;
        std::ostringstream out;
        std::ostringstream human;
        bool machine = sweep_format == "machine";
        if (machine) out << "[\n";
        bool first = true;
        for (std::uint32_t n : sizes) {
            ScenarioPlan plan = make_pattern(sweep_pattern, n, sweep_group);
            for (FtMode mode : {FtMode::None, FtMode::Naive, FtMode::Horizon}) {
                RunReport report = run_scenario(plan, mode, sweep_seed, sweep_budget);
                if (machine) {
                    if (!first) out << ",\n";
                    out << emit_report(report, ReportFormat::Machine);
                } else {
                    human << "n=" << n << " mode=" << to_string(mode)
                          << " verdict=" << to_string(report.verdict)
                          << " messages=" << report.messages.total()
                          << " (creation=" << report.messages.creation
                          << " lda=" << report.messages.lda
                          << " naive_world_setup=" << report.messages.naive_world_setup
                          << " workload=" << report.messages.workload
                          << " revoke_agree=" << report.messages.revoke_agree << ")\n";
                }
                first = false;
                exit_code = std::max(exit_code, verdict_exit_code(report.verdict));
            }
        }
        if (machine) out << "]\n";
        write_output(sweep_out, machine ? out.str() : human.str());
        return exit_code;
    } catch (const ParseError& e) {
        std::cerr << "scenario parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const InvalidScenario& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
