#include "kovtop/cli_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv)
{
    using namespace kovtop;
    CLI::App app{"Kovalevskaya top toolkit", "kovtop"};
    app.set_version_flag("--version", tool_version());
    std::string command, config, out = ".";
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(commands()));
    app.add_option("--config", config, "JSON config file")->required();
    app.add_option("--out", out, "Output directory");
    app.add_option("--seed", seed, "Seed overriding the config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::ifstream in(config, std::ios::binary);
    if (!in) {
        std::cerr << "kovtop: cannot read config " << config << '\n';
        return 2;
    }
    std::stringstream text;
    text << in.rdbuf();

    RunConfig cfg;
    try {
        cfg = parse_config(text.str(), command, seed);
    } catch (const Error& e) {
        std::cerr << "kovtop: " << e.what() << '\n';
        return exit_code(e.code());
    }
    try {
        const RunReport rr = run(cfg, out);
        for (const auto& a : rr.artifacts) std::cout << a.string() << '\n';
        if (rr.exit_code != 0) {
            const auto& rep = rr.report;
            if (rep.contains("error")) std::cerr << "kovtop: " << rep["error"]["message"].get<std::string>() << '\n';
            else std::cerr << "kovtop: " << command << " checks failed, see " << cfg.report << '\n';
        }
        return rr.exit_code;
    } catch (const Error& e) {
        std::cerr << "kovtop: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "kovtop: " << e.what() << '\n';
        return 3;
    }
}
