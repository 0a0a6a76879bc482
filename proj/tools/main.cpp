// propkit command line: one subcommand per request task. The subcommand must
// match the task named in the request file; exit codes are 0 success,
// 1 failed validation checks, 2 invalid input, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "propkit/errors.hpp"
#include "propkit/request.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "propkit: proper-time propagators of a spinless charge in constant, "
        "plane-wave, and combined electromagnetic fields"};
    app.require_subcommand(1);

    std::string request_file;
    std::string out_dir;
    int threads = 1;
    std::uint64_t seed = 0;
    bool verbose = false;

    const struct {
        const char* name;
        const char* desc;
    } tasks[] = {
        {"kernel", "proper-time kernel K(x, x'; tau), single point or sweep"},
        {"trajectory", "classical path samples as CSV"},
        {"potential", "classical-path gauge potential at evaluation points"},
        {"flux", "line integral of the classical-path potential"},
        {"green", "proper-time Green's function G(x, x')"},
        {"validate", "run the deterministic invariant suite"},
    };
    for (const auto& t : tasks) {
        CLI::App* sub = app.add_subcommand(t.name, t.desc);
        sub->add_option("--request", request_file, "request JSON file")
            ->required();
        sub->add_option("--out", out_dir,
                        "directory for relative output paths");
        sub->add_option("--threads", threads,
                        "concurrent evaluation points")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed,
                        "override the validation suite seed");
        sub->add_flag("--verbose", verbose, "progress notes on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    propkit::RunOptions opt;
    opt.out_dir = out_dir;
    opt.threads = threads;
    if (sub->count("--seed") > 0) opt.seed = seed;
    opt.verbose = verbose;

    try {
        const propkit::Request req = propkit::parse_request_file(request_file);
        if (req.task != sub->get_name()) {
            std::fprintf(stderr,
                         "propkit: request task '%s' does not match "
                         "subcommand '%s'\n",
                         req.task.c_str(), sub->get_name().c_str());
            return 2;
        }
        return propkit::run_request(req, opt);
    } catch (const propkit::InvalidInput& ex) {
        std::fprintf(stderr, "propkit: invalid input: %s\n", ex.what());
        return 2;
    } catch (const propkit::NumericalFailure& ex) {
        std::fprintf(stderr, "propkit: numerical failure: %s\n", ex.what());
        return 3;
    }
}
