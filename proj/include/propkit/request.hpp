#pragma once

// Batch request layer behind the CLI. A request file is UTF-8 JSON with
// top-level keys field, particle, evaluation, task, numerics, output; it is
// schema-checked before any computation, dispatched to the library, and the
// results are written atomically (temp file + rename). Complex outputs are
// always {"re": ..., "im": ...}; CSV uses RFC-4180 quoting with '.' decimal
// separator. Identical request and numerics blocks produce byte-identical
// output files apart from the timings entry.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "propkit/fields.hpp"
#include "propkit/kernels.hpp"

namespace propkit {

// Sweep of one evaluation axis: proper time or one coordinate of x.
struct SweepAxis {
    int coordinate = -1; // -1 sweeps tau, 0..3 sweeps x[coordinate]
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
};

struct Request {
    FieldConfig field;
    ParticleParams particle{1.0, -1.0};
    FourVector x, xp;
    double tau = 0.0;
    std::optional<SweepAxis> sweep;
    std::string task;           // kernel | trajectory | potential | flux |
                                // green | validate
    std::string flux_curve;     // straight | classical
    int samples = 200;          // trajectory rows
    double tol = 1e-10;
    double fd_step = -1.0;      // <= 0 picks the library default
    std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025, 0.0125};
    double tau_max = 200.0;
    std::uint64_t seed = 42;    // validate instances
    std::string out_path;       // relative paths resolve against --out
    std::string format;         // json | csv | text
    std::string canonical;      // normalized re-serialization of the input
};

// Parse and schema-check a request. Throws InvalidInput naming the offending
// field (or the byte position for malformed JSON). Parsing the canonical
// form yields the same canonical form.
Request parse_request(const std::string& json_text);
Request parse_request_file(const std::string& path);

// FNV-1a hash of the canonical request text, the echo key of every result.
std::uint64_t request_hash(const Request& req);

struct RunOptions {
    std::string out_dir;              // prefix for relative output paths
    int threads = 1;                  // grid points computed concurrently
    std::optional<std::uint64_t> seed; // overrides the request seed
    bool verbose = false;
};

// Dispatch one request: computes the task, writes the output file, returns
// the process exit code (0 success, 1 failed validation checks, 2 invalid
// input, 3 numerical failure). Library errors are rewritten as an error
// payload in the output file with the message verbatim; output ordering
// follows the request grid order regardless of completion order.
int run_request(const Request& req, const RunOptions& opt);

// Convenience wrapper: parse_request_file + run_request with the same error
// mapping (a file that fails to parse still exits 2).
int run(const std::string& request_file, const RunOptions& opt);

// Plot data for a 1D sweep: header parameter,re,im,abs,phase with the phase
// unwrapped through the prefactor branch indices. Sizes must match; an empty
// sweep yields the header only.
std::string emit_plotdata(const std::vector<double>& parameter,
                          const std::vector<KernelResult>& values);

// Trajectory table: header sigma,y0,y1,y2,y3,dy0,dy1,dy2,dy3 with rows at
// sigma = tau * i / (samples - 1), so the endpoint rows are exactly x', x.
std::string emit_trajectory_csv(const WorldlinePath& path, int samples);

// Default tolerance: the PROPKIT_TOL environment variable when set (must
// parse as a positive double), otherwise 1e-10. A numerics.tol entry in the
// request takes precedence over both.
double default_tolerance();

} // namespace propkit
