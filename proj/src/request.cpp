#include "propkit/request.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "propkit/errors.hpp"
#include "propkit/gauge.hpp"
#include "propkit/trajectories.hpp"
#include "propkit/validation.hpp"

namespace propkit {

namespace {

using json = nlohmann::json;          // sorted keys; canonical request form
using ojson = nlohmann::ordered_json; // insertion order; result files

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw InvalidInput("request field '" + where + "': " + what);
}

const json& need(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) bad(where + "." + key, "missing");
    return *it;
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(where, "must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || item.key() == k;
        if (!ok) bad(where + "." + item.key(), "unknown key");
    }
}

double as_num(const json& v, const std::string& where) {
    if (!v.is_number()) bad(where, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(where, "must be finite");
    return d;
}

double as_pos(const json& v, const std::string& where) {
    const double d = as_num(v, where);
    if (!(d > 0.0)) bad(where, "must be positive");
    return d;
}

int as_count(const json& v, const std::string& where) {
    if (!v.is_number_integer()) bad(where, "must be an integer");
    const auto n = v.get<std::int64_t>();
    if (n < 0 || n > 2000000) bad(where, "must be in [0, 2000000]");
    return static_cast<int>(n);
}

std::string as_str(const json& v, const std::string& where) {
    if (!v.is_string()) bad(where, "must be a string");
    return v.get<std::string>();
}

FourVector as_vec4(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 4) bad(where, "must be a 4-array");
    FourVector out;
    for (int i = 0; i < 4; ++i) out[i] = as_num(v[i], where);
    return out;
}

std::array<double, 3> as_vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) bad(where, "must be a 3-array");
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = as_num(v[i], where);
    return out;
}

json vec_json(const FourVector& v) {
    return json::array({v[0], v[1], v[2], v[3]});
}

// Profile parse with a normalized echo for the canonical form.
WaveProfile parse_profile(const json& pj, const std::string& where,
                          json& echo) {
    check_keys(pj, where, {"kind", "E0", "omega", "phi0", "width", "path"});
    const std::string kind = as_str(need(pj, "kind", where), where + ".kind");
    echo["kind"] = kind;
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (find(pj, k)) bad(where + "." + k, "not used by kind " + kind);
    };
    if (kind == "zero") {
        forbid({"E0", "omega", "phi0", "width", "path"});
        return WaveProfile();
    }
    if (kind == "linear") {
        forbid({"omega", "phi0", "width", "path"});
        const double E0 = as_num(need(pj, "E0", where), where + ".E0");
        echo["E0"] = E0;
        return WaveProfile::linear(E0);
    }
    if (kind == "sinusoidal") {
        forbid({"width", "path"});
        const double E0 = as_num(need(pj, "E0", where), where + ".E0");
        const double om = as_pos(need(pj, "omega", where), where + ".omega");
        const json* p0 = find(pj, "phi0");
        const double phi0 = p0 ? as_num(*p0, where + ".phi0") : 0.0;
        echo["E0"] = E0;
        echo["omega"] = om;
        echo["phi0"] = phi0;
        return WaveProfile::sinusoidal(E0, om, phi0);
    }
    if (kind == "gaussian_pulse") {
        forbid({"phi0", "path"});
        const double E0 = as_num(need(pj, "E0", where), where + ".E0");
        const double om = as_pos(need(pj, "omega", where), where + ".omega");
        const double w = as_pos(need(pj, "width", where), where + ".width");
        echo["E0"] = E0;
        echo["omega"] = om;
        echo["width"] = w;
        return WaveProfile::gaussian_pulse(E0, om, w);
    }
    if (kind == "tabulated") {
        forbid({"E0", "omega", "phi0", "width"});
        const std::string path =
            as_str(need(pj, "path", where), where + ".path");
        echo["path"] = path;
        return WaveProfile::tabulated_csv(path);
    }
    bad(where + ".kind",
        "must be zero | linear | sinusoidal | gaussian_pulse | tabulated");
}

FieldConfig parse_field(const json& fj, json& echo) {
    check_keys(fj, "field", {"type", "E", "B", "k", "eps", "profile"});
    const std::string type = as_str(need(fj, "type", "field"), "field.type");
    echo["type"] = type;
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (find(fj, k)) bad(std::string("field.") + k,
                                 "not used by type " + type);
    };
    if (type == "free") {
        forbid({"E", "B", "k", "eps", "profile"});
        return ConstantUniform{FieldTensor{}};
    }
    if (type == "constant") {
        forbid({"k", "eps", "profile"});
        const auto E = as_vec3(need(fj, "E", "field"), "field.E");
        const auto B = as_vec3(need(fj, "B", "field"), "field.B");
        echo["E"] = E;
        echo["B"] = B;
        return ConstantUniform{constant_from_EB(E, B)};
    }
    if (type == "plane_wave" || type == "combined") {
        const FourVector k = as_vec4(need(fj, "k", "field"), "field.k");
        const FourVector eps =
            as_vec4(need(fj, "eps", "field"), "field.eps");
        lightcone_basis(k, eps); // validates k.k = 0, eps unit, k.eps = 0
        json pecho;
        const WaveProfile wave = parse_profile(
            need(fj, "profile", "field"), "field.profile", pecho);
        echo["k"] = vec_json(k);
        echo["eps"] = vec_json(eps);
        echo["profile"] = pecho;
        const PlaneWaveProfile prof{k, eps, wave};
        if (type == "plane_wave") {
            forbid({"E", "B"});
            return PlaneWave{prof};
        }
        const auto E = as_vec3(need(fj, "E", "field"), "field.E");
        const auto B = as_vec3(need(fj, "B", "field"), "field.B");
        echo["E"] = E;
        echo["B"] = B;
        return make_combined(constant_from_EB(E, B), prof);
    }
    bad("field.type", "must be free | constant | plane_wave | combined");
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("output path not writable: " +
                                     path.string());
        out << text;
        if (!out.good())
            throw InvalidInput("write failed: " + path.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw InvalidInput("rename failed: " + path.string() + ": " +
                           ec.message());
}

std::filesystem::path resolve_out(const Request& req, const RunOptions& opt) {
    std::filesystem::path p = req.out_path;
    if (p.is_relative() && !opt.out_dir.empty())
        p = std::filesystem::path(opt.out_dir) / p;
    return p;
}

// Index-ordered parallel map; the lowest-index exception wins so failures
// are independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> bail{false};
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n || bail.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    errs[static_cast<std::size_t>(i)] =
                        std::current_exception();
                    bail.store(true);
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

ojson cnum(num::cplx z) {
    ojson o;
    o["re"] = z.real();
    o["im"] = z.imag();
    return o;
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// Sweep values in request grid order.
std::vector<double> sweep_values(const Request& req) {
    if (!req.sweep) return {req.tau};
    const SweepAxis& s = *req.sweep;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(s.count));
    for (int i = 0; i < s.count; ++i)
        out.push_back(s.count == 1
                          ? s.start
                          : s.start + (s.stop - s.start) * i / (s.count - 1));
    return out;
}

double unwrapped_phase(const KernelResult& k) {
    const double half_turns = kPi * k.branch_index;
    const num::cplx rotated =
        k.prefactor * std::exp(num::cplx(0.0, -half_turns));
    return half_turns + std::arg(rotated) + k.phase_exponent.imag();
}

struct TaskOutput {
    std::string text;
    int exit_code = 0;
};

TaskOutput run_kernel(const Request& req, const RunOptions& opt) {
    const std::vector<double> params = sweep_values(req);
    const int n = static_cast<int>(params.size());
    std::vector<KernelResult> results(static_cast<std::size_t>(n));
    std::vector<FourVector> xs(static_cast<std::size_t>(n), req.x);
    std::vector<double> taus(static_cast<std::size_t>(n), req.tau);
    for (int i = 0; i < n; ++i) {
        if (req.sweep && req.sweep->coordinate >= 0)
            xs[static_cast<std::size_t>(i)][req.sweep->coordinate] =
                params[static_cast<std::size_t>(i)];
        else
            taus[static_cast<std::size_t>(i)] =
                params[static_cast<std::size_t>(i)];
    }
    // An explicit fd_step only matters for the combined FD prefactor.
    const auto* cb = std::get_if<Combined>(&req.field);
    parallel_for(n, opt.threads, [&](int i) {
        const auto u = static_cast<std::size_t>(i);
        results[u] =
            cb && req.fd_step > 0.0
                ? kernel_combined(*cb, req.particle, xs[u], req.xp, taus[u],
                                  req.fd_step, req.tol)
                : kernel_for(req.field, req.particle, xs[u], req.xp, taus[u],
                             req.tol);
    });
    if (req.format == "csv") return {emit_plotdata(params, results), 0};
    ojson out;
    out["request_hash"] = hash_hex(request_hash(req));
    out["task"] = "kernel";
    ojson pts = ojson::array();
    for (int i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        ojson p;
        p["parameter"] = params[u];
        p["tau"] = taus[u];
        p["x"] = {xs[u][0], xs[u][1], xs[u][2], xs[u][3]};
        p["amplitude"] = cnum(results[u].amplitude);
        p["prefactor"] = cnum(results[u].prefactor);
        p["phase_exponent"] = cnum(results[u].phase_exponent);
        p["branch_index"] = results[u].branch_index;
        p["config_tag"] = results[u].config_tag;
        pts.push_back(std::move(p));
    }
    out["points"] = std::move(pts);
    return {out.dump(2) + "\n", 0};
}

TaskOutput run_trajectory(const Request& req) {
    const WorldlinePath path =
        classical_path(req.field, req.particle, req.x, req.xp, req.tau);
    return {emit_trajectory_csv(path, req.samples), 0};
}

TaskOutput run_potential(const Request& req, const RunOptions& opt) {
    const ClassicalPathGauge fam =
        classical_family(req.field, req.particle, req.xp, req.tau);
    const GaugePath gp = fam;
    const std::vector<double> params = sweep_values(req);
    const int n = static_cast<int>(params.size());
    std::vector<FourVector> xs(static_cast<std::size_t>(n), req.x);
    if (req.sweep)
        for (int i = 0; i < n; ++i)
            xs[static_cast<std::size_t>(i)][req.sweep->coordinate] =
                params[static_cast<std::size_t>(i)];
    std::vector<FourVector> pots(static_cast<std::size_t>(n));
    parallel_for(n, opt.threads, [&](int i) {
        const auto u = static_cast<std::size_t>(i);
        pots[u] = potential_from_path(req.field, gp, xs[u], req.tol);
    });
    if (req.format == "csv") {
        std::ostringstream out;
        out << "parameter,A0,A1,A2,A3\n";
        for (int i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            out << fmt17(params[u]);
            for (int mu = 0; mu < 4; ++mu) out << ',' << fmt17(pots[u][mu]);
            out << '\n';
        }
        return {out.str(), 0};
    }
    ojson out;
    out["request_hash"] = hash_hex(request_hash(req));
    out["task"] = "potential";
    out["tau"] = req.tau;
    ojson pts = ojson::array();
    for (int i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        ojson p;
        p["parameter"] = params[u];
        p["x"] = {xs[u][0], xs[u][1], xs[u][2], xs[u][3]};
        p["potential"] = {pots[u][0], pots[u][1], pots[u][2], pots[u][3]};
        pts.push_back(std::move(p));
    }
    out["points"] = std::move(pts);
    return {out.dump(2) + "\n", 0};
}

TaskOutput run_flux(const Request& req) {
    const ClassicalPathGauge fam =
        classical_family(req.field, req.particle, req.xp, req.tau);
    const Curve along =
        req.flux_curve == "classical"
            ? curve_of(classical_path(req.field, req.particle, req.x, req.xp,
                                      req.tau))
            : curve_straight(req.x, req.xp);
    const double v = flux_line(req.field, fam, along, req.tol);
    ojson out;
    out["request_hash"] = hash_hex(request_hash(req));
    out["task"] = "flux";
    out["curve"] = req.flux_curve;
    out["tau"] = req.tau;
    out["flux"] = v;
    return {out.dump(2) + "\n", 0};
}

TaskOutput run_green(const Request& req) {
    const GreensResult g =
        greens_function(req.field, req.particle, req.x, req.xp, req.eps_list,
                        req.tau_max, req.tol);
    ojson out;
    out["request_hash"] = hash_hex(request_hash(req));
    out["task"] = "green";
    out["value"] = cnum(g.value);
    out["epsilon_used"] = g.epsilon_used;
    out["tau_cutoff"] = g.tau_cutoff;
    out["quadrature_error_estimate"] = g.quadrature_error_estimate;
    return {out.dump(2) + "\n", 0};
}

TaskOutput run_validate(const Request& req, const RunOptions& opt) {
    const std::uint64_t seed = opt.seed ? *opt.seed : req.seed;
    const ValidationReport rep = run_validation(seed);
    std::string text = format_report(rep);
    if (opt.verbose) std::fputs(text.c_str(), stdout);
    return {std::move(text), rep.failed ? 1 : 0};
}

} // namespace

double default_tolerance() {
    if (const char* s = std::getenv("PROPKIT_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(s, &end);
        if (end == s || *end != '\0' || !std::isfinite(v) || !(v > 0.0))
            throw InvalidInput(
                "PROPKIT_TOL: must be a positive finite number, got '" +
                std::string(s) + "'");
        return v;
    }
    return 1e-10;
}

Request parse_request(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& ex) {
        throw InvalidInput(std::string("request: ") + ex.what());
    }
    if (!j.is_object()) bad("request", "top level must be an object");
    check_keys(j, "request",
               {"field", "particle", "evaluation", "task", "numerics",
                "output"});

    Request r;
    json canon;

    r.task = as_str(need(j, "task", "request"), "task");
    const bool known =
        r.task == "kernel" || r.task == "trajectory" ||
        r.task == "potential" || r.task == "flux" || r.task == "green" ||
        r.task == "validate";
    if (!known)
        bad("task",
            "must be kernel | trajectory | potential | flux | green | "
            "validate");
    canon["task"] = r.task;
    const bool is_validate = r.task == "validate";

    // particle
    if (const json* pj = find(j, "particle")) {
        if (is_validate) bad("particle", "not accepted by the validate task");
        check_keys(*pj, "particle", {"m", "e", "alpha"});
        const double m = as_pos(need(*pj, "m", "particle"), "particle.m");
        const double e = as_num(need(*pj, "e", "particle"), "particle.e");
        json pecho;
        pecho["m"] = m;
        pecho["e"] = e;
        if (const json* aj = find(*pj, "alpha")) {
            const double alpha = as_pos(*aj, "particle.alpha");
            r.particle = ParticleParams(m, e, alpha);
            pecho["alpha"] = alpha;
        } else {
            r.particle = ParticleParams(m, e);
        }
        canon["particle"] = pecho;
    } else if (!is_validate) {
        bad("particle", "missing");
    }

    // field
    if (const json* fj = find(j, "field")) {
        if (is_validate) bad("field", "not accepted by the validate task");
        json fecho;
        r.field = parse_field(*fj, fecho);
        canon["field"] = fecho;
    } else if (!is_validate) {
        bad("field", "missing");
    }

    // evaluation
    if (const json* ej = find(j, "evaluation")) {
        if (is_validate)
            bad("evaluation", "not accepted by the validate task");
        check_keys(*ej, "evaluation",
                   {"x", "xprime", "tau", "tau_grid", "grid", "samples",
                    "curve"});
        r.x = as_vec4(need(*ej, "x", "evaluation"), "evaluation.x");
        r.xp =
            as_vec4(need(*ej, "xprime", "evaluation"), "evaluation.xprime");
        json eecho;
        eecho["x"] = vec_json(r.x);
        eecho["xprime"] = vec_json(r.xp);

        const json* tj = find(*ej, "tau");
        const json* tgj = find(*ej, "tau_grid");
        const json* gj = find(*ej, "grid");
        if (tgj && r.task != "kernel")
            bad("evaluation.tau_grid", "only the kernel task sweeps tau");
        if (gj && r.task != "kernel" && r.task != "potential")
            bad("evaluation.grid",
                "only the kernel and potential tasks sweep a coordinate");
        if (tgj && gj)
            bad("evaluation", "tau_grid and grid cannot be combined");
        if (tgj && tj)
            bad("evaluation", "tau and tau_grid cannot be combined");
        if (r.task == "green") {
            if (tj) bad("evaluation.tau",
                        "the green task integrates over tau; remove it");
        } else if (tgj) {
            check_keys(*tgj, "evaluation.tau_grid",
                       {"start", "stop", "count"});
            SweepAxis s;
            s.coordinate = -1;
            s.start = as_pos(need(*tgj, "start", "evaluation.tau_grid"),
                             "evaluation.tau_grid.start");
            s.stop = as_pos(need(*tgj, "stop", "evaluation.tau_grid"),
                            "evaluation.tau_grid.stop");
            s.count = as_count(need(*tgj, "count", "evaluation.tau_grid"),
                               "evaluation.tau_grid.count");
            r.sweep = s;
            json ge;
            ge["start"] = s.start;
            ge["stop"] = s.stop;
            ge["count"] = s.count;
            eecho["tau_grid"] = ge;
        } else {
            if (!tj) bad("evaluation.tau", "missing");
            r.tau = as_pos(*tj, "evaluation.tau");
            eecho["tau"] = r.tau;
        }
        if (gj) {
            check_keys(*gj, "evaluation.grid",
                       {"coordinate", "start", "stop", "count"});
            SweepAxis s;
            s.coordinate =
                as_count(need(*gj, "coordinate", "evaluation.grid"),
                         "evaluation.grid.coordinate");
            if (s.coordinate > 3)
                bad("evaluation.grid.coordinate", "must be in [0, 3]");
            s.start = as_num(need(*gj, "start", "evaluation.grid"),
                             "evaluation.grid.start");
            s.stop = as_num(need(*gj, "stop", "evaluation.grid"),
                            "evaluation.grid.stop");
            s.count = as_count(need(*gj, "count", "evaluation.grid"),
                               "evaluation.grid.count");
            r.sweep = s;
            json ge;
            ge["coordinate"] = s.coordinate;
            ge["start"] = s.start;
            ge["stop"] = s.stop;
            ge["count"] = s.count;
            eecho["grid"] = ge;
        }

        if (const json* sj = find(*ej, "samples")) {
            if (r.task != "trajectory")
                bad("evaluation.samples", "only the trajectory task uses it");
            r.samples = as_count(*sj, "evaluation.samples");
            if (r.samples < 2)
                bad("evaluation.samples", "must be at least 2");
        }
        if (r.task == "trajectory") eecho["samples"] = r.samples;

        if (const json* cj = find(*ej, "curve")) {
            if (r.task != "flux")
                bad("evaluation.curve", "only the flux task uses it");
            r.flux_curve = as_str(*cj, "evaluation.curve");
            if (r.flux_curve != "straight" && r.flux_curve != "classical")
                bad("evaluation.curve", "must be straight | classical");
        } else if (r.task == "flux") {
            r.flux_curve = "straight";
        }
        if (r.task == "flux") eecho["curve"] = r.flux_curve;
        canon["evaluation"] = eecho;
    } else if (!is_validate) {
        bad("evaluation", "missing");
    }

    // numerics
    r.tol = default_tolerance();
    // The green integral's accuracy is set by eps_list and tau_max; its tol
    // gates the tail bound, for which the library-wide default is too tight.
    if (r.task == "green" && !std::getenv("PROPKIT_TOL")) r.tol = 1e-4;
    if (const json* nj = find(j, "numerics")) {
        check_keys(*nj, "numerics",
                   {"tol", "fd_step", "eps_list", "tau_max", "seed"});
        if (const json* v = find(*nj, "tol"))
            r.tol = as_pos(*v, "numerics.tol");
        if (const json* v = find(*nj, "fd_step"))
            r.fd_step = as_pos(*v, "numerics.fd_step");
        if (const json* v = find(*nj, "eps_list")) {
            if (!v->is_array() || v->empty())
                bad("numerics.eps_list", "must be a nonempty array");
            r.eps_list.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const double e = as_pos((*v)[i], "numerics.eps_list");
                if (!r.eps_list.empty() && e >= r.eps_list.back())
                    bad("numerics.eps_list", "must be strictly decreasing");
                r.eps_list.push_back(e);
            }
        }
        if (const json* v = find(*nj, "tau_max"))
            r.tau_max = as_pos(*v, "numerics.tau_max");
        if (const json* v = find(*nj, "seed")) {
            if (!v->is_number_unsigned())
                bad("numerics.seed", "must be a nonnegative integer");
            r.seed = v->get<std::uint64_t>();
        }
    }
    json necho;
    necho["tol"] = r.tol;
    if (r.fd_step > 0.0) necho["fd_step"] = r.fd_step;
    if (r.task == "green") {
        necho["eps_list"] = r.eps_list;
        necho["tau_max"] = r.tau_max;
    }
    if (is_validate) necho["seed"] = r.seed;
    canon["numerics"] = necho;

    // output
    const json& oj = need(j, "output", "request");
    check_keys(oj, "output", {"path", "format"});
    r.out_path = as_str(need(oj, "path", "output"), "output.path");
    if (r.out_path.empty()) bad("output.path", "must not be empty");
    const std::string def_format =
        r.task == "trajectory" ? "csv"
        : r.task == "validate" ? "text"
                               : "json";
    r.format = def_format;
    if (const json* v = find(oj, "format"))
        r.format = as_str(*v, "output.format");
    const bool format_ok =
        (r.task == "kernel" && (r.format == "json" || r.format == "csv")) ||
        (r.task == "potential" &&
         (r.format == "json" || r.format == "csv")) ||
        (r.task == "trajectory" && r.format == "csv") ||
        (r.task == "flux" && r.format == "json") ||
        (r.task == "green" && r.format == "json") ||
        (r.task == "validate" && r.format == "text");
    if (!format_ok)
        bad("output.format",
            "'" + r.format + "' is not available for the " + r.task +
                " task");
    json oecho;
    oecho["path"] = r.out_path;
    oecho["format"] = r.format;
    canon["output"] = oecho;

    r.canonical = canon.dump(2) + "\n";
    return r;
}

Request parse_request_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("request file not readable: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_request(buf.str());
}

std::uint64_t request_hash(const Request& req) { return fnv1a(req.canonical); }

std::string emit_plotdata(const std::vector<double>& parameter,
                          const std::vector<KernelResult>& values) {
    if (parameter.size() != values.size())
        throw InvalidInput("emit_plotdata: parameter and value counts differ");
    std::ostringstream out;
    out << "parameter,re,im,abs,phase\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const num::cplx a = values[i].amplitude;
        out << fmt17(parameter[i]) << ',' << fmt17(a.real()) << ','
            << fmt17(a.imag()) << ',' << fmt17(std::abs(a)) << ','
            << fmt17(unwrapped_phase(values[i])) << '\n';
    }
    return out.str();
}

std::string emit_trajectory_csv(const WorldlinePath& path, int samples) {
    if (samples < 2)
        throw InvalidInput("emit_trajectory_csv: need at least 2 samples");
    std::ostringstream out;
    out << "sigma,y0,y1,y2,y3,dy0,dy1,dy2,dy3\n";
    for (int i = 0; i < samples; ++i) {
        const double sigma = path.tau * i / (samples - 1);
        const FourVector y = path.y(sigma);
        const FourVector dy = path.dy(sigma);
        out << fmt17(sigma);
        for (int mu = 0; mu < 4; ++mu) out << ',' << fmt17(y[mu]);
        for (int mu = 0; mu < 4; ++mu) out << ',' << fmt17(dy[mu]);
        out << '\n';
    }
    return out.str();
}

int run_request(const Request& req, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path out_path = resolve_out(req, opt);
    try {
        TaskOutput result;
        if (req.task == "kernel")
            result = run_kernel(req, opt);
        else if (req.task == "trajectory")
            result = run_trajectory(req);
        else if (req.task == "potential")
            result = run_potential(req, opt);
        else if (req.task == "flux")
            result = run_flux(req);
        else if (req.task == "green")
            result = run_green(req);
        else
            result = run_validate(req, opt);
        if (req.format == "json") {
            // Timings sit on one trailing line so outputs differ only there.
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
            std::string& t = result.text;
            if (!t.empty() && t.back() == '\n') t.pop_back();
            if (!t.empty() && t.back() == '}') {
                t.pop_back();
                while (!t.empty() && t.back() == '\n') t.pop_back();
                char buf[64];
                std::snprintf(buf, sizeof buf,
                              ",\n  \"wall_seconds\": %.6f\n}\n", wall);
                t += buf;
            }
        }
        write_atomic(out_path, result.text);
        if (opt.verbose)
            std::fprintf(stderr, "propkit: %s -> %s\n", req.task.c_str(),
                         out_path.string().c_str());
        return result.exit_code;
    } catch (const InvalidInput& ex) {
        std::fprintf(stderr, "propkit: invalid input: %s\n", ex.what());
        ojson err;
        err["request_hash"] = hash_hex(request_hash(req));
        err["task"] = req.task;
        err["error"]["type"] = "invalid_input";
        err["error"]["message"] = ex.what();
        try {
            write_atomic(out_path, err.dump(2) + "\n");
        } catch (...) {
        }
        return 2;
    } catch (const NumericalFailure& ex) {
        std::fprintf(stderr, "propkit: numerical failure: %s\n", ex.what());
        ojson err;
        err["request_hash"] = hash_hex(request_hash(req));
        err["task"] = req.task;
        err["error"]["type"] = "numerical_failure";
        err["error"]["message"] = ex.what();
        try {
            write_atomic(out_path, err.dump(2) + "\n");
        } catch (...) {
        }
        return 3;
    }
}

int run(const std::string& request_file, const RunOptions& opt) {
    Request req;
    try {
        req = parse_request_file(request_file);
    } catch (const InvalidInput& ex) {
        std::fprintf(stderr, "propkit: invalid input: %s\n", ex.what());
        return 2;
    }
    return run_request(req, opt);
}

} // namespace propkit
