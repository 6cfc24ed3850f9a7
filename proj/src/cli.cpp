#include "mmpt/cli.hpp"

#include "mmpt/capacity.hpp"
#include "mmpt/extension.hpp"
#include "mmpt/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace mmpt::cli {

namespace {

struct Outcome {
    int code = kOk;
    Json report;
    std::string csv;  ///< written next to --out when nonempty
};

class Log {
public:
    Log(std::ostream& err, bool quiet, std::string command) : err_(err), quiet_(quiet), command_(std::move(command)) {}

    void info(const std::string& msg) const { emit("info", msg); }
    void warn(const std::string& msg) const { emit("warn", msg); }

private:
    void emit(const char* level, const std::string& msg) const {
        if (quiet_) return;
        err_ << "mmpt level=" << level << " command=" << command_ << " msg=" << Json(msg).dump() << '\n';
    }

    std::ostream& err_;
    bool quiet_;
    std::string command_;
};

std::string error_kind_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::CapExhausted: return "cap_exhausted";
    case ErrorKind::Unsupported: return "unsupported";
    }
    return "unknown";
}

std::string csv_path(const std::string& out) {
    const auto dot = out.rfind('.');
    const auto slash = out.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + ".csv";
    return out.substr(0, dot) + ".csv";
}

const std::string& input(const RunConfig& cfg, std::size_t k, const char* what) {
    if (k >= cfg.inputs.size()) throw Error(ErrorKind::InvalidArgument, std::string("missing ") + what);
    return cfg.inputs[k];
}

// Assertion bookkeeping shared by the verify suites.
class Checks {
public:
    void add(const std::string& name, bool pass, Json detail) {
        Json row{{"name", name}, {"pass", pass}, {"detail", std::move(detail)}};
        if (!pass && counterexample_.is_null()) counterexample_ = row;
        if (pass) ++passed_;
        rows_.push_back(std::move(row));
    }
    bool pass() const { return counterexample_.is_null(); }
    Json json() const {
        return Json{{"assertions", rows_},
                    {"passed", passed_},
                    {"failed", rows_.size() - passed_},
                    {"counterexample", counterexample_}};
    }

private:
    Json rows_ = Json::array();
    std::size_t passed_ = 0;
    Json counterexample_;
};

Outcome cmd_space_validate(const RunConfig& cfg, const Log& log) {
    const std::string& path = input(cfg, 0, "space file");
    Outcome o;
    try {
        const SpaceDocument doc = load_space(path);
        Json sets = Json::object();
        for (const auto& [name, set] : doc.sets) sets[name] = set.size();
        o.report = Json{{"valid", true},
                        {"points", doc.space.size()},
                        {"has_coords", doc.space.has_coords()},
                        {"total_mass", doc.space.total_mass()},
                        {"diameter", doc.space.diameter()},
                        {"connectivity_radius", connectivity_radius(doc.space)},
                        {"sets", sets},
                        {"findings", Json::array()}};
        log.info(path + " is valid");
    } catch (const Error& e) {
        o.code = kInvalid;
        o.report = Json{{"valid", false},
                        {"findings", Json::array({Json{{"kind", error_kind_name(e.kind())}, {"message", e.what()}}})}};
        log.warn(path + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        o.code = kInvalid;
        o.report = Json{{"valid", false},
                        {"findings", Json::array({Json{{"kind", "schema"}, {"message", e.what()}}})}};
        log.warn(path + ": " + e.what());
    }
    return o;
}

Outcome cmd_cap(RunConfig& cfg, const Log& log) {
    const SpaceDocument doc = load_space(input(cfg, 0, "space file"));
    const auto& space = doc.space;
    if (!cfg.delta) {
        cfg.delta = connectivity_radius(space);
        log.info("delta defaults to the connectivity radius " + std::to_string(*cfg.delta));
    }
    const SolverOptions opts{cfg.tol, cfg.max_iter};
    CapacityReport rep;
    if (cfg.method == "set") {
        rep = set_capacity(doc.set(cfg.source), cfg.p, *cfg.delta, space, opts);
    } else {
        CondenserSpec spec{doc.set(cfg.source), doc.set(cfg.target), cfg.p, *cfg.delta};
        spec.validate(space);
        if (cfg.method == "modulus") {
            rep = modulus_cg(spec, space, opts);
        } else if (cfg.method == "brute") {
            rep = brute_force_modulus(spec, space);
        } else if (cfg.method == "function") {
            rep = function_min(spec, space, opts);
        } else if (cfg.method == "primal") {
            PrimalOptions po;
            po.i_max = cfg.i_max;
            po.eps = cfg.eps;
            po.seed_options.max_iter = cfg.max_iter;
            rep = primal_sequence(spec, space, po);
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown method " + cfg.method);
        }
    }
    for (const auto& note : rep.notes) log.info(note);
    Outcome o;
    o.report = to_json(rep);
    o.csv = trace_csv(rep);
    o.code = rep.converged ? kOk : kMaxIter;
    if (!rep.converged) log.warn("solver stopped without converging after " + std::to_string(rep.iterations) + " iterations");
    return o;
}

Outcome cmd_extend(const RunConfig& cfg, const Log& log, bool eps_given, bool p_given, bool delta_given) {
    const SpaceDocument doc = load_space(input(cfg, 0, "space file"));
    Json problem_doc = read_json_file(input(cfg, 1, "extension problem file"));
    if (eps_given) problem_doc["eps"] = cfg.eps;
    if (p_given) problem_doc["p"] = cfg.p;
    const ExtensionProblem problem = parse_extension_problem(problem_doc, doc.space);
    ExtensionOptions opts;
    opts.index_cap = cfg.index_cap;
    if (delta_given) opts.delta_cloud = cfg.delta;
    const ExtensionResult res = whitney_extend(problem, doc.space, opts);
    Outcome o;
    o.report = to_json(res);
    o.code = res.pass() ? kOk : kCheckFailed;
    for (const auto& c : res.diagnostics)
        if (!c.pass) log.warn("diagnostic " + c.name + " failed: " + c.detail);
    return o;
}

Json sweep_row_json(const SweepRow& r) {
    return Json{{"resolution", r.resolution}, {"solver", r.solver}, {"value", r.value},
                {"oracle", r.oracle},         {"rel_error", r.rel_error}, {"ok", r.ok},
                {"error", r.error}};
}

// modulus_cg against exhaustive enumeration on small seeded condensers.
Outcome verify_brute(const RunConfig& cfg, const Log& log) {
    Checks checks;
    std::ostringstream csv;
    csv.precision(17);
    csv << "instance,seed,n,p,delta,modulus,brute,rel_diff\n";
    const double ps[] = {1.5, 2.0, 3.0};
    for (int k = 0; k < cfg.instances; ++k) {
        const std::uint64_t seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(k);
        const std::size_t n = 4 + static_cast<std::size_t>(k % 4);
        const double p = ps[k % 3];
        const GridInstance inst = random_condenser(seed, n, p);
        const CapacityReport cg = modulus_cg(inst.condenser, inst.space, {1e-9, cfg.max_iter});
        const CapacityReport bf = brute_force_modulus(inst.condenser, inst.space);
        const double diff = std::abs(cg.value - bf.value) / std::max(bf.value, 1e-300);
        csv << k << ',' << seed << ',' << n << ',' << p << ',' << inst.condenser.delta << ',' << cg.value << ','
            << bf.value << ',' << diff << '\n';
        Json detail{{"instance", k}, {"seed", seed}, {"n", n}, {"p", p}, {"delta", inst.condenser.delta},
                    {"modulus", cg.value}, {"brute", bf.value}, {"rel_diff", diff}};
        checks.add("modulus.converged", cg.converged, detail);
        checks.add("modulus.matches_brute", diff <= cfg.tol, detail);
    }
    log.info("checked " + std::to_string(cfg.instances) + " brute-force instances");
    return {checks.pass() ? kOk : kCheckFailed, checks.json(), csv.str()};
}

// The three solvers against the ring oracle on annulus grids.
Outcome verify_annulus(const RunConfig& cfg, const Log& log) {
    GridSpec grid;
    grid.connectivity = cfg.connectivity;
    SweepOptions so;
    so.p = 2.0;
    so.tol = cfg.tol;
    so.max_iter = cfg.max_iter;
    so.workers = cfg.workers;
    so.seed = cfg.seed;
    so.i_max = cfg.i_max;
    const std::vector<int> res = cfg.resolutions.empty() ? std::vector<int>{32} : cfg.resolutions;
    const std::vector<std::string> solvers =
        cfg.solvers.empty() ? std::vector<std::string>{"modulus", "function", "primal"} : cfg.solvers;
    const SweepReport sweep = convergence_sweep(res, solvers, grid, so);
    Checks checks;
    for (const auto& r : sweep.rows) {
        const Json detail = sweep_row_json(r);
        checks.add("solver.ok", r.ok, detail);
        if (!r.ok) continue;
        checks.add("solver.converged", r.report.value("converged", false), detail);
        checks.add("oracle.band", r.rel_error <= cfg.band, detail);
        log.info(r.solver + " at n = " + std::to_string(r.resolution) + ": " + std::to_string(r.value));
    }
    Json report = checks.json();
    report["band"] = cfg.band;
    report["oracle"] = ring_capacity_oracle(grid.r, grid.R);
    report["sweep"] = sweep.json();
    return {checks.pass() ? kOk : kCheckFailed, report, sweep.csv()};
}

Outcome verify_choquet(const RunConfig& cfg, const Log& log) {
    const GridInstance inst = random_condenser(cfg.seed, 12);
    const auto& space = inst.space;
    const double delta = 1.5 * connectivity_radius(space);
    const SolverOptions opts{1e-10, cfg.max_iter};
    std::mt19937_64 rng(cfg.seed + 17);
    std::vector<PointId> order(space.size());
    std::iota(order.begin(), order.end(), PointId{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<PointSet> up;
    for (std::size_t k = 1; k <= 5; ++k) up.emplace_back(std::vector<PointId>(order.begin(), order.begin() + k));
    std::vector<PointSet> down;
    for (double r : {0.8, 0.6, 0.4, 0.2, 0.0}) down.push_back(ball(space, order[0], r, true));
    std::vector<std::pair<PointSet, PointSet>> pairs{{up[1], PointSet({order[5], order[6]})},
                                                     {up[2], down[2]},
                                                     {PointSet({order[7]}), PointSet({order[8], order[9]})}};

    Checks checks;
    for (auto [sets, kind, label] : {std::tuple{&up, ChainKind::Increasing, "increasing"},
                                     std::tuple{&down, ChainKind::Decreasing, "decreasing"}}) {
        const auto d = choquet_check(*sets, kind, 2.0, delta, space, cfg.tol, pairs, opts);
        const Json detail{{"chain", label},
                          {"capacities", d.capacities},
                          {"monotone_slack", d.monotone_slack},
                          {"continuity_error", d.continuity_error},
                          {"subadditivity_slack", d.subadditivity_slack}};
        checks.add("choquet.monotone", d.monotone, detail);
        checks.add("choquet.continuity", d.continuity, detail);
        checks.add("choquet.subadditive", d.subadditive, detail);
        for (const auto& w : d.warnings) log.warn(w);
    }
    const auto outer = outer_regularity_gap(up[2], 2.0, delta, space, 6, opts);
    checks.add("outer_regularity.gap", outer.gap <= cfg.tol * std::max(1.0, outer.cap_e),
               Json{{"cap_e", outer.cap_e}, {"inf_neighbourhood", outer.inf_neighbourhood}, {"gap", outer.gap}});
    log.info("choquet suite on " + std::to_string(space.size()) + " points");
    return {checks.pass() ? kOk : kCheckFailed, checks.json(), ""};
}

Outcome verify_quasi(const RunConfig& cfg, const Log& log) {
    const GridInstance inst = random_condenser(cfg.seed, 20);
    const auto& space = inst.space;
    std::mt19937_64 rng(cfg.seed + 29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarField f(space.size());
    for (double& v : f) v = u(rng);
    std::vector<ScalarField> approx;
    for (int n = 1; n <= 8; ++n) {
        ScalarField fn(f);
        for (double& v : fn) v += std::ldexp(1.0, -n) * u(rng);
        approx.push_back(std::move(fn));
    }
    const auto w = quasicontinuity_witness(f, approx, 0.5, 2.0, 1.5 * connectivity_radius(space), space, cfg.tol);
    Checks checks;
    const Json detail = to_json(w);
    checks.add("quasi.monotone", w.monotone, detail);
    checks.add("quasi.bounded", w.bounded, detail);
    log.info("quasicontinuity witness over " + std::to_string(approx.size()) + " approximants");
    return {checks.pass() ? kOk : kCheckFailed, checks.json(), ""};
}

Outcome verify_sweep(const RunConfig& cfg, const Log& log) {
    GridSpec grid;
    grid.connectivity = cfg.connectivity;
    SweepOptions so;
    so.p = cfg.p;
    so.tol = cfg.tol;
    so.max_iter = cfg.max_iter;
    so.workers = cfg.workers;
    so.seed = cfg.seed;
    so.i_max = cfg.i_max;
    const std::vector<int> res = cfg.resolutions.empty() ? std::vector<int>{8, 16} : cfg.resolutions;
    const std::vector<std::string> solvers =
        cfg.solvers.empty() ? std::vector<std::string>{"modulus", "function", "primal"} : cfg.solvers;
    const SweepReport sweep = convergence_sweep(res, solvers, grid, so);
    Checks checks;
    for (const auto& r : sweep.rows) checks.add("sweep.row_ok", r.ok, sweep_row_json(r));
    log.info("sweep produced " + std::to_string(sweep.rows.size()) + " rows");
    Json report = checks.json();
    report["sweep"] = sweep.json();
    return {checks.pass() ? kOk : kCheckFailed, report, sweep.csv()};
}

Outcome cmd_verify(const RunConfig& cfg, const Log& log) {
    if (cfg.suite == "brute") return verify_brute(cfg, log);
    if (cfg.suite == "annulus") return verify_annulus(cfg, log);
    if (cfg.suite == "choquet") return verify_choquet(cfg, log);
    if (cfg.suite == "quasi") return verify_quasi(cfg, log);
    if (cfg.suite == "sweep") return verify_sweep(cfg, log);
    throw Error(ErrorKind::InvalidArgument, "unknown suite " + cfg.suite);
}

void add_common(CLI::App* cmd, RunConfig& cfg, double& delta_raw) {
    cmd->add_option("--p", cfg.p, "exponent p >= 1")->capture_default_str();
    cmd->add_option("--delta", delta_raw, "path mesh bound (default: connectivity radius)");
    cmd->add_option("--tol", cfg.tol, "solver / assertion tolerance")->capture_default_str();
    cmd->add_option("--max-iter", cfg.max_iter, "iteration cap")->capture_default_str();
    cmd->add_option("--i-max", cfg.i_max, "primal levels (0: automatic)")->capture_default_str();
    cmd->add_option("--eps", cfg.eps, "energy slack")->capture_default_str();
    cmd->add_option("--out", cfg.out, "write the envelope here (CSV next to it)");
    cmd->add_option("--seed", cfg.seed, "seed for generated instances")->capture_default_str();
    cmd->add_option("--workers", cfg.workers, "worker threads")->capture_default_str();
    cmd->add_option("--index-cap", cfg.index_cap, "index search cap")->capture_default_str();
    cmd->add_flag("--quiet", cfg.quiet, "suppress logs on stderr");
}

} // namespace

void RunConfig::validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "--p must be at least 1");
    if (workers < 1) throw Error(ErrorKind::InvalidArgument, "--workers must be at least 1");
    if (max_iter < 1) throw Error(ErrorKind::InvalidArgument, "--max-iter must be at least 1");
    if (i_max < 0) throw Error(ErrorKind::InvalidArgument, "--i-max must be nonnegative");
    if (index_cap < 1) throw Error(ErrorKind::InvalidArgument, "--index-cap must be at least 1");
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "--eps must be positive");
    if (delta && !(*delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "--delta must be positive");
    if (command == "verify") {
        if (!(tol >= 0.0)) throw Error(ErrorKind::InvalidArgument, "--tol must be nonnegative");
    } else if (!(tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "--tol must be positive");
    }
    if (connectivity != 4 && connectivity != 8) throw Error(ErrorKind::InvalidArgument, "--connectivity must be 4 or 8");
    if (instances < 1) throw Error(ErrorKind::InvalidArgument, "--instances must be at least 1");
}

Json RunConfig::to_json() const {
    Json j{{"inputs", inputs}, {"p", p},           {"delta", delta ? Json(*delta) : Json(nullptr)},
           {"tol", tol},       {"max_iter", max_iter}, {"i_max", i_max},
           {"eps", eps},       {"out", out},       {"seed", seed},
           {"workers", workers}, {"index_cap", index_cap}};
    if (command == "cap") {
        j["method"] = method;
        j["source"] = source;
        j["target"] = target;
    }
    if (command == "verify") {
        j["suite"] = suite;
        j["resolutions"] = resolutions;
        j["solvers"] = solvers;
        j["connectivity"] = connectivity;
        j["instances"] = instances;
        j["band"] = band;
    }
    return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    double delta_raw = std::numeric_limits<double>::quiet_NaN();

    CLI::App app{"Potential theory on finite metric measure spaces", "mmpt"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* space_cmd = app.add_subcommand("space", "space document tools");
    space_cmd->require_subcommand(1);
    auto* validate_cmd = space_cmd->add_subcommand("validate", "check a space document");
    validate_cmd->add_option("space", cfg.inputs, "space JSON file")->required()->expected(1);
    add_common(validate_cmd, cfg, delta_raw);

    auto* cap_cmd = app.add_subcommand("cap", "condenser or set capacity");
    cap_cmd->add_option("space", cfg.inputs, "space JSON file with the named sets")->required()->expected(1);
    cap_cmd->add_option("--method", cfg.method, "solver")
        ->check(CLI::IsMember({"modulus", "primal", "function", "set", "brute"}))
        ->capture_default_str();
    cap_cmd->add_option("--source", cfg.source, "name of E")->capture_default_str();
    cap_cmd->add_option("--target", cfg.target, "name of F")->capture_default_str();
    add_common(cap_cmd, cfg, delta_raw);

    auto* extend_cmd = app.add_subcommand("extend", "extension of f from K");
    extend_cmd->add_option("files", cfg.inputs, "space JSON file and extension problem JSON file")
        ->required()
        ->expected(2);
    add_common(extend_cmd, cfg, delta_raw);

    auto* verify_cmd = app.add_subcommand("verify", "verification suites");
    verify_cmd->add_option("--suite", cfg.suite, "suite")
        ->check(CLI::IsMember({"brute", "annulus", "choquet", "quasi", "sweep"}))
        ->capture_default_str();
    verify_cmd->add_option("--n", cfg.resolutions, "grid resolutions (annulus, sweep)");
    verify_cmd->add_option("--solvers", cfg.solvers, "solvers (annulus, sweep)");
    verify_cmd->add_option("--connectivity", cfg.connectivity, "grid stencil, 4 or 8")->capture_default_str();
    verify_cmd->add_option("--instances", cfg.instances, "random instances (brute)")->capture_default_str();
    verify_cmd->add_option("--band", cfg.band, "relative oracle band (annulus)")->capture_default_str();
    add_common(verify_cmd, cfg, delta_raw);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    CLI::App* leaf = nullptr;
    if (validate_cmd->parsed()) {
        cfg.command = "space validate";
        leaf = validate_cmd;
    } else if (cap_cmd->parsed()) {
        cfg.command = "cap";
        leaf = cap_cmd;
    } else if (extend_cmd->parsed()) {
        cfg.command = "extend";
        leaf = extend_cmd;
    } else {
        cfg.command = "verify";
        leaf = verify_cmd;
    }
    if (leaf->count("--delta") > 0) cfg.delta = delta_raw;

    const Log log(err, cfg.quiet, cfg.command);
    Outcome o;
    try {
        cfg.validate();
        if (cfg.command == "space validate") {
            o = cmd_space_validate(cfg, log);
        } else if (cfg.command == "cap") {
            o = cmd_cap(cfg, log);
        } else if (cfg.command == "extend") {
            o = cmd_extend(cfg, log, leaf->count("--eps") > 0, leaf->count("--p") > 0, cfg.delta.has_value());
        } else {
            o = cmd_verify(cfg, log);
        }
    } catch (const Error& e) {
        o.code = e.kind() == ErrorKind::CapExhausted ? kCapExhausted : kInvalid;
        o.report = Json{{"error", {{"kind", error_kind_name(e.kind())}, {"message", e.what()}}}};
        o.csv.clear();
        log.warn(e.what());
    } catch (const nlohmann::json::exception& e) {
        o.code = kInvalid;
        o.report = Json{{"error", {{"kind", "schema"}, {"message", e.what()}}}};
        o.csv.clear();
        log.warn(e.what());
    }

    const Json envelope{{"version", kVersion}, {"command", cfg.command}, {"config", cfg.to_json()}, {"report", o.report},
                        {"exit_code", o.code}};
    const std::string text = envelope.dump(2) + "\n";
    const bool complete = o.code == kOk || o.code == kMaxIter || o.code == kCheckFailed;
    if (!cfg.out.empty() && complete) {
        try {
            write_file_atomic(cfg.out, text);
            if (!o.csv.empty()) write_file_atomic(csv_path(cfg.out), o.csv);
            log.info("wrote " + cfg.out);
        } catch (const std::exception& e) {
            err << "mmpt level=error command=" << cfg.command << " msg=" << Json(std::string(e.what())).dump() << '\n';
            return kInvalid;
        }
    }
    out << text;
    return o.code;
}

} // namespace mmpt::cli
