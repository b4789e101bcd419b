#include "gaitcont/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gaitcont {

namespace {

std::string num(double x, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

std::string vec_text(const Vec& v, int prec = 6) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i), prec);
    return s + "]";
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("failed writing '" + path + "'");
}

std::pair<double, double> parse_interval(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw InputError("--interval expects a,b");
    double a, b;
    try {
        std::size_t ia = 0, ib = 0;
        const std::string sa = s.substr(0, comma), sb = s.substr(comma + 1);
        a = std::stod(sa, &ia);
        b = std::stod(sb, &ib);
        if (ia != sa.size() || ib != sb.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw InputError("--interval expects two numbers a,b, got '" + s + "'");
    }
    if (!(a > 0 && b > a)) throw InputError("--interval needs 0 < a < b");
    return {a, b};
}

std::shared_ptr<const GaitModel> model_or_default(const std::string& path, CompassControl fallback) {
    if (!path.empty()) return load_model_file(path);
    return std::make_shared<CompassGait>(CompassGaitParams{}, fallback);
}

struct Flags {
    std::string model;
    std::string interval = "0.1,1";
    int steps = 100;
    int count = 250;
    double step_size = 1.0 / 20.0;
    int seed_index = -1;
    int gait_index = -1;
    std::string query;
    std::string archive;
    std::string out;
    std::string format;
};

GaitPoint equilibrium_gait(const HybridModel& model, double tau) {
    const auto eq = model.equilibria();
    if (eq.empty()) throw InputError("model " + model.name() + " has no equilibrium to scan from");
    GaitPoint c;
    c.x0 = eq.front();
    c.tau = tau;
    c.mu = Vec::Zero(model.dims().k);
    return c;
}

int cmd_scan(const Flags& f, std::ostream& out) {
    const auto model = model_or_default(f.model, CompassControl::Passive);
    const auto [a, b] = parse_interval(f.interval);
    const ScanOutcome r = run_scan(*model, a, b, f.steps, out);
    if (!f.out.empty()) {
        GaitFamily fam;
        fam.indicator = r.report.samples;
        fam.singular = r.singular;
        fam.classification = r.report.classification;
        save_archive(make_archive(*model, fam, a, b, f.steps), f.out);
    }
    return r.exit_code;
}

int cmd_trace(const Flags& f, std::ostream& out) {
    const auto model = model_or_default(f.model, CompassControl::Passive);
    const auto [a, b] = parse_interval(f.interval);
    if (f.out.empty()) throw InputError("trace needs --out <archive>");
    if (f.count < 1) throw InputError("--count must be positive");
    if (!(f.step_size > 0)) throw InputError("--step-size must be positive");
    FamilyOptions fo;
    fo.curve.count = f.count;
    fo.curve.step = f.step_size;
    fo.seed_index = f.seed_index;
    const GaitFamily fam = build_family(model, equilibrium_gait(*model, a), a, b, f.steps, fo);
    if (fam.singular.empty()) {
        out << format_report(make_report(fam.indicator, 0));
        return kExitEmptyScan;
    }
    const FamilyArchive ar = make_archive(*model, fam, a, b, f.steps);
    save_archive(ar, f.out);
    out << summary_table(ar);
    if (!fam.diagnostic.empty()) out << fam.diagnostic << "\n";
    out << "archive written to " << f.out << "\n";
    return kExitOk;
}

int cmd_surface(const Flags& f, std::ostream& out) {
    const auto model = model_or_default(f.model, CompassControl::SinusoidalHip);
    const auto [a, b] = parse_interval(f.interval);
    if (f.out.empty()) throw InputError("surface needs --out <archive>");
    ScanResult scan = scan_indicator(*model, model->equilibria().front(), Vec::Zero(model->dims().k), a, b, f.steps);
    if (scan.singular.empty()) {
        out << format_report(make_report(scan.samples, 0));
        return kExitEmptyScan;
    }
    const int seed = f.seed_index < 0 ? 0 : f.seed_index;
    if (seed >= static_cast<int>(scan.singular.size())) throw InputError("--seed-index out of range");
    MultiDimOptions mo;
    mo.counts = {f.count};
    mo.steps = {f.step_size};
    const int d = model->dims().k + 1;
    MultiDimResult md = multi_dim(model, scan.singular[seed], d, mo);
    GaitFamily fam;
    fam.indicator = scan.samples;
    fam.singular = scan.singular;
    fam.branches = std::move(md.branches);
    for (Branch& br : fam.branches) br.seed_index = seed;
    const FamilyArchive ar = make_archive(*model, fam, a, b, f.steps);
    save_archive(ar, f.out);
    out << "surface of dimension " << d << " from seed " << seed << " (tau = " << num(scan.singular[seed].point.tau)
        << "): " << ar.branches.size() << " curves, " << ar.gait_count() << " gaits\n";
    out << "archive written to " << f.out << "\n";
    return kExitOk;
}

int cmd_query(const Flags& f, std::ostream& out) {
    if (f.archive.empty()) throw InputError("query needs --archive <file>");
    if (f.query.empty()) throw InputError("query needs --query <file>");
    FamilyArchive ar = load_archive(f.archive);
    const auto model = f.model.empty() ? archive_model(ar) : load_model_file(f.model);
    const std::string qtext = read_text(f.query);
    const QuerySpec spec = load_query_json(model, qtext);
    const int bi = f.seed_index >= 0 ? f.seed_index : spec.branch;
    const int gi = f.gait_index >= 0 ? f.gait_index : spec.gait;
    if (bi < 0 || gi < 0) throw InputError("select a reference gait (query 'reference' or --seed-index/--gait-index)");
    if (bi >= static_cast<int>(ar.branches.size())) throw InputError("reference branch index out of range");
    const Branch& br = ar.branches[bi];
    if (gi >= static_cast<int>(br.gaits.size())) throw InputError("reference gait index out of range");
    const GaitPoint ref = br.gaits[gi].gait;
    out << "reference " << br.label << "[" << gi << "]: tau = " << num(ref.tau) << ", slope = "
        << num(model->slope(ref)) << ", mu = " << vec_text(ref.mu) << "\n";

    GhmResult res;
    try {
        res = ghm_solve(model, spec.constraints, ref, spec.options);
    } catch (const StalledDescentError& e) {
        out << "query failed: " << e.what() << "\n";
        out << "last iterate: " << vec_text(e.last_iterate, 10) << "  p = " << num(e.p_value) << "\n";
        return kExitQueryFailed;
    } catch (const ConvergenceError& e) {
        out << "query failed: " << e.what() << "\n";
        out << "last iterate: " << vec_text(e.last_iterate, 10) << "  residual = " << num(e.residual_norm) << "\n";
        return kExitQueryFailed;
    } catch (const StepFailure& e) {
        out << "query failed: " << e.what() << "\n";
        return kExitQueryFailed;
    }

    out << " iter            p          merit     lambda\n";
    for (std::size_t i = 0; i < res.path.size(); ++i) {
        char line[128];
        std::snprintf(line, sizeof line, "%5zu %12.4e %14.6e %10.3g\n", i, res.path[i].p, res.path[i].merit,
                      res.path[i].lambda);
        out << line;
    }
    if (!res.converged) {
        out << "query failed: " << res.diagnostic << "\n";
        if (!res.path.empty()) out << "last iterate: " << vec_text(res.path.back().point, 10) << "\n";
        return kExitQueryFailed;
    }
    const GaitPoint& c = res.root;
    if (res.reference_satisfied) out << "reference already satisfies the query\n";
    out << "found gait: q = " << vec_text(c.x0.q, 10) << ", qdot = " << vec_text(c.x0.qdot, 10)
        << ", tau = " << num(c.tau, 10) << ", mu = " << vec_text(c.mu, 10) << "\n";
    out << "slope = " << num(model->slope(c), 6) << " rad, step length = " << num(model->step_length(c), 6)
        << " m, ||P|| = " << num(periodicity(*model, c).residual.norm(), 3) << "\n";
    if (!f.out.empty()) {
        HomotopyRecord h;
        h.query = qtext;
        h.branch = bi;
        h.gait = gi;
        h.reference = ref;
        h.path = res.path;
        h.converged = res.converged;
        h.reference_satisfied = res.reference_satisfied;
        h.root = res.root;
        h.slacks = res.slacks;
        h.diagnostic = res.diagnostic;
        ar.homotopy.push_back(std::move(h));
        save_archive(ar, f.out);
        out << "archive written to " << f.out << "\n";
    }
    return kExitOk;
}

int cmd_export(const Flags& f, std::ostream& out) {
    if (f.archive.empty()) throw InputError("export needs --archive <file>");
    std::string fmtname = f.format.empty() ? "csv" : f.format;
    if (fmtname != "csv" && fmtname != "svg" && fmtname != "svg-bifurcation" && fmtname != "frames" &&
        fmtname != "animation-frames")
        throw InputError("unknown export format '" + fmtname + "' (csv, svg-bifurcation, animation-frames)");
    const FamilyArchive ar = load_archive(f.archive);
    std::string text;
    if (fmtname == "csv")
        text = export_csv(ar);
    else if (fmtname == "svg" || fmtname == "svg-bifurcation")
        text = export_svg(ar);
    else
        text = export_frames(*archive_model(ar), ar, 60.0);
    write_text(f.out, text, out);
    return kExitOk;
}

int cmd_audit(const Flags& f, std::ostream& out) {
    if (f.archive.empty()) throw InputError("audit needs --archive <file>");
    const FamilyArchive ar = load_archive(f.archive);
    const auto model = f.model.empty() ? archive_model(ar) : load_model_file(f.model);
    const AuditResult r = audit_archive(*model, ar);
    out << "audited " << r.entries.size() << " gaits: max ||P|| = " << num(r.max_residual, 3)
        << ", max |stored - recomputed| = " << num(r.max_mismatch, 3) << "\n";
    if (!r.ok()) {
        out << "audit failed (need ||P|| < 1e-8 and stored values reproduced to 1e-12)\n";
        return kExitInput;
    }
    out << "audit ok\n";
    return kExitOk;
}

}  // namespace

std::string format_singular(const std::vector<SingularEG>& singular) {
    std::ostringstream os;
    os << singular.size() << " singular equilibrium gait" << (singular.size() == 1 ? "" : "s") << "\n";
    for (std::size_t i = 0; i < singular.size(); ++i) {
        const SingularEG& s = singular[i];
        os << "  [" << i << "] tau = " << num(s.point.tau, 10) << "  I = " << num(s.indicator_value, 3)
           << "  null dim = " << s.null_dimension << (s.switchable() ? "" : " (not switchable)") << "\n";
        os << "      tangent (pre-impact x0)  " << vec_text(s.tangent, 4) << "\n";
        if (s.post_impact_tangent.size())
            os << "      tangent (post-impact)    " << vec_text(s.post_impact_tangent, 4) << "\n";
    }
    return os.str();
}

ScanOutcome run_scan(const HybridModel& model, double a, double b, int steps, std::ostream& out) {
    if (steps < 1) throw InputError("--steps must be positive");
    const auto eq = model.equilibria();
    if (eq.empty()) throw InputError("model " + model.name() + " has no equilibrium to scan from");
    const ScanResult scan = scan_indicator(model, eq.front(), Vec::Zero(model.dims().k), a, b, steps);
    ScanOutcome r;
    r.report = make_report(scan.samples, scan.singular.size());
    r.singular = scan.singular;
    r.exit_code = scan.singular.empty() ? kExitEmptyScan : kExitOk;
    out << format_report(r.report);
    out << format_singular(r.singular);
    return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Families of periodic walking gaits by numerical continuation"};
    app.require_subcommand(1);
    Flags f;

    auto add_model = [&](CLI::App* c) { c->add_option("--model", f.model, "model config (JSON)"); };
    auto add_scan = [&](CLI::App* c) {
        c->add_option("--interval", f.interval, "step-duration window a,b")->capture_default_str();
        c->add_option("--steps", f.steps, "scan subdivisions")->capture_default_str();
    };
    auto add_trace = [&](CLI::App* c) {
        c->add_option("--count", f.count, "points per curve")->capture_default_str();
        c->add_option("--step-size", f.step_size, "nominal continuation step")->capture_default_str();
        c->add_option("--seed-index", f.seed_index, "singular gait to start from");
    };

    auto* scan = app.add_subcommand("scan", "scan the indicator over a step-duration window");
    add_model(scan);
    add_scan(scan);
    scan->add_option("--out", f.out, "also write the scan as an archive");

    auto* trace = app.add_subcommand("trace", "trace gait branches from the singular equilibrium gaits");
    add_model(trace);
    add_scan(trace);
    add_trace(trace);
    trace->add_option("--out", f.out, "archive path")->required();

    auto* surface = app.add_subcommand("surface", "trace a gait manifold of dimension k+1");
    add_model(surface);
    add_scan(surface);
    add_trace(surface);
    surface->add_option("--out", f.out, "archive path")->required();

    auto* query = app.add_subcommand("query", "find a gait satisfying a query by homotopy");
    add_model(query);
    query->add_option("--archive", f.archive, "family archive")->required();
    query->add_option("--query", f.query, "query file (JSON)")->required();
    query->add_option("--seed-index", f.seed_index, "reference branch index");
    query->add_option("--gait-index", f.gait_index, "reference gait index in the branch");
    query->add_option("--out", f.out, "write the archive with the homotopy path appended");

    auto* exp = app.add_subcommand("export", "export an archive");
    exp->add_option("--archive", f.archive, "family archive")->required();
    exp->add_option("--format", f.format, "csv | svg-bifurcation | animation-frames")->capture_default_str();
    exp->add_option("--out", f.out, "output file (stdout if omitted)");

    auto* audit = app.add_subcommand("audit", "recompute the periodicity residual of every stored gait");
    add_model(audit);
    audit->add_option("--archive", f.archive, "family archive")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (scan->parsed()) return cmd_scan(f, out);
        if (trace->parsed()) return cmd_trace(f, out);
        if (surface->parsed()) return cmd_surface(f, out);
        if (query->parsed()) return cmd_query(f, out);
        if (exp->parsed()) return cmd_export(f, out);
        if (audit->parsed()) return cmd_audit(f, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("gaitcont");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gaitcont
