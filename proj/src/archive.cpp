#include "gaitcont/archive.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace gaitcont {

using nlohmann::ordered_json;
using json = ordered_json;

namespace {

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec json_vec(const json& a) {
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

json gait_json(const GaitPoint& c) {
    return json{{"q", vec_json(c.x0.q)}, {"qdot", vec_json(c.x0.qdot)}, {"tau", c.tau}, {"mu", vec_json(c.mu)}};
}

GaitPoint json_gait(const json& j) {
    GaitPoint c;
    c.x0 = RobotState(json_vec(j.at("q")), json_vec(j.at("qdot")));
    c.tau = j.at("tau").get<double>();
    c.mu = json_vec(j.at("mu"));
    return c;
}

MapKind parse_map_kind(const std::string& s) {
    for (MapKind k : {MapKind::ConstantControl, MapKind::ConstantTime, MapKind::Homotopy, MapKind::Custom})
        if (to_string(k) == s) return k;
    throw InputError("unknown map kind '" + s + "' in archive");
}

ScanClass parse_scan_class(const std::string& s) {
    for (ScanClass k : {ScanClass::ConstantZero, ScanClass::NoCrossing, ScanClass::Ok})
        if (to_string(k) == s) return k;
    throw InputError("unknown scan classification '" + s + "' in archive");
}

std::string fmt(double x, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

std::string fixed(double x, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

}  // namespace

std::size_t FamilyArchive::gait_count() const {
    std::size_t n = 0;
    for (const Branch& b : branches) n += b.gaits.size();
    return n;
}

FamilyArchive make_archive(const GaitModel& model, const GaitFamily& family, double a, double b, int steps) {
    FamilyArchive ar;
    ar.model = describe_model_json(model);
    ar.model_name = model.name();
    ar.parameters = model.parameters();
    ar.dims = model.dims();
    ar.scan_a = a;
    ar.scan_b = b;
    ar.scan_steps = steps;
    ar.indicator = family.indicator;
    ar.classification = to_string(family.classification);
    ar.singular = family.singular;
    ar.branches = family.branches;
    return ar;
}

std::string write_archive(const FamilyArchive& ar) {
    json j;
    j["schema_version"] = ar.schema_version;
    j["model"] = json::parse(ar.model);
    j["model_name"] = ar.model_name;
    json params = json::object();
    for (const auto& [k, v] : ar.parameters) params[k] = v;
    j["parameters"] = params;
    j["dims"] = {{"n", ar.dims.n}, {"n_p", ar.dims.n_p}, {"n_v", ar.dims.n_v}, {"n_u", ar.dims.n_u}, {"k", ar.dims.k}};
    j["scan"] = {{"a", ar.scan_a}, {"b", ar.scan_b}, {"steps", ar.scan_steps}, {"classification", ar.classification}};

    json ind = json::array();
    for (const IndicatorSample& s : ar.indicator) ind.push_back(json::array({s.tau, s.value}));
    j["indicator"] = ind;

    json sing = json::array();
    for (const SingularEG& s : ar.singular) {
        sing.push_back({{"point", gait_json(s.point)},
                        {"tangent", vec_json(s.tangent)},
                        {"post_impact_tangent", vec_json(s.post_impact_tangent)},
                        {"indicator_root", s.indicator_root},
                        {"indicator_value", s.indicator_value},
                        {"null_dimension", s.null_dimension}});
    }
    j["singular"] = sing;

    json branches = json::array();
    for (const Branch& b : ar.branches) {
        json gaits = json::array();
        for (const GaitRecord& r : b.gaits) {
            json g = gait_json(r.gait);
            g["residual_norm"] = r.residual_norm;
            g["slope"] = r.slope;
            g["step_length"] = r.step_length;
            g["push_pull"] = r.push_pull;
            gaits.push_back(std::move(g));
        }
        branches.push_back({{"label", b.label},
                            {"seed_index", b.seed_index},
                            {"direction", b.direction},
                            {"level", b.level},
                            {"parent", b.parent},
                            {"mirror_of", b.mirror_of},
                            {"seed", gait_json(b.seed)},
                            {"tangent", vec_json(b.tangent)},
                            {"map_kind", to_string(b.map_kind)},
                            {"map", b.map},
                            {"complete", b.complete},
                            {"diagnostic", b.diagnostic},
                            {"gaits", std::move(gaits)}});
    }
    j["branches"] = branches;

    json hom = json::array();
    for (const HomotopyRecord& h : ar.homotopy) {
        json path = json::array();
        for (const GhmIterate& it : h.path) {
            path.push_back({{"point", vec_json(it.point)},
                            {"p", it.p},
                            {"merit", it.merit},
                            {"lambda", it.lambda},
                            {"direction_residual", it.direction_residual},
                            {"manifold_residual", it.manifold_residual}});
        }
        hom.push_back({{"query", h.query},
                       {"branch", h.branch},
                       {"gait", h.gait},
                       {"reference", gait_json(h.reference)},
                       {"converged", h.converged},
                       {"reference_satisfied", h.reference_satisfied},
                       {"root", gait_json(h.root)},
                       {"slacks", vec_json(h.slacks)},
                       {"diagnostic", h.diagnostic},
                       {"path", std::move(path)}});
    }
    j["homotopy"] = hom;
    return j.dump(1) + "\n";
}

FamilyArchive read_archive(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("archive is not valid JSON: ") + e.what());
    }
    try {
        FamilyArchive ar;
        if (!j.contains("schema_version")) throw InputError("archive has no schema_version");
        ar.schema_version = j.at("schema_version").get<int>();
        if (ar.schema_version != kArchiveSchemaVersion)
            throw InputError("unsupported archive schema_version " + std::to_string(ar.schema_version));
        ar.model = j.at("model").dump();
        ar.model_name = j.at("model_name").get<std::string>();
        for (const auto& [k, v] : j.at("parameters").items()) ar.parameters[k] = v.get<double>();
        const json& d = j.at("dims");
        ar.dims = {d.at("n").get<int>(), d.at("n_p").get<int>(), d.at("n_v").get<int>(), d.at("n_u").get<int>(),
                   d.at("k").get<int>()};
        const json& sc = j.at("scan");
        ar.scan_a = sc.at("a").get<double>();
        ar.scan_b = sc.at("b").get<double>();
        ar.scan_steps = sc.at("steps").get<int>();
        ar.classification = sc.at("classification").get<std::string>();
        parse_scan_class(ar.classification);

        for (const json& s : j.at("indicator")) ar.indicator.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        for (const json& s : j.at("singular")) {
            SingularEG e;
            e.point = json_gait(s.at("point"));
            e.tangent = json_vec(s.at("tangent"));
            e.post_impact_tangent = json_vec(s.at("post_impact_tangent"));
            e.indicator_root = s.at("indicator_root").get<double>();
            e.indicator_value = s.at("indicator_value").get<double>();
            e.null_dimension = s.at("null_dimension").get<int>();
            ar.singular.push_back(std::move(e));
        }
        for (const json& b : j.at("branches")) {
            Branch br;
            br.label = b.at("label").get<std::string>();
            br.seed_index = b.at("seed_index").get<int>();
            br.direction = b.at("direction").get<int>();
            br.level = b.at("level").get<int>();
            br.parent = b.at("parent").get<int>();
            br.mirror_of = b.at("mirror_of").get<int>();
            br.seed = json_gait(b.at("seed"));
            br.tangent = json_vec(b.at("tangent"));
            br.map_kind = parse_map_kind(b.at("map_kind").get<std::string>());
            br.map = b.at("map").get<std::string>();
            br.complete = b.at("complete").get<bool>();
            br.diagnostic = b.at("diagnostic").get<std::string>();
            for (const json& g : b.at("gaits")) {
                GaitRecord r;
                r.gait = json_gait(g);
                r.residual_norm = g.at("residual_norm").get<double>();
                r.slope = g.at("slope").get<double>();
                r.step_length = g.at("step_length").get<double>();
                r.push_pull = g.at("push_pull").get<bool>();
                validate_gait_point(r.gait, ar.dims);
                br.gaits.push_back(std::move(r));
            }
            ar.branches.push_back(std::move(br));
        }
        for (const json& h : j.at("homotopy")) {
            HomotopyRecord r;
            r.query = h.at("query").get<std::string>();
            r.branch = h.at("branch").get<int>();
            r.gait = h.at("gait").get<int>();
            r.reference = json_gait(h.at("reference"));
            r.converged = h.at("converged").get<bool>();
            r.reference_satisfied = h.at("reference_satisfied").get<bool>();
            r.root = json_gait(h.at("root"));
            r.slacks = json_vec(h.at("slacks"));
            r.diagnostic = h.at("diagnostic").get<std::string>();
            for (const json& it : h.at("path")) {
                GhmIterate g;
                g.point = json_vec(it.at("point"));
                g.p = it.at("p").get<double>();
                g.merit = it.at("merit").get<double>();
                g.lambda = it.at("lambda").get<double>();
                g.direction_residual = it.at("direction_residual").get<double>();
                g.manifold_residual = it.at("manifold_residual").get<double>();
                r.path.push_back(std::move(g));
            }
            ar.homotopy.push_back(std::move(r));
        }
        return ar;
    } catch (const json::exception& e) {
        throw InputError(std::string("bad archive: ") + e.what());
    }
}

void save_archive(const FamilyArchive& archive, const std::string& path) {
    const std::string text = write_archive(archive);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write archive '" + path + "'");
    out << text;
    if (!out) throw InputError("failed writing archive '" + path + "'");
}

FamilyArchive load_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open archive '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_archive(ss.str());
}

std::shared_ptr<const GaitModel> archive_model(const FamilyArchive& archive) { return load_model_json(archive.model); }

DiagnosticReport make_report(const std::vector<IndicatorSample>& samples, std::size_t roots_found) {
    DiagnosticReport r;
    r.samples = samples;
    r.classification = classify_scan(samples, roots_found);
    r.remediation = remediation(r.classification);
    return r;
}

std::string format_report(const DiagnosticReport& report) {
    std::ostringstream os;
    os << "indicator I(tau) = det(dP/dx0) at the equilibrium\n";
    os << "        tau            I\n";
    for (const IndicatorSample& s : report.samples)
        os << "  " << fixed(s.tau, 6) << "  " << (s.value < 0 ? "" : " ") << fmt(s.value, 8) << "\n";
    os << "classification: " << to_string(report.classification) << "\n";
    if (!report.remediation.empty()) os << report.remediation << "\n";
    return os.str();
}

std::string summary_table(const FamilyArchive& ar) {
    constexpr double kDeg = 180.0 / 3.14159265358979323846;
    std::ostringstream os;
    os << "branch      gaits  slope range [rad]        slope range [deg]      tau range [s]\n";
    for (const Branch& b : ar.branches) {
        double smin = std::numeric_limits<double>::infinity(), smax = -smin;
        double tmin = smin, tmax = -smin;
        for (const GaitRecord& r : b.gaits) {
            smin = std::min(smin, r.slope), smax = std::max(smax, r.slope);
            tmin = std::min(tmin, r.gait.tau), tmax = std::max(tmax, r.gait.tau);
        }
        char line[256];
        if (b.gaits.empty()) {
            std::snprintf(line, sizeof line, "%-10s %6d  -\n", b.label.c_str(), 0);
        } else {
            std::snprintf(line, sizeof line, "%-10s %6zu  [%+.4f, %+.4f]   [%+8.3f, %+8.3f]   [%.4f, %.4f]%s\n",
                          b.label.c_str(), b.gaits.size(), smin, smax, smin * kDeg, smax * kDeg, tmin, tmax,
                          b.complete ? "" : "  (stopped early)");
        }
        os << line;
    }
    os << "total gaits: " << ar.gait_count() << "\n";
    return os.str();
}

std::string export_csv(const FamilyArchive& ar) {
    std::ostringstream os;
    const int n = ar.dims.n;
    os << "branch,index,level";
    for (int i = 0; i < n; ++i) os << ",q" << i + 1;
    for (int i = 0; i < n; ++i) os << ",qdot" << i + 1;
    os << ",tau";
    for (int i = 0; i < ar.dims.k; ++i) os << ",mu" << i;
    os << ",residual_norm,slope_rad,slope_deg,step_length,push_pull\n";
    os.precision(17);
    for (const Branch& b : ar.branches) {
        for (std::size_t i = 0; i < b.gaits.size(); ++i) {
            const GaitRecord& r = b.gaits[i];
            os << b.label << "," << i << "," << b.level;
            for (int k = 0; k < n; ++k) os << "," << r.gait.x0.q(k);
            for (int k = 0; k < n; ++k) os << "," << r.gait.x0.qdot(k);
            os << "," << r.gait.tau;
            for (Eigen::Index k = 0; k < r.gait.mu.size(); ++k) os << "," << r.gait.mu(k);
            os << "," << r.residual_norm << "," << r.slope << "," << r.slope * 180.0 / 3.14159265358979323846 << ","
               << r.step_length << "," << (r.push_pull ? 1 : 0) << "\n";
        }
    }
    return os.str();
}

std::string export_svg(const FamilyArchive& ar) {
    // sigma (vertical) against tau (horizontal)
    double tmin = ar.scan_a, tmax = ar.scan_b, smin = -0.1, smax = 0.1;
    for (const Branch& b : ar.branches)
        for (const GaitRecord& r : b.gaits) {
            tmin = std::min(tmin, r.gait.tau), tmax = std::max(tmax, r.gait.tau);
            smin = std::min(smin, r.slope), smax = std::max(smax, r.slope);
        }
    if (!(tmax > tmin)) tmax = tmin + 1;
    const double W = 800, Hh = 600, pad = 60;
    auto X = [&](double t) { return pad + (t - tmin) / (tmax - tmin) * (W - 2 * pad); };
    auto Y = [&](double s) { return Hh - pad - (s - smin) / (smax - smin) * (Hh - 2 * pad); };

    static const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" viewBox=\"0 0 "
       << W << " " << Hh << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line class=\"axis\" x1=\"" << pad << "\" y1=\"" << Hh - pad << "\" x2=\"" << W - pad << "\" y2=\""
       << Hh - pad << "\" stroke=\"black\"/>\n";
    os << "<line class=\"axis\" x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << Hh - pad
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << Hh - 15 << "\" text-anchor=\"middle\">tau [s]</text>\n";
    os << "<text x=\"15\" y=\"" << Hh / 2 << "\" transform=\"rotate(-90 15 " << Hh / 2
       << ")\" text-anchor=\"middle\">slope [rad]</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double t = tmin + i * (tmax - tmin) / 4, s = smin + i * (smax - smin) / 4;
        os << "<text x=\"" << fixed(X(t), 1) << "\" y=\"" << Hh - pad + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << fixed(t, 2) << "</text>\n";
        os << "<text x=\"" << pad - 6 << "\" y=\"" << fixed(Y(s), 1) << "\" text-anchor=\"end\" font-size=\"11\">"
           << fixed(s, 2) << "</text>\n";
    }
    // equilibrium gaits have zero slope for every tau
    os << "<line class=\"equilibrium\" x1=\"" << fixed(X(tmin), 2) << "\" y1=\"" << fixed(Y(0), 2) << "\" x2=\""
       << fixed(X(tmax), 2) << "\" y2=\"" << fixed(Y(0), 2)
       << "\" stroke=\"#cc0000\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
    for (std::size_t bi = 0; bi < ar.branches.size(); ++bi) {
        const Branch& b = ar.branches[bi];
        os << "<polyline class=\"branch\" data-label=\"" << b.label << "\" fill=\"none\" stroke=\"" << colors[bi % 6]
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < b.gaits.size(); ++i)
            os << (i ? " " : "") << fixed(X(b.gaits[i].gait.tau), 2) << "," << fixed(Y(b.gaits[i].slope), 2);
        os << "\"/>\n";
    }
    for (const SingularEG& s : ar.singular) {
        os << "<circle class=\"singular\" data-tau=\"" << fmt(s.point.tau, 10) << "\" cx=\"" << fixed(X(s.point.tau), 2)
           << "\" cy=\"" << fixed(Y(0), 2) << "\" r=\"5\" fill=\"black\" stroke=\"#cc0000\" stroke-width=\"2\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string export_frames(const GaitModel& model, const FamilyArchive& ar, double fps) {
    if (!(fps > 0)) throw InputError("frame rate must be positive");
    const auto* cg = dynamic_cast<const CompassGait*>(&model);
    json out;
    out["fps"] = fps;
    out["model"] = json::parse(ar.model);
    json gaits = json::array();
    for (const Branch& b : ar.branches) {
        for (std::size_t i = 0; i < b.gaits.size(); ++i) {
            const GaitPoint& c = b.gaits[i].gait;
            const Trajectory traj = flow_trajectory(model, c);
            const int frames = static_cast<int>(std::floor(c.tau * fps + 1e-9)) + 1;
            json fr = json::array();
            for (int f = 0; f < frames; ++f) {
                const double t = std::min(f / fps, c.tau);
                const RobotState x = RobotState::from_stacked(traj.at(t));
                json frame{{"t", t}, {"q", vec_json(x.q)}};
                if (cg) {
                    const Eigen::Vector2d hip = cg->hip_position(x.q), foot = cg->swing_foot_position(x.q);
                    frame["hip"] = {hip(0), hip(1)};
                    frame["swing_foot"] = {foot(0), foot(1)};
                }
                fr.push_back(std::move(frame));
            }
            gaits.push_back({{"branch", b.label}, {"index", i}, {"tau", c.tau}, {"frames", std::move(fr)}});
        }
    }
    out["gaits"] = gaits;
    return out.dump() + "\n";
}

AuditResult audit_archive(const GaitModel& model, const FamilyArchive& ar, const FlowOptions& opts) {
    AuditResult res;
    for (const Branch& b : ar.branches) {
        for (std::size_t i = 0; i < b.gaits.size(); ++i) {
            const GaitRecord& r = b.gaits[i];
            AuditEntry e{b.label, static_cast<int>(i), r.residual_norm, periodicity(model, r.gait, opts).residual.norm()};
            res.max_residual = std::max(res.max_residual, e.recomputed);
            res.max_mismatch = std::max(res.max_mismatch, std::abs(e.recomputed - e.stored));
            res.entries.push_back(std::move(e));
        }
    }
    return res;
}

}  // namespace gaitcont
