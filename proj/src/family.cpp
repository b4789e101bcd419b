#include "gaitcont/continuation.hpp"
#include "gaitcont/linalg.hpp"
#include "gaitcont/models.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

namespace gaitcont {

double indicator(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double tau,
                 const FlowOptions& opts) {
    GaitPoint c;
    c.x0 = x_eq;
    c.tau = tau;
    c.mu = mu;
    const int ns = model.dims().state();
    const Mat J = jacobian(model, c, opts).J.leftCols(ns);
    // Unstable equilibria amplify the difference step by the flow sensitivity G
    // until the perturbed runs leave the linear regime. Shrink the step to
    // balance that error, (delta G)^2, against roundoff, eps / delta.
    const double growth = (J + model.flip_matrix()).cwiseAbs().maxCoeff();
    if (growth <= 10.0) return J.determinant();
    FlowOptions fine = opts;
    fine.fd_step = opts.fd_step * std::pow(growth, -2.0 / 3.0);
    return jacobian(model, c, fine).J.leftCols(ns).determinant();
}

Vec normalize_sign(Vec v) {
    const double scale = v.cwiseAbs().maxCoeff();
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-6 * scale) {
            if (v(i) < 0) v = -v;
            break;
        }
    }
    return v;
}

Mat impact_jacobian(const HybridModel& model, const RobotState& x, double delta) {
    const int n = static_cast<int>(x.q.size());
    const Vec z = x.stacked();
    auto post = [&](const Vec& v) {
        RobotState s = RobotState::from_stacked(v);
        return RobotState(s.q, impact(model, s).qdot_plus).stacked();
    };
    Mat J(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        Vec e = Vec::Zero(2 * n);
        e(j) = delta * std::max(1.0, std::abs(z(j)));
        J.col(j) = (post(z + e) - post(z - e)) / (2 * e(j));
    }
    return J;
}

Vec post_impact_direction(const HybridModel& model, const RobotState& x, const Vec& tangent) {
    const int ns = 2 * static_cast<int>(x.q.size());
    Vec v = tangent;
    v.head(ns) = impact_jacobian(model, x) * tangent.head(ns);
    const double nv = v.norm();
    if (nv == 0) return v;
    return normalize_sign(v / nv);
}

Vec singular_tangent(const Mat& j0, int tau_index, int* null_dimension) {
    if (null_dimension) *null_dimension = static_cast<int>(null_space(j0, kNullCutoff).cols());
    // Smallest right singular vector with the time column removed.
    const int cols = static_cast<int>(j0.cols());
    Mat reduced(j0.rows(), cols - 1);
    reduced << j0.leftCols(tau_index), j0.rightCols(cols - tau_index - 1);
    Eigen::JacobiSVD<Mat> svd(reduced, Eigen::ComputeFullV);
    const Vec v = svd.matrixV().col(cols - 2);
    Vec t(cols);
    t << v.head(tau_index), 0.0, v.tail(cols - tau_index - 1);
    return normalize_sign(t.normalized());
}

namespace {

Mat m0_jacobian(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    const Dims d = model.dims();
    Mat J0 = Mat::Zero(d.state() + d.k, d.space());
    J0.topRows(d.state()) = jacobian(model, c, opts).J;
    J0.bottomRightCorner(d.k, d.k).setIdentity();
    return J0;
}

// Bracketed secant with bisection fallback.
double polish_root(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi,
                   const ScanOptions& opts, double* froot) {
    double best = std::abs(flo) < std::abs(fhi) ? lo : hi;
    double fbest = std::abs(flo) < std::abs(fhi) ? flo : fhi;
    bool bisect_next = false;
    for (int it = 0; it < opts.max_polish_iter; ++it) {
        if (std::abs(fbest) < opts.root_tol || hi - lo < opts.bracket_tol) break;
        double x = 0.5 * (lo + hi);
        if (!bisect_next && fhi != flo) {
            const double s = hi - fhi * (hi - lo) / (fhi - flo);
            if (s > lo && s < hi) x = s;
        }
        const double width = hi - lo;
        const double fx = f(x);
        if (std::abs(fx) < std::abs(fbest)) {
            best = x;
            fbest = fx;
        }
        if (fx == 0) break;
        if ((fx < 0) == (flo < 0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        // Force a bisection whenever the secant fails to halve the bracket.
        bisect_next = !bisect_next && (hi - lo) > 0.5 * width;
    }
    *froot = fbest;
    return best;
}

}  // namespace

ScanResult scan_indicator(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double a, double b,
                          int steps, const ScanOptions& opts) {
    if (!(a < b)) throw InputError("scan interval must satisfy a < b");
    if (!(a > 0)) throw InputError("scan interval must lie in tau > 0");
    if (steps < 1) throw InputError("scan needs at least one step");
    const Dims d = model.dims();
    if (mu.size() != d.k) throw InputError("mu has wrong dimension");

    auto I = [&](double tau) { return indicator(model, x_eq, mu, tau, opts.flow); };
    ScanResult out;
    const double h = (b - a) / steps;
    for (int i = 0; i <= steps; ++i) {
        const double tau = i == steps ? b : a + i * h;
        out.samples.push_back({tau, I(tau)});
    }

    std::vector<std::pair<double, double>> roots;
    for (int i = 1; i <= steps; ++i) {
        const IndicatorSample& l = out.samples[i - 1];
        const IndicatorSample& r = out.samples[i];
        if (l.value * r.value > 0) continue;
        if (l.value == 0 && i > 1) continue;  // already taken as the right end of the previous bracket
        if (l.value == 0 && r.value == 0) continue;
        double froot = 0;
        double root;
        if (l.value == 0)
            root = l.tau, froot = 0;
        else if (r.value == 0)
            root = r.tau, froot = 0;
        else
            root = polish_root(I, l.tau, r.tau, l.value, r.value, opts, &froot);
        roots.emplace_back(root, froot);
    }

    for (const auto& [root, froot] : roots) {
        SingularEG s;
        s.point.x0 = x_eq;
        s.point.tau = root;
        s.point.mu = mu;
        s.indicator_root = root;
        s.indicator_value = froot;
        s.tangent = singular_tangent(m0_jacobian(model, s.point, opts.flow), d.state(), &s.null_dimension);
        s.post_impact_tangent = post_impact_direction(model, x_eq, s.tangent);
        out.singular.push_back(std::move(s));
    }
    return out;
}

std::vector<SingularEG> scan_singular(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double a,
                                      double b, int steps, const ScanOptions& opts) {
    return scan_indicator(model, x_eq, mu, a, b, steps, opts).singular;
}

std::string to_string(ScanClass c) {
    switch (c) {
        case ScanClass::ConstantZero: return "constant-zero";
        case ScanClass::NoCrossing: return "no-crossing";
        case ScanClass::Ok: return "ok";
    }
    return "ok";
}

ScanClass classify_scan(const std::vector<IndicatorSample>& samples, std::size_t roots_found) {
    double peak = 0;
    for (const auto& s : samples) peak = std::max(peak, std::abs(s.value));
    if (peak < 1e-12) return ScanClass::ConstantZero;
    return roots_found == 0 ? ScanClass::NoCrossing : ScanClass::Ok;
}

std::string remediation(ScanClass c) {
    switch (c) {
        case ScanClass::ConstantZero:
            return "The indicator is identically zero: every equilibrium gait is singular. The model likely has a "
                   "coordinate that does not affect the dynamics or a flip map that leaves a direction unconstrained. "
                   "Check the model for decoupled or redundant coordinates and for controls that pin the state.";
        case ScanClass::NoCrossing:
            return "The indicator has no zero crossing in the scan window. Widen the window (larger upper bound on "
                   "the step duration), or seed from a different equilibrium or control value. If the indicator stays "
                   "bounded away from zero, the equilibria may not connect to walking gaits for these parameters.";
        case ScanClass::Ok: return "";
    }
    return "";
}

std::size_t GaitFamily::gait_count() const {
    std::size_t n = 0;
    for (const auto& b : branches) n += b.gaits.size();
    return n;
}

GaitRecord make_record(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    GaitRecord r;
    r.gait = c;
    r.residual_norm = periodicity(model, c, opts).residual.norm();
    if (const auto* gm = dynamic_cast<const GaitModel*>(&model)) {
        r.slope = gm->slope(c);
        r.step_length = gm->step_length(c);
        try {
            r.push_pull = push_pull(*gm, c, opts);
        } catch (const Error&) {
            r.push_pull = false;
        }
    }
    return r;
}

namespace {

Branch branch_from_curve(const HybridModel& model, const CurveResult& curve, const FlowOptions& flow) {
    Branch br;
    const int n = model.dims().n;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        br.gaits.push_back(make_record(model, GaitPoint::from_vector(curve.points[i], n), flow));
    br.complete = curve.complete;
    br.diagnostic = curve.diagnostic;
    return br;
}

unsigned thread_count(unsigned requested) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return requested == 0 ? hw : requested;
}

// Runs jobs on up to `threads` workers; results keep the job order.
template <class T>
std::vector<T> run_ordered(const std::vector<std::function<T()>>& jobs, unsigned threads) {
    std::vector<T> out(jobs.size());
    if (threads <= 1 || jobs.size() <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i]();
        return out;
    }
    std::size_t next = 0;
    while (next < jobs.size()) {
        std::vector<std::future<T>> batch;
        const std::size_t start = next;
        for (; next < jobs.size() && next - start < threads; ++next)
            batch.push_back(std::async(std::launch::async, jobs[next]));
        for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
    }
    return out;
}

}  // namespace

Branch trace_branch(std::shared_ptr<const HybridModel> model, const GaitPoint& seed, const Vec& tangent, int direction,
                    const CurveOptions& opts, const FlowOptions& flow) {
    const ContinuationMap map = constant_control_map(model, seed.mu, flow);
    CurveOptions o = opts;
    o.step = direction * std::abs(opts.step);
    const CurveResult curve = cm_curve(map, seed.to_vector(), tangent, o);
    Branch br = branch_from_curve(*model, curve, flow);
    br.seed = seed;
    br.tangent = tangent;
    br.direction = direction;
    br.map_kind = map.kind();
    br.map = map.descriptor();
    return br;
}

GaitFamily build_family(std::shared_ptr<const HybridModel> model, const GaitPoint& c_eq, double a, double b, int steps,
                        const FamilyOptions& opts) {
    validate_gait_point(c_eq, model->dims());
    GaitFamily fam;
    const ScanResult scan = scan_indicator(*model, c_eq.x0, c_eq.mu, a, b, steps, opts.scan);
    fam.indicator = scan.samples;
    fam.singular = scan.singular;
    fam.classification = classify_scan(scan.samples, scan.singular.size());
    if (scan.singular.empty()) {
        fam.diagnostic = remediation(fam.classification);
        return fam;
    }

    struct Job {
        int seed;
        int direction;
    };
    std::vector<Job> plan;
    std::vector<std::string> skipped;
    if (opts.seed_index >= static_cast<int>(scan.singular.size()))
        throw InputError("seed index " + std::to_string(opts.seed_index) + " out of range (" +
                         std::to_string(scan.singular.size()) + " singular gaits found)");
    for (std::size_t i = 0; i < scan.singular.size(); ++i) {
        if (opts.seed_index >= 0 && static_cast<int>(i) != opts.seed_index) continue;
        if (!scan.singular[i].switchable()) {
            std::ostringstream os;
            os << "seed " << i << " at tau=" << scan.singular[i].indicator_root << " has a "
               << scan.singular[i].null_dimension << "-dimensional null space; branch switching skipped";
            skipped.push_back(os.str());
            continue;
        }
        plan.push_back({static_cast<int>(i), 1});
        if (opts.both_signs) plan.push_back({static_cast<int>(i), -1});
    }

    std::vector<std::function<Branch()>> jobs;
    for (const Job& j : plan) {
        jobs.push_back([&, j] {
            const SingularEG& s = scan.singular[j.seed];
            return trace_branch(model, s.point, s.tangent, j.direction, opts.curve, opts.scan.flow);
        });
    }
    fam.branches = run_ordered(jobs, thread_count(opts.max_threads));
    for (std::size_t i = 0; i < fam.branches.size(); ++i) {
        Branch& br = fam.branches[i];
        br.seed_index = plan[i].seed;
        std::ostringstream os;
        os << "seed" << plan[i].seed << (plan[i].direction > 0 ? "+" : "-");
        br.label = os.str();
        if (plan[i].direction < 0 && i > 0 && plan[i - 1].seed == plan[i].seed) br.mirror_of = static_cast<int>(i - 1);
    }
    for (const auto& s : skipped) fam.diagnostic += (fam.diagnostic.empty() ? "" : "\n") + s;
    return fam;
}

MultiDimResult multi_dim(std::shared_ptr<const HybridModel> model, const SingularEG& seed, int d,
                         const MultiDimOptions& opts) {
    const Dims dims = model->dims();
    if (d < 0 || d > dims.k + 1) throw InputError("multi_dim dimension must lie in [0, k+1]");
    MultiDimResult out;
    out.points.push_back(seed.point);
    if (d == 0) return out;

    auto level_count = [&](int level) {
        return opts.counts.empty() ? opts.curve.count
                                   : opts.counts[std::min<std::size_t>(level - 1, opts.counts.size() - 1)];
    };
    auto level_step = [&](int level) {
        return opts.steps.empty() ? opts.curve.step
                                  : opts.steps[std::min<std::size_t>(level - 1, opts.steps.size() - 1)];
    };
    const int n = dims.n;
    const unsigned threads = thread_count(opts.max_threads);

    // Level 1: the constant-control curve through the singular gait.
    {
        CurveOptions co = opts.curve;
        co.count = level_count(1);
        co.step = level_step(1);
        Branch br = trace_branch(model, seed.point, seed.tangent, 1, co, opts.flow);
        br.level = 1;
        br.label = "L1";
        out.branches.push_back(std::move(br));
    }
    std::vector<GaitPoint> frontier{seed.point};
    for (const auto& g : out.branches.back().gaits) frontier.push_back(g.gait);

    for (int level = 2; level <= d; ++level) {
        const int free_index = level - 2;
        CurveOptions co = opts.curve;
        co.count = level_count(level);
        std::vector<std::function<std::vector<Branch>()>> jobs;
        for (std::size_t p = 0; p < frontier.size(); ++p) {
            jobs.push_back([&, p]() {
                const GaitPoint& g = frontier[p];
                const ContinuationMap map = constant_time_map(model, free_index, g.tau, g.mu, opts.flow);
                std::vector<Branch> local;
                Vec tangent;
                try {
                    const Mat N = tangent_basis(map, g.to_vector());
                    tangent = N.col(0);
                    // Orient along increasing free parameter.
                    if (tangent(2 * n + 1 + free_index) < 0) tangent = -tangent;
                } catch (const Error& e) {
                    Branch br;
                    br.level = level;
                    br.parent = static_cast<int>(p);
                    br.seed = g;
                    br.complete = false;
                    br.diagnostic = e.what();
                    local.push_back(std::move(br));
                    return local;
                }
                const int ndir = opts.both_directions ? 2 : 1;
                for (int k = 0; k < ndir; ++k) {
                    const int dir = k == 0 ? 1 : -1;
                    CurveOptions mine = co;
                    mine.step = dir * std::abs(level_step(level));
                    const CurveResult curve = cm_curve(map, g.to_vector(), tangent, mine);
                    Branch br = branch_from_curve(*model, curve, opts.flow);
                    br.level = level;
                    br.parent = static_cast<int>(p);
                    br.seed = g;
                    br.tangent = tangent;
                    br.direction = dir;
                    br.map_kind = map.kind();
                    br.map = map.descriptor();
                    std::ostringstream os;
                    os << "L" << level << "." << p << (dir > 0 ? "+" : "-");
                    br.label = os.str();
                    local.push_back(std::move(br));
                }
                return local;
            });
        }
        std::vector<GaitPoint> next;
        for (auto& group : run_ordered(jobs, threads)) {
            for (auto& br : group) {
                for (const auto& g : br.gaits) next.push_back(g.gait);
                out.branches.push_back(std::move(br));
            }
        }
        frontier.insert(frontier.end(), next.begin(), next.end());
    }
    for (const auto& br : out.branches)
        for (const auto& g : br.gaits) out.points.push_back(g.gait);
    return out;
}

NewtonResult polish_mirror(std::shared_ptr<const HybridModel> model, const GaitPoint& c, const FlowOptions& flow) {
    GaitPoint m = c;
    m.x0.q = -c.x0.q;
    m.x0.qdot = -c.x0.qdot;
    const ContinuationMap map = constant_control_map(model, c.mu, flow);
    return projected_newton(map, m.to_vector(), BoxBounds{});
}

}  // namespace gaitcont
