#include "gaitcont/homotopy.hpp"

#include "gaitcont/linalg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace gaitcont {

std::string to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::Equality: return "=";
        case ConstraintKind::SlackInequality: return ">=";
        case ConstraintKind::IntegralPenalty: return "integral>=0";
    }
    return "=";
}

double integral_penalty(const HybridModel& model, const GaitPoint& c, const PathFunction& d, const FlowOptions& opts,
                        double tol) {
    const Trajectory traj = flow_trajectory(model, c, opts);
    auto negative_part = [&](double t) {
        const double v = d(c, t, RobotState::from_stacked(traj.at(t)));
        return v < 0 ? v : 0.0;
    };
    double error = 0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(negative_part, 0.0, c.tau, 15, tol, &error);
}

std::vector<std::string> quantity_names() {
    return {"slope", "step_length", "average_velocity", "duration", "amplitude", "peak_input", "foot_clearance"};
}

std::function<double(const GaitPoint&)> quantity_evaluator(std::shared_ptr<const GaitModel> model,
                                                           const std::string& name, const FlowOptions& opts) {
    if (name == "slope") return [model](const GaitPoint& c) { return model->slope(c); };
    if (name == "step_length") return [model](const GaitPoint& c) { return model->step_length(c); };
    if (name == "average_velocity")
        return [model](const GaitPoint& c) { return model->step_length(c) / c.tau; };
    if (name == "duration") return [](const GaitPoint& c) { return c.tau; };
    if (name == "amplitude") {
        const int idx = model->amplitude_index();
        if (idx < 0) throw InputError("model has no actuation amplitude");
        return [idx](const GaitPoint& c) { return c.mu(idx); };
    }
    if (name == "peak_input") return [model](const GaitPoint& c) { return model->peak_input(c); };
    if (name == "foot_clearance" || name == "swing_foot_height") {
        return [model, opts](const GaitPoint& c) {
            const double sigma = model->slope(c);
            return integral_penalty(
                *model, c,
                [&](const GaitPoint&, double, const RobotState& x) { return model->swing_foot_height(x, sigma); },
                opts);
        };
    }
    throw InputError("unknown query quantity '" + name + "'");
}

HomotopyProblem::HomotopyProblem(std::shared_ptr<const HybridModel> model, std::vector<QueryConstraint> constraints,
                                 const GaitPoint& reference, FlowOptions opts)
    : model_(std::move(model)), constraints_(std::move(constraints)), opts_(opts) {
    validate_gait_point(reference, model_->dims());
    if (constraints_.empty()) throw InputError("query needs at least one constraint");
    gait_dim_ = model_->dims().space();
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        if (!constraints_[i].evaluator) throw InputError("query constraint has no evaluator");
        if (constraints_[i].kind == ConstraintKind::SlackInequality) slack_rows_.push_back(static_cast<int>(i));
    }
    a_ = extend(reference);
    h_a_ = H(a_);
    h_a_sq_ = h_a_.squaredNorm();
    const int q = query_rows();
    const Mat Q = Eigen::HouseholderQR<Mat>(Mat(h_a_)).householderQ() * Mat::Identity(q, q);
    complement_ = Q.rightCols(q - 1);
}

int HomotopyProblem::rows() const { return model_->dims().state() + g_rows(); }

Vec HomotopyProblem::extend(const GaitPoint& c) const {
    Vec ext(dim());
    ext.head(gait_dim_) = c.to_vector();
    for (std::size_t j = 0; j < slack_rows_.size(); ++j) {
        const QueryConstraint& q = constraints_[slack_rows_[j]];
        ext(gait_dim_ + j) = std::max(q.evaluator(c) - q.target, 0.0);
    }
    return ext;
}

GaitPoint HomotopyProblem::gait(const Vec& ext) const {
    return GaitPoint::from_vector(ext.head(gait_dim_), model_->dims().n);
}

Vec HomotopyProblem::slacks(const Vec& ext) const { return ext.tail(slack_count()); }

Vec HomotopyProblem::H(const Vec& ext) const {
    const GaitPoint c = gait(ext);
    Vec h(query_rows());
    int slack = 0;
    for (int i = 0; i < query_rows(); ++i) {
        const QueryConstraint& q = constraints_[i];
        const double v = q.evaluator(c);
        switch (q.kind) {
            case ConstraintKind::Equality: h(i) = v - q.target; break;
            case ConstraintKind::SlackInequality: h(i) = v - q.target - ext(gait_dim_ + slack++); break;
            case ConstraintKind::IntegralPenalty: h(i) = v; break;
        }
    }
    return h;
}

double HomotopyProblem::p_from_H(const Vec& h) const {
    if (!(h_a_sq_ > 0)) throw DegenerateReferenceError("reference already satisfies the query (H(a) = 0)");
    return h_a_.dot(h) / h_a_sq_;
}

double HomotopyProblem::p(const Vec& ext) const { return p_from_H(H(ext)); }

Vec HomotopyProblem::G(const Vec& ext) const {
    const Vec h = H(ext);
    return complement_.transpose() * (h - p_from_H(h) * h_a_);
}

Vec HomotopyProblem::residual(const Vec& ext) const {
    const int ns = model_->dims().state();
    Vec r(rows());
    r.head(ns) = periodicity(*model_, gait(ext), opts_).residual;
    r.tail(g_rows()) = G(ext);
    return r;
}

MapEvaluation HomotopyProblem::evaluate(const Vec& ext, Vec* grad_p) const {
    if (!(h_a_sq_ > 0)) throw DegenerateReferenceError("reference already satisfies the query (H(a) = 0)");
    const int ns = model_->dims().state();
    const GaitPoint c = gait(ext);
    const JacobianResult jr = jacobian(*model_, c, opts_);

    // dH/dc by central differences over the gait coordinates; slack columns
    // are exact.
    const Vec h = H(ext);
    Mat JH = Mat::Zero(query_rows(), dim());
    for (int j = 0; j < gait_dim_; ++j) {
        const double delta = opts_.fd_step * std::max(1.0, std::abs(ext(j)));
        Vec ep = ext, em = ext;
        ep(j) += delta;
        em(j) -= delta;
        JH.col(j) = (H(ep) - H(em)) / (2 * delta);
    }
    int slack = 0;
    for (int i = 0; i < query_rows(); ++i)
        if (constraints_[i].kind == ConstraintKind::SlackInequality) JH(i, gait_dim_ + slack++) = -1.0;

    const Vec gp = JH.transpose() * h_a_ / h_a_sq_;
    MapEvaluation ev;
    ev.residual.resize(rows());
    ev.residual.head(ns) = jr.residual;
    ev.residual.tail(g_rows()) = complement_.transpose() * (h - p_from_H(h) * h_a_);
    ev.jacobian = Mat::Zero(rows(), dim());
    ev.jacobian.topLeftCorner(ns, gait_dim_) = jr.J;
    ev.jacobian.bottomRows(g_rows()) = complement_.transpose() * (JH - h_a_ * gp.transpose());
    if (grad_p) *grad_p = gp;
    return ev;
}

ContinuationMap HomotopyProblem::as_map() const {
    std::vector<std::string> aux;
    for (const auto& q : constraints_) {
        std::ostringstream os;
        os.precision(17);
        os << "G: " << q.quantity << " " << to_string(q.kind);
        if (q.kind != ConstraintKind::IntegralPenalty) os << " " << q.target;
        aux.push_back(os.str());
    }
    // The map shares this problem's state; copy it into the closure.
    auto self = std::make_shared<HomotopyProblem>(*this);
    return ContinuationMap(
        MapKind::Homotopy, dim(), rows(),
        [self](const Vec& c, bool with_jacobian) {
            if (with_jacobian) return self->evaluate(c);
            MapEvaluation ev;
            ev.residual = self->residual(c);
            return ev;
        },
        aux);
}

BoxBounds HomotopyProblem::bounds() const {
    BoxBounds b = BoxBounds::unbounded(dim());
    b.lower.tail(slack_count()).setZero();
    return b;
}

Vec ghm_residual(std::shared_ptr<const HybridModel> model, const std::vector<QueryConstraint>& constraints,
                 const GaitPoint& a, const GaitPoint& c, const FlowOptions& opts) {
    const HomotopyProblem prob(std::move(model), constraints, a, opts);
    if (!(prob.reference_query().squaredNorm() > 0))
        throw DegenerateReferenceError("reference already satisfies the query (H(a) = 0)");
    return prob.residual(prob.extend(c));
}

GhmResult ghm_solve(std::shared_ptr<const HybridModel> model, const std::vector<QueryConstraint>& constraints,
                    const GaitPoint& a, const GhmOptions& opts) {
    if (!(opts.alpha > 0 && opts.alpha < 0.5)) throw InputError("Armijo alpha must lie in (0, 1/2)");
    if (!(opts.beta > 0 && opts.beta < 1)) throw InputError("Armijo beta must lie in (0, 1)");
    if (opts.max_iterations < 0) throw InputError("iteration count must be nonnegative");

    const HomotopyProblem prob(model, constraints, a, opts.flow);
    GhmResult out;
    Vec c = prob.reference();

    if (prob.reference_query().norm() < opts.p_tol) {
        out.converged = true;
        out.reference_satisfied = true;
        out.root = a;
        out.slacks = prob.slacks(c);
        GhmIterate it;
        it.point = c;
        it.p = 0;
        it.merit = 0;
        out.path.push_back(it);
        out.diagnostic = "reference gait already satisfies the query";
        return out;
    }

    const ContinuationMap map = prob.as_map();
    const BoxBounds bounds = prob.bounds();
    Vec grad_p;
    MapEvaluation ev = prob.evaluate(c, &grad_p);
    double p = prob.p_from_H(prob.H(c));
    {
        GhmIterate it;
        it.point = c;
        it.p = p;
        it.merit = 0.5 * p * p;
        it.manifold_residual = ev.residual.norm();
        out.path.push_back(it);
    }

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        if (std::abs(p) < opts.p_tol) break;
        // Slacks sitting on their bound that the descent direction would push
        // out of the box are frozen and the direction recomputed.
        Mat A = ev.jacobian;
        Mat T;
        Vec dir;
        for (;;) {
            T = null_space(A, kNullCutoff);
            if (T.cols() == 0) break;
            const Vec g = T.transpose() * grad_p;
            if (!(g.norm() > 0)) throw StalledDescentError("gradient of p vanishes on the manifold", c, p);
            dir = T * (-g * (p / g.squaredNorm()));
            int blocked = -1;
            for (int j = prob.gait_dim(); j < prob.dim(); ++j)
                if (c(j) <= bounds.lower(j) + 1e-12 && dir(j) < -1e-12 * dir.norm()) blocked = j;
            if (blocked < 0) break;
            A.conservativeResize(A.rows() + 1, Eigen::NoChange);
            A.row(A.rows() - 1) = Vec::Unit(prob.dim(), blocked).transpose();
        }
        if (T.cols() == 0) {
            out.diagnostic = "homotopy manifold has no tangent directions at the current iterate";
            break;
        }
        const double dn = dir.norm();
        const double dir_res = (ev.jacobian * dir).norm() / dn;

        // Armijo backtracking on f = p^2 / 2; along dir, df = -p^2.
        const double f_c = 0.5 * p * p;
        double lambda = 1.0;
        Vec z;
        double p_z = 0;
        for (;;) {
            if (lambda < opts.min_lambda) {
                std::ostringstream os;
                os << "line search stalled after " << iter - 1 << " accepted iterates (p = " << p << ")";
                throw StalledDescentError(os.str(), c, p);
            }
            bool accepted = false;
            try {
                z = cm_step(map, c, dir / dn, lambda * dn, opts.newton, bounds).point;
                p_z = prob.p(z);
                accepted = 0.5 * p_z * p_z - f_c <= -opts.alpha * lambda * p * p;
            } catch (const StepFailure&) {
                accepted = false;
            } catch (const Error&) {
                accepted = false;
            }
            if (accepted) break;
            lambda *= opts.beta;
        }

        c = z;
        ev = prob.evaluate(c, &grad_p);
        p = p_z;
        GhmIterate it;
        it.point = c;
        it.p = p;
        it.merit = 0.5 * p * p;
        it.lambda = lambda;
        it.direction_residual = dir_res;
        it.manifold_residual = ev.residual.norm();
        out.path.push_back(it);
    }

    out.converged = std::abs(p) < opts.p_tol;
    out.root = prob.gait(c);
    out.slacks = prob.slacks(c);
    if (!out.converged && out.diagnostic.empty()) {
        std::ostringstream os;
        os << "no root after " << opts.max_iterations << " iterates (|p| = " << std::abs(p) << ")";
        out.diagnostic = os.str();
    }
    return out;
}

namespace {

using nlohmann::json;

ConstraintKind parse_op(const std::string& op) {
    if (op == "=" || op == "==") return ConstraintKind::Equality;
    if (op == ">=") return ConstraintKind::SlackInequality;
    if (op == "integral>=0") return ConstraintKind::IntegralPenalty;
    throw InputError("unknown query operator '" + op + "' (expected =, >= or integral>=0)");
}

}  // namespace

QuerySpec load_query_json(std::shared_ptr<const GaitModel> model, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("query file is not valid JSON: ") + e.what());
    }
    QuerySpec spec;
    try {
        if (!j.contains("constraints") || !j.at("constraints").is_array() || j.at("constraints").empty())
            throw InputError("query needs a non-empty 'constraints' list");
        for (const auto& c : j.at("constraints")) {
            QueryConstraint q;
            q.quantity = c.at("quantity").get<std::string>();
            q.kind = parse_op(c.value("op", std::string("=")));
            q.target = c.value("target", 0.0);
            if (q.kind == ConstraintKind::IntegralPenalty && q.quantity != "swing_foot_height")
                throw InputError("integral constraints are defined for 'swing_foot_height' only");
            q.evaluator = quantity_evaluator(model, q.quantity, spec.options.flow);
            spec.constraints.push_back(std::move(q));
        }
        spec.options.alpha = j.value("alpha", spec.options.alpha);
        spec.options.beta = j.value("beta", spec.options.beta);
        spec.options.max_iterations = j.value("max_iterations", spec.options.max_iterations);
        spec.options.p_tol = j.value("p_tolerance", spec.options.p_tol);
        if (j.contains("reference")) {
            spec.branch = j.at("reference").value("branch", -1);
            spec.gait = j.at("reference").value("gait", -1);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad query file: ") + e.what());
    }
    return spec;
}

QuerySpec load_query_file(std::shared_ptr<const GaitModel> model, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open query file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_query_json(std::move(model), ss.str());
}

}  // namespace gaitcont
