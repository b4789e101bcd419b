#pragma once

#include "gaitcont/hybrid.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gaitcont {

enum class MapKind { ConstantControl, ConstantTime, Homotopy, Custom };

std::string to_string(MapKind kind);

struct MapEvaluation {
    Vec residual;
    Mat jacobian;
};

// Residual map M : S -> R^m used by every continuation kernel. The stacked
// residual is [P; Phi] where Phi holds the auxiliary constraints described by
// aux_spec.
class ContinuationMap {
public:
    using Evaluate = std::function<MapEvaluation(const Vec& c, bool with_jacobian)>;

    ContinuationMap(MapKind kind, int dim, int rows, Evaluate fn, std::vector<std::string> aux_spec);

    MapKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int rows() const { return rows_; }
    const std::vector<std::string>& aux_spec() const { return aux_spec_; }
    std::string descriptor() const;

    Vec residual(const Vec& c) const;
    MapEvaluation evaluate(const Vec& c) const;

private:
    MapKind kind_;
    int dim_;
    int rows_;
    Evaluate fn_;
    std::vector<std::string> aux_spec_;
};

// Phi_0(c) = mu - mu0.
ContinuationMap constant_control_map(std::shared_ptr<const HybridModel> model, Vec mu0,
                                     FlowOptions opts = {});

// Phi_i(c) = [tau - t, mu_j - upsilon_j for j != free_index].
ContinuationMap constant_time_map(std::shared_ptr<const HybridModel> model, int free_index, double t,
                                  Vec upsilon, FlowOptions opts = {});

// Residual given directly; the Jacobian defaults to central differences.
ContinuationMap custom_map(int dim, int rows, std::function<Vec(const Vec&)> residual,
                           std::function<Mat(const Vec&)> jacobian = {},
                           std::vector<std::string> aux_spec = {});

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& c, double rel_step = 1e-6);

// Orthonormal basis of Null(dM/dc) at c; singular values below
// 1e-8 * sigma_max count as zero.
Mat tangent_basis(const ContinuationMap& map, const Vec& c);
Mat tangent_basis(const HybridModel& model, const GaitPoint& c, const ContinuationMap& map);

}  // namespace gaitcont
