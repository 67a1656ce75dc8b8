/**
 * @file shadow.hpp
 * @brief Linear "shadow" of a network's action on a figure: the least-squares
 *        GL2 element matching sampled points to their images, plus numeric
 *        Jacobians of the reconstruction map and their invertible repair.
 */
#pragma once

#include "orbitlab/autoencoder.hpp"
#include "orbitlab/core.hpp"
#include "orbitlab/figures.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/stabilizer.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace orbitlab {

struct JacobianReport {
    MatrixXd matrix;
    double det = 0.0;
    double condition = std::numeric_limits<double>::infinity();  ///< sigma_max / sigma_min
    double fd_step = 0.0;
};

inline double condition_number(const MatrixXd& m) {
    const Eigen::BDCSVD<MatrixXd> svd(m);
    const VectorXd s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double lo = s(s.size() - 1);
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

/// Central-difference Jacobian of reconstruct() at `input`.
inline JacobianReport numeric_jacobian(const AEParams& net, const VectorXd& input, double step) {
    if (!(step >= 1e-7 && step <= 1e-2)) throw UsageError("numeric_jacobian: step must lie in [1e-7, 1e-2]");
    if (input.size() != net.input_dim()) throw UsageError("numeric_jacobian: input dimension mismatch");
    const Eigen::Index d = input.size();
    JacobianReport report;
    report.fd_step = step;
    report.matrix.resize(net.decode_weights.rows(), d);
    VectorXd probe = input;
    for (Eigen::Index j = 0; j < d; ++j) {
        probe(j) = input(j) + step;
        const VectorXd plus = reconstruct(net, probe);
        probe(j) = input(j) - step;
        const VectorXd minus = reconstruct(net, probe);
        probe(j) = input(j);
        report.matrix.col(j) = (plus - minus) / (2.0 * step);
    }
    report.det = report.matrix.rows() == report.matrix.cols() ? report.matrix.determinant() : 0.0;
    report.condition = condition_number(report.matrix);
    return report;
}

/// The Jacobian itself when invertible, else the nearest invertible matrix
/// on the segment toward the identity.
inline MatrixXd invertible_or_perturb(const JacobianReport& report, double delta) {
    if (!(delta > 0.0)) throw UsageError("invertible_or_perturb: delta must be positive");
    if (report.matrix.rows() != report.matrix.cols()) throw UsageError("invertible_or_perturb: Jacobian is not square");
    if (std::abs(report.det) > kSingularDet) return report.matrix;
    const auto n = report.matrix.rows();
    return perturb_to_invertible(report.matrix, MatrixXd::Identity(n, n), delta).matrix;
}

inline JacobianReport report_for(const MatrixXd& m) {
    JacobianReport r;
    r.matrix = m;
    r.det = m.determinant();
    r.condition = condition_number(m);
    return r;
}

// ---------------------------------------------------------------------------
// Shadow fit on the plane
// ---------------------------------------------------------------------------

struct ShadowFit {
    GL2Element g = GL2Element::identity();
    double rms_residual = 0.0;
    std::size_t point_count = 0;
    bool rank_deficient = false;  ///< input points span less than the plane
    bool perturbed = false;       ///< g was moved off a singular solution
};

inline constexpr double kShadowPerturbDelta = 1e-3;

/// Least-squares linear map g minimizing sum |g p_in - p_out|^2.
inline ShadowFit fit_shadow(const std::vector<Vec2>& points_in, const std::vector<Vec2>& points_out) {
    if (points_in.size() != points_out.size()) throw UsageError("fit_shadow: point lists differ in length");
    if (points_in.size() < 3) throw UsageError("fit_shadow: need at least 3 correspondences");
    Mat2 normal = Mat2::Zero(), cross = Mat2::Zero();
    for (std::size_t i = 0; i < points_in.size(); ++i) {
        normal += points_in[i] * points_in[i].transpose();
        cross += points_out[i] * points_in[i].transpose();
    }
    ShadowFit fit;
    fit.point_count = points_in.size();
    const double scale = normal.trace();
    Mat2 g;
    if (scale > 0.0 && normal.determinant() > kSingularDet * scale * scale) {
        g = cross * normal.inverse();
    } else {
        fit.rank_deficient = true;
        g = cross * Eigen::CompleteOrthogonalDecomposition<Mat2>(normal).pseudoInverse();
    }
    if (std::abs(g.determinant()) <= kSingularDet) {
        fit.perturbed = true;
        fit.g = nearest_invertible(g, GL2Element::identity(), kShadowPerturbDelta);
    } else {
        fit.g = GL2Element(g);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < points_in.size(); ++i) sum += (fit.g.apply(points_in[i]) - points_out[i]).squaredNorm();
    fit.rms_residual = std::sqrt(sum / static_cast<double>(points_in.size()));
    return fit;
}

// ---------------------------------------------------------------------------
// A network's action on a rasterized figure
// ---------------------------------------------------------------------------

struct NetworkFigureAction {
    RasterImage input;
    RasterImage output;    ///< reconstruction thresholded at `threshold`
    PointCloud readback;   ///< set output pixels as world points
};

inline NetworkFigureAction network_action(const AEParams& net, const Figure& f, int side, const Extent& extent,
                                          double threshold = 0.5) {
    NetworkFigureAction act;
    act.input = rasterize(f, side, extent);
    if (net.input_dim() != static_cast<Eigen::Index>(side) * side) {
        throw UsageError("network_action: network input size does not match the raster");
    }
    const VectorXd out = reconstruct(net, act.input.flatten());
    act.output = RasterImage(side, extent, act.input.label);
    for (Eigen::Index i = 0; i < out.size(); ++i) act.output.bits[static_cast<std::size_t>(i)] = out(i) > threshold ? 1 : 0;
    act.readback = act.output.to_point_cloud();
    return act;
}

/// Single-pass nearest-neighbour correspondence after moving the target
/// centroid onto the source centroid.
inline std::vector<Vec2> correspond(const std::vector<Vec2>& source, const std::vector<Vec2>& target) {
    if (target.empty()) throw NumericalError("correspond: empty target point set");
    Vec2 cs = Vec2::Zero(), ct = Vec2::Zero();
    for (const auto& p : source) cs += p;
    for (const auto& q : target) ct += q;
    cs /= static_cast<double>(source.size());
    ct /= static_cast<double>(target.size());
    const Vec2 shift = cs - ct;
    std::vector<Vec2> matched;
    matched.reserve(source.size());
    for (const auto& p : source) {
        double best = std::numeric_limits<double>::infinity();
        Vec2 pick = target.front() + shift;
        for (const auto& q : target) {
            const double d = (q + shift - p).squaredNorm();
            if (d < best) {
                best = d;
                pick = q + shift;
            }
        }
        matched.push_back(pick);
    }
    return matched;
}

struct ShadowExperiment {
    std::string figure_id;
    ShadowFit fit;
    double psi_distance = 0.0;       ///< d_H(psi(f), f)
    double eps = 0.0;
    bool transfer_applicable = false;  ///< psi_distance <= eps and rms <= eps
    bool transfer_ok = false;          ///< is_stabilizer(g, f, 4 eps)
};

inline constexpr double kTransferFactor = 4.0;

/// Reads the network's action on `f` back as a point set, fits the shadow
/// element and checks that stabilization carries over to it.
inline ShadowExperiment shadow_of_network(const std::string& id, const AEParams& net, const Figure& f, int side,
                                         const Extent& extent, double eps, std::size_t points = 64) {
    ShadowExperiment ex;
    ex.figure_id = id;
    ex.eps = eps;
    const auto action = network_action(net, f, side, extent);
    if (action.readback.points.empty()) throw NumericalError("shadow_of_network: network erased figure '" + id + "'");
    const std::size_t n = std::max(kDefaultFigureSamples, action.readback.points.size());
    ex.psi_distance = figure_distance(action.readback, f, n);
    const auto source = sample_points(f, points);
    ex.fit = fit_shadow(source, correspond(source, action.readback.points));
    ex.transfer_applicable = ex.psi_distance <= eps && ex.fit.rms_residual <= eps;
    ex.transfer_ok = is_stabilizer(ex.fit.g, f, kTransferFactor * eps);
    return ex;
}

}  // namespace orbitlab
