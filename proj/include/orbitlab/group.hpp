/**
 * @file group.hpp
 * @brief Group actions: exact finite permutation groups and the continuous
 *        group GL2(R) of invertible 2x2 real matrices.
 *
 * The finite side enumerates orbits and stabilizers exactly. The continuous
 * side supplies the element type, uniform sampling from a Frobenius ball and
 * the perturbation that moves a singular matrix onto a nearby invertible one.
 */
#pragma once

#include "orbitlab/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace orbitlab {

// ---------------------------------------------------------------------------
// GL2(R)
// ---------------------------------------------------------------------------

/// An invertible 2x2 real matrix. Construction rejects |det| <= kSingularDet.
class GL2Element {
public:
    explicit GL2Element(const Mat2& m) : m_(m), det_(m.determinant()) {
        if (!std::isfinite(det_) || std::abs(det_) <= kSingularDet) {
            throw UsageError("GL2Element: matrix is singular (|det| = " + std::to_string(std::abs(det_)) + ")");
        }
    }
    GL2Element(double a00, double a01, double a10, double a11) : GL2Element(make(a00, a01, a10, a11)) {}

    static GL2Element identity() { return GL2Element(Mat2::Identity()); }
    static GL2Element rotation(double radians) {
        const double c = std::cos(radians), s = std::sin(radians);
        return GL2Element(c, -s, s, c);
    }
    static GL2Element scaling(double sx, double sy) { return GL2Element(sx, 0.0, 0.0, sy); }

    const Mat2& matrix() const noexcept { return m_; }
    double det() const noexcept { return det_; }
    double operator()(int r, int c) const { return m_(r, c); }

    GL2Element inverse() const { return GL2Element(m_.inverse()); }
    Vec2 apply(const Vec2& p) const { return m_ * p; }

    friend GL2Element operator*(const GL2Element& a, const GL2Element& b) { return GL2Element(a.m_ * b.m_); }

private:
    static Mat2 make(double a00, double a01, double a10, double a11) {
        Mat2 m;
        m << a00, a01, a10, a11;
        return m;
    }

    Mat2 m_;
    double det_;
};

inline Vec2 apply(const GL2Element& g, const Vec2& p) { return g.apply(p); }

inline double frobenius_distance(const Mat2& a, const Mat2& b) { return (a - b).norm(); }

/// A sampling neighbourhood: the Frobenius ball of `radius` about `center`.
struct BallSpec {
    GL2Element center = GL2Element::identity();
    double radius = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw UsageError("BallSpec: radius must be positive");
    }
};

/// One uniform draw from the ball, treating the four entries as R^4.
/// Rejection from the bounding cube; singular draws are redrawn.
template <typename Engine>
GL2Element draw_from_ball(const Mat2& center, double radius, Engine& engine) {
    std::uniform_real_distribution<double> coord(-radius, radius);
    const double r2 = radius * radius;
    for (;;) {
        Mat2 offset;
        offset << coord(engine), coord(engine), coord(engine), coord(engine);
        if (offset.squaredNorm() > r2) continue;
        const Mat2 m = center + offset;
        if (std::abs(m.determinant()) <= kSingularDet) continue;
        return GL2Element(m);
    }
}

/// `count` uniform samples from the ball; bit-identical for equal specs.
inline std::vector<GL2Element> sample_ball(const BallSpec& spec, std::size_t count) {
    spec.validate();
    if (count == 0) throw UsageError("sample_ball: count must be >= 1");
    auto engine = stream_engine(spec.seed, 0);
    std::vector<GL2Element> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(draw_from_ball(spec.center.matrix(), spec.radius, engine));
    return out;
}

// ---------------------------------------------------------------------------
// Invertible perturbation
// ---------------------------------------------------------------------------

struct InvertiblePerturbation {
    Eigen::MatrixXd matrix;
    double t = 0.0;  ///< M = (1 - t) A + t B
};

/// Searches t' on the log grid {+-delta, +-delta/2, ...} down to 1e-15,
/// smallest magnitude first, for M = (1 - t')A + t'B with |det M| > kSingularDet.
/// A is returned untouched (t' = 0) when already invertible.
inline InvertiblePerturbation perturb_to_invertible(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double delta) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw UsageError("perturb_to_invertible: A and B must be square of equal size");
    }
    if (!(delta > 0.0)) throw UsageError("perturb_to_invertible: delta must be positive");
    if (std::abs(b.determinant()) <= kSingularDet) throw UsageError("perturb_to_invertible: B must be invertible");
    if (std::abs(a.determinant()) > kSingularDet) return {a, 0.0};

    std::vector<double> magnitudes;
    for (double t = delta; t >= 1e-15; t *= 0.5) magnitudes.push_back(t);
    std::reverse(magnitudes.begin(), magnitudes.end());

    for (double mag : magnitudes) {
        for (double t : {mag, -mag}) {
            Eigen::MatrixXd m = (1.0 - t) * a + t * b;
            if (std::abs(m.determinant()) > kSingularDet) return {std::move(m), t};
        }
    }
    throw NumericalError("perturb_to_invertible: no t' with |t'| <= delta gives |det| above threshold; delta too small");
}

inline GL2Element nearest_invertible(const Mat2& a, const GL2Element& b, double delta) {
    const auto result = perturb_to_invertible(Eigen::MatrixXd(a), Eigen::MatrixXd(b.matrix()), delta);
    return GL2Element(Mat2(result.matrix));
}

// ---------------------------------------------------------------------------
// Finite permutation groups
// ---------------------------------------------------------------------------

using Permutation = std::vector<int>;

inline Permutation compose(const Permutation& a, const Permutation& b) {
    // (a o b)(x) = a(b(x))
    Permutation out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = a[static_cast<std::size_t>(b[i])];
    return out;
}

inline Permutation invert(const Permutation& p) {
    Permutation out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
    return out;
}

inline Permutation identity_permutation(std::size_t n) {
    Permutation p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

/// A finite group given by its full element list, acting on a labelled ground set.
class FiniteAction {
public:
    FiniteAction(std::vector<Permutation> elements, std::vector<std::string> ground_set, std::string name = {})
        : elements_(std::move(elements)), ground_(std::move(ground_set)), name_(std::move(name)) {
        validate();
    }

    /// Cyclic group C_n rotating the vertices of an n-gon.
    static FiniteAction cyclic(int n) {
        check_degree(n);
        std::vector<Permutation> els;
        for (int k = 0; k < n; ++k) {
            Permutation p(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (i + k) % n;
            els.push_back(std::move(p));
        }
        return FiniteAction(std::move(els), vertex_labels(n), "C" + std::to_string(n));
    }

    /// Dihedral group D_n (order 2n) acting on the vertices of a regular n-gon.
    static FiniteAction dihedral(int n) {
        check_degree(n);
        if (n < 3) throw UsageError("dihedral group needs n >= 3");
        std::vector<Permutation> els;
        for (int k = 0; k < n; ++k) {
            Permutation rot(static_cast<std::size_t>(n)), ref(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                rot[static_cast<std::size_t>(i)] = (i + k) % n;
                ref[static_cast<std::size_t>(i)] = ((k - i) % n + n) % n;
            }
            els.push_back(std::move(rot));
            els.push_back(std::move(ref));
        }
        return FiniteAction(std::move(els), vertex_labels(n), "D" + std::to_string(n));
    }

    /// Full symmetric group S_n on {1, ..., n}.
    static FiniteAction symmetric(int n) {
        check_degree(n);
        std::vector<Permutation> els;
        Permutation p = identity_permutation(static_cast<std::size_t>(n));
        do {
            els.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
        std::vector<std::string> labels;
        for (int i = 1; i <= n; ++i) labels.push_back(std::to_string(i));
        return FiniteAction(std::move(els), std::move(labels), "S" + std::to_string(n));
    }

    /// Trivial group acting on `n` points.
    static FiniteAction trivial(int n) {
        check_degree(n);
        return FiniteAction({identity_permutation(static_cast<std::size_t>(n))}, vertex_labels(n), "C1");
    }

    /// Parses "C6", "D4", "S3" or "trivialN".
    static FiniteAction from_name(const std::string& name) {
        auto degree = [&](std::size_t prefix) {
            try {
                std::size_t used = 0;
                const int n = std::stoi(name.substr(prefix), &used);
                if (used != name.size() - prefix) throw UsageError("");
                return n;
            } catch (const std::exception&) {
                throw UsageError("unknown group '" + name + "' (expected C<n>, D<n>, S<n> or trivial<n>)");
            }
        };
        if (name.rfind("trivial", 0) == 0) return trivial(degree(7));
        if (name.empty()) throw UsageError("empty group name");
        switch (name[0]) {
            case 'C': return cyclic(degree(1));
            case 'D': return dihedral(degree(1));
            case 'S': return symmetric(degree(1));
            default: throw UsageError("unknown group '" + name + "' (expected C<n>, D<n>, S<n> or trivial<n>)");
        }
    }

    std::size_t order() const noexcept { return elements_.size(); }
    std::size_t degree() const noexcept { return ground_.size(); }
    const std::vector<Permutation>& elements() const noexcept { return elements_; }
    const std::vector<std::string>& ground_set() const noexcept { return ground_; }
    const std::string& name() const noexcept { return name_; }

    std::size_t index_of(const std::string& label) const {
        const auto it = std::find(ground_.begin(), ground_.end(), label);
        if (it == ground_.end()) throw UsageError("element '" + label + "' is not in the ground set");
        return static_cast<std::size_t>(it - ground_.begin());
    }

private:
    static void check_degree(int n) {
        if (n < 1 || n > 8) throw UsageError("built-in groups act on 1..8 points");
    }

    static std::vector<std::string> vertex_labels(int n) {
        std::vector<std::string> labels;
        for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i));
        return labels;
    }

    static std::uint64_t factorial(std::size_t n) {
        std::uint64_t f = 1;
        for (std::size_t i = 2; i <= n; ++i) f *= i;
        return f;
    }

    void validate() const {
        const std::size_t n = ground_.size();
        if (elements_.empty()) throw UsageError("FiniteAction: empty element list");
        std::set<Permutation> members;
        for (const auto& p : elements_) {
            if (p.size() != n) throw UsageError("FiniteAction: permutation size does not match ground set");
            std::vector<bool> seen(n, false);
            for (int v : p) {
                if (v < 0 || static_cast<std::size_t>(v) >= n || seen[static_cast<std::size_t>(v)]) {
                    throw UsageError("FiniteAction: element is not a permutation");
                }
                seen[static_cast<std::size_t>(v)] = true;
            }
            if (!members.insert(p).second) throw UsageError("FiniteAction: duplicate element");
        }
        if (!members.count(identity_permutation(n))) throw UsageError("FiniteAction: identity missing");
        // Every permutation of the ground set present: closed by counting.
        if (members.size() == factorial(n)) return;
        for (const auto& a : elements_) {
            if (!members.count(invert(a))) throw UsageError("FiniteAction: not closed under inversion");
            for (const auto& b : elements_) {
                if (!members.count(compose(a, b))) throw UsageError("FiniteAction: not closed under composition");
            }
        }
    }

    std::vector<Permutation> elements_;
    std::vector<std::string> ground_;
    std::string name_;
};

struct OrbitStabilizer {
    std::vector<std::size_t> orbit;       ///< ground indices, sorted
    std::vector<std::size_t> stabilizer;  ///< element indices into FiniteAction::elements()
};

inline OrbitStabilizer finite_orbit_stabilizer(const FiniteAction& action, std::size_t x) {
    if (x >= action.degree()) throw UsageError("finite_orbit_stabilizer: x outside ground set");
    std::set<std::size_t> orbit;
    OrbitStabilizer out;
    const auto& els = action.elements();
    for (std::size_t i = 0; i < els.size(); ++i) {
        const auto image = static_cast<std::size_t>(els[i][x]);
        orbit.insert(image);
        if (image == x) out.stabilizer.push_back(i);
    }
    out.orbit.assign(orbit.begin(), orbit.end());
    return out;
}

}  // namespace orbitlab
