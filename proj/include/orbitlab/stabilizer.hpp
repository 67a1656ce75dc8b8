/**
 * @file stabilizer.hpp
 * @brief Monte Carlo estimation of epsilon-stabilizer volumes in GL2(R) and
 *        random-walk first-hit experiments.
 *
 * Exact stabilizers have measure zero, so a figure's stabilizer is thickened:
 * S_eps(f) = { g : d_H(g.f, f) <= eps }. For a stabilizer of codimension k the
 * fraction of a ball falling in S_eps scales like eps^k, and k is recovered
 * as the slope of log(hit fraction) against log(eps).
 */
#pragma once

#include "orbitlab/core.hpp"
#include "orbitlab/figures.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace orbitlab {

/// Caches a figure's samples so the same figure can be tested against many
/// group elements.
class StabilizerProbe {
public:
    explicit StabilizerProbe(Figure f, std::size_t samples = kDefaultFigureSamples)
        : figure_(std::move(f)), samples_(sample_points(figure_, samples)), order_(detail::spread_order(samples)) {}

    /// d_H(g.f, f) measured on g applied to the cached samples. May return
    /// early with any value above `cap`.
    double distance(const GL2Element& g, double cap = std::numeric_limits<double>::infinity()) const {
        if (samples_.empty()) return 0.0;
        std::vector<Vec2> moved(samples_.size());
        const Mat2& m = g.matrix();
        for (std::size_t i = 0; i < samples_.size(); ++i) moved[i] = m * samples_[i];
        const double forward = detail::directed_distance(moved, figure_, cap, order_);
        if (forward > cap) return forward;
        const Figure image = transform(g, figure_);
        return std::max(forward, detail::directed_distance(samples_, image, cap, order_));
    }

    bool is_stabilizer(const GL2Element& g, double eps) const { return distance(g, eps) <= eps; }

    const Figure& figure() const noexcept { return figure_; }

private:
    Figure figure_;
    std::vector<Vec2> samples_;
    std::vector<std::size_t> order_;
};

inline bool is_stabilizer(const GL2Element& g, const Figure& f, double eps,
                          std::size_t samples = kDefaultFigureSamples) {
    return StabilizerProbe(f, samples).is_stabilizer(g, eps);
}

/// Distance to the hyperplane {g : g00 = 1}; an analytic codimension-1 set
/// used to calibrate the estimator.
inline double hyperplane_distance(const GL2Element& g, double /*cap*/ = 0.0) { return std::abs(g(0, 0) - 1.0); }

// ---------------------------------------------------------------------------
// Stabilizer volume estimates
// ---------------------------------------------------------------------------

struct StabEstimate {
    std::string figure_id;
    std::vector<double> eps_grid;
    std::vector<std::uint64_t> hits;
    std::vector<double> hit_fraction;
    std::vector<bool> usable;  ///< hits >= kMinHits; only these enter the fit
    std::uint64_t sample_count = 0;
    double codim_fit = 0.0;
    double codim_stderr = 0.0;
    std::uint64_t seed = 0;

    static constexpr std::uint64_t kMinHits = 20;

    double stderr_at(std::size_t i) const {
        const double p = hit_fraction[i];
        return std::sqrt(p * (1.0 - p) / static_cast<double>(sample_count));
    }
};

using DistanceFn = std::function<double(const GL2Element&, double cap)>;

inline constexpr std::size_t kMonteCarloBlock = 1u << 15;

/// Hit counts of `distance <= eps` for every eps, over `count` uniform ball
/// samples. Sample blocks use fixed seeds, so totals do not depend on `workers`.
inline std::vector<std::uint64_t> count_hits(const DistanceFn& distance, const BallSpec& ball,
                                             const std::vector<double>& eps_grid, std::uint64_t count,
                                             unsigned workers = 1) {
    ball.validate();
    const double cap = *std::max_element(eps_grid.begin(), eps_grid.end());
    const std::size_t blocks = static_cast<std::size_t>((count + kMonteCarloBlock - 1) / kMonteCarloBlock);
    auto per_block = parallel_map<std::vector<std::uint64_t>>(blocks, workers, [&](std::size_t b) {
        auto engine = stream_engine(ball.seed, b);
        const std::uint64_t begin = static_cast<std::uint64_t>(b) * kMonteCarloBlock;
        const std::uint64_t end = std::min<std::uint64_t>(count, begin + kMonteCarloBlock);
        std::vector<std::uint64_t> hits(eps_grid.size(), 0);
        for (std::uint64_t i = begin; i < end; ++i) {
            const GL2Element g = draw_from_ball(ball.center.matrix(), ball.radius, engine);
            const double d = distance(g, cap);
            for (std::size_t k = 0; k < eps_grid.size(); ++k) hits[k] += d <= eps_grid[k] ? 1 : 0;
        }
        return hits;
    });
    std::vector<std::uint64_t> total(eps_grid.size(), 0);
    for (const auto& h : per_block)
        for (std::size_t k = 0; k < h.size(); ++k) total[k] += h[k];
    return total;
}

/// Least-squares slope of log(fraction) on log(eps) over usable cells; the
/// standard error propagates the binomial variance of each log fraction.
inline void fit_codimension(StabEstimate& est) {
    std::vector<double> xs, ys, vars;
    for (std::size_t i = 0; i < est.eps_grid.size(); ++i) {
        if (!est.usable[i]) continue;
        xs.push_back(std::log(est.eps_grid[i]));
        ys.push_back(std::log(est.hit_fraction[i]));
        vars.push_back((1.0 - est.hit_fraction[i]) / static_cast<double>(est.hits[i]));
    }
    if (xs.size() < 2) {
        throw NumericalError("stabilizer_fraction: insufficient hits for '" + est.figure_id +
                             "' (fewer than 2 eps values with >= 20 hits)");
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    est.codim_fit = sxy / sxx;
    double var = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double w = (xs[i] - mx) / sxx;
        var += w * w * vars[i];
    }
    est.codim_stderr = std::sqrt(var);
}

inline StabEstimate estimate_codimension(std::string id, const DistanceFn& distance, const BallSpec& ball,
                                         const std::vector<double>& eps_grid, std::uint64_t count,
                                         unsigned workers = 1) {
    if (count < 10000) throw UsageError("stabilizer_fraction: count must be >= 10^4");
    if (eps_grid.size() < 2) throw UsageError("stabilizer_fraction: eps grid needs at least 2 values");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw UsageError("stabilizer_fraction: eps values must be positive");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) {
            throw UsageError("stabilizer_fraction: eps grid must be strictly decreasing");
        }
    }
    StabEstimate est;
    est.figure_id = std::move(id);
    est.eps_grid = eps_grid;
    est.sample_count = count;
    est.seed = ball.seed;
    est.hits = count_hits(distance, ball, eps_grid, count, workers);
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        est.hit_fraction.push_back(static_cast<double>(est.hits[i]) / static_cast<double>(count));
        est.usable.push_back(est.hits[i] >= StabEstimate::kMinHits);
    }
    fit_codimension(est);
    return est;
}

inline StabEstimate stabilizer_fraction(const std::string& id, const Figure& f, const BallSpec& ball,
                                        const std::vector<double>& eps_grid, std::uint64_t count,
                                        unsigned workers = 1, std::size_t samples = kDefaultFigureSamples) {
    const StabilizerProbe probe(f, samples);
    return estimate_codimension(
        id, [&](const GL2Element& g, double cap) { return probe.distance(g, cap); }, ball, eps_grid, count, workers);
}

inline const std::vector<double>& default_eps_grid() {
    static const std::vector<double> grid{0.2, 0.1, 0.05, 0.025};
    return grid;
}

// ---------------------------------------------------------------------------
// Feature comparison at a single eps
// ---------------------------------------------------------------------------

struct NamedFigure {
    std::string id;
    Figure figure;
};

struct FeatureRow {
    std::string figure_id;
    double eps = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t count = 0;
    double fraction = 0.0;
    double stderr_ = 0.0;
};

/// Every figure sees the same sample stream; rows come back sorted by
/// descending fraction (ties by id).
inline std::vector<FeatureRow> compare_features(const std::vector<NamedFigure>& figures, const BallSpec& ball,
                                                double eps, std::uint64_t count, unsigned workers = 1,
                                                std::size_t samples = kDefaultFigureSamples) {
    if (figures.size() < 2) throw UsageError("compare_features: need at least two figures");
    if (!(eps > 0.0)) throw UsageError("compare_features: eps must be positive");
    if (count == 0) throw UsageError("compare_features: count must be positive");
    std::vector<FeatureRow> rows;
    for (const auto& nf : figures) {
        const StabilizerProbe probe(nf.figure, samples);
        const auto hits = count_hits([&](const GL2Element& g, double cap) { return probe.distance(g, cap); }, ball,
                                     {eps}, count, workers)[0];
        const double p = static_cast<double>(hits) / static_cast<double>(count);
        rows.push_back({nf.id, eps, hits, count, p, std::sqrt(p * (1.0 - p) / static_cast<double>(count))});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        if (a.fraction != b.fraction) return a.fraction > b.fraction;
        return a.figure_id < b.figure_id;
    });
    return rows;
}

/// Difference a - b in units of the combined binomial standard error.
inline double separation(const FeatureRow& a, const FeatureRow& b) {
    const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    if (se == 0.0) return a.fraction == b.fraction ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), a.fraction - b.fraction);
    return (a.fraction - b.fraction) / se;
}

inline const FeatureRow& find_row(const std::vector<FeatureRow>& rows, const std::string& id) {
    for (const auto& r : rows)
        if (r.figure_id == id) return r;
    throw UsageError("no feature row for '" + id + "'");
}

// ---------------------------------------------------------------------------
// Random walks
// ---------------------------------------------------------------------------

struct WalkSpec {
    double step_sigma = 0.02;
    double eps = 0.05;
    std::uint64_t max_steps = 100000;
    BallSpec start{GL2Element::identity(), 0.8, 0};
    std::size_t trial_count = 100;
    std::uint64_t seed = 0;
    /// Keep the walk inside the start ball (proposals leaving it are redrawn).
    bool confine = true;

    void validate() const {
        start.validate();
        if (!(step_sigma > 0.0)) throw UsageError("WalkSpec: step_sigma must be positive");
        if (!(eps > 0.0)) throw UsageError("WalkSpec: eps must be positive");
        if (!(step_sigma < eps)) throw UsageError("WalkSpec: step_sigma must be smaller than eps");
        if (trial_count == 0) throw UsageError("WalkSpec: trial_count must be positive");
    }
};

/// result[figure][trial] = first step at which the walk eps-stabilizes the
/// figure; max_steps + 1 means never. All figures share each walk.
inline std::vector<std::vector<std::uint64_t>> random_walk_first_hit(const std::vector<Figure>& figures,
                                                                     const WalkSpec& spec, unsigned workers = 1) {
    spec.validate();
    if (figures.empty()) throw UsageError("random_walk_first_hit: no figures");
    std::vector<StabilizerProbe> probes;
    for (const auto& f : figures) probes.emplace_back(f);
    const std::uint64_t never = spec.max_steps + 1;
    const Mat2 center = spec.start.center.matrix();
    const double r2 = spec.start.radius * spec.start.radius;

    auto per_trial = parallel_map<std::vector<std::uint64_t>>(spec.trial_count, workers, [&](std::size_t trial) {
        auto engine = stream_engine(spec.seed, trial);
        std::normal_distribution<double> step(0.0, spec.step_sigma);
        Mat2 g = draw_from_ball(center, spec.start.radius, engine).matrix();
        std::vector<std::uint64_t> hit(probes.size(), never);
        std::size_t remaining = probes.size();
        for (std::uint64_t s = 0;; ++s) {
            const GL2Element current(g);
            for (std::size_t k = 0; k < probes.size(); ++k) {
                if (hit[k] == never && probes[k].is_stabilizer(current, spec.eps)) {
                    hit[k] = s;
                    --remaining;
                }
            }
            if (remaining == 0 || s == spec.max_steps) break;
            for (;;) {
                Mat2 next = g;
                next(0, 0) += step(engine);
                next(0, 1) += step(engine);
                next(1, 0) += step(engine);
                next(1, 1) += step(engine);
                if (std::abs(next.determinant()) <= kSingularDet) continue;
                if (spec.confine && (next - center).squaredNorm() > r2) continue;
                g = next;
                break;
            }
        }
        return hit;
    });

    std::vector<std::vector<std::uint64_t>> out(figures.size(), std::vector<std::uint64_t>(spec.trial_count));
    for (std::size_t t = 0; t < spec.trial_count; ++t)
        for (std::size_t k = 0; k < figures.size(); ++k) out[k][t] = per_trial[t][k];
    return out;
}

inline double median(std::vector<std::uint64_t> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2]));
}

}  // namespace orbitlab
