/**
 * @file autoencoder.hpp
 * @brief Single-hidden-layer autoencoder trained by mini-batch SGD, greedy
 *        layer-wise stacking with binarized activations, and an edge score
 *        for learned filters.
 *
 * Hidden unit w computes z_w = <W1[w,:], I> + b1[w], a discrete correlation of
 * the input with the unit's weight map, and a_w = sigma(z_w). The decoder
 * maps the activations back to input space: I_hat = W2 a + b2.
 */
#pragma once

#include "orbitlab/core.hpp"
#include "orbitlab/figures.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace orbitlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { sigmoid, rectifier, identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::rectifier: return "rectifier";
        case Activation::identity: return "identity";
    }
    return "unknown";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "rectifier" || s == "relu") return Activation::rectifier;
    if (s == "identity") return Activation::identity;
    throw UsageError("unknown activation '" + s + "'");
}

/// One layer's parameters. The activation is not part of the file format;
/// loaded parameters default to sigmoid.
struct AEParams {
    MatrixXd encode_weights;  ///< h x d
    VectorXd encode_bias;     ///< h
    MatrixXd decode_weights;  ///< d x h
    VectorXd decode_bias;     ///< d
    Activation activation = Activation::sigmoid;

    Eigen::Index input_dim() const { return encode_weights.cols(); }
    Eigen::Index hidden_dim() const { return encode_weights.rows(); }

    static AEParams zeros(Eigen::Index d, Eigen::Index h) {
        return {MatrixXd::Zero(h, d), VectorXd::Zero(h), MatrixXd::Zero(d, h), VectorXd::Zero(d)};
    }

    void validate() const {
        const auto d = input_dim(), h = hidden_dim();
        if (encode_bias.size() != h || decode_weights.rows() != d || decode_weights.cols() != h ||
            decode_bias.size() != d) {
            throw UsageError("AEParams: inconsistent shapes");
        }
        if (!encode_weights.allFinite() || !encode_bias.allFinite() || !decode_weights.allFinite() ||
            !decode_bias.allFinite()) {
            throw NumericalError("AEParams: non-finite entries");
        }
    }
};

/// Seeded initialization: weights uniform in [-1/sqrt(d), 1/sqrt(d)], zero biases.
inline AEParams init_params(Eigen::Index d, Eigen::Index h, std::uint64_t seed, Activation act = Activation::sigmoid) {
    auto engine = stream_engine(seed, 0);
    const double lim = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> u(-lim, lim);
    AEParams p = AEParams::zeros(d, h);
    p.activation = act;
    for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < d; ++j) p.encode_weights(i, j) = u(engine);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < h; ++j) p.decode_weights(i, j) = u(engine);
    return p;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

inline VectorXd preactivation(const AEParams& p, const VectorXd& input) {
    if (input.size() != p.input_dim()) throw UsageError("preactivation: input dimension mismatch");
    return p.encode_weights * input + p.encode_bias;
}

inline double activate(double z, Activation a) {
    switch (a) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::rectifier: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
    }
    return z;
}

/// Derivative expressed through the activation value y = f(z) and z.
inline double activate_slope(double z, double y, Activation a) {
    switch (a) {
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::rectifier: return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

template <typename Derived>
auto activation(const Eigen::MatrixBase<Derived>& z, Activation a = Activation::sigmoid) {
    return z.unaryExpr([a](double v) { return activate(v, a); }).eval();
}

inline VectorXd hidden(const AEParams& p, const VectorXd& input) { return activation(preactivation(p, input), p.activation); }

/// The composite encode/decode map I -> I_hat.
inline VectorXd reconstruct(const AEParams& p, const VectorXd& input) {
    return p.decode_weights * hidden(p, input) + p.decode_bias;
}

/// Mean over pixels of the squared reconstruction error.
inline double example_loss(const AEParams& p, const VectorXd& input) {
    return (reconstruct(p, input) - input).squaredNorm() / static_cast<double>(input.size());
}

/// Mean example loss over the columns of `data`.
inline double dataset_loss(const AEParams& p, const MatrixXd& data) {
    const MatrixXd z = (p.encode_weights * data).colwise() + p.encode_bias;
    const MatrixXd a = activation(z, p.activation);
    const MatrixXd r = (p.decode_weights * a).colwise() + p.decode_bias;
    return (r - data).squaredNorm() / static_cast<double>(data.rows() * data.cols());
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

struct AEGradient {
    MatrixXd encode_weights;
    VectorXd encode_bias;
    MatrixXd decode_weights;
    VectorXd decode_bias;
};

/// Exact gradient of dataset_loss over the batch columns, by backpropagation.
inline AEGradient loss_gradient(const AEParams& p, const MatrixXd& batch, double* loss_out = nullptr) {
    const double scale = 2.0 / static_cast<double>(batch.rows() * batch.cols());
    const MatrixXd z = (p.encode_weights * batch).colwise() + p.encode_bias;
    const MatrixXd a = activation(z, p.activation);
    const MatrixXd err = ((p.decode_weights * a).colwise() + p.decode_bias) - batch;
    if (loss_out) *loss_out = err.squaredNorm() / static_cast<double>(batch.rows() * batch.cols());

    const MatrixXd d_out = scale * err;  // dL/dI_hat
    MatrixXd d_hidden = p.decode_weights.transpose() * d_out;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (Eigen::Index i = 0; i < z.rows(); ++i) d_hidden(i, j) *= activate_slope(z(i, j), a(i, j), p.activation);

    return {d_hidden * batch.transpose(), d_hidden.rowwise().sum(), d_out * a.transpose(), d_out.rowwise().sum()};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Stacks equally sized images as columns of a d x m matrix.
inline MatrixXd dataset_from_images(const std::vector<RasterImage>& images) {
    if (images.empty()) throw UsageError("dataset is empty");
    const int side = images.front().side;
    MatrixXd data(static_cast<Eigen::Index>(side) * side, static_cast<Eigen::Index>(images.size()));
    for (std::size_t k = 0; k < images.size(); ++k) {
        if (images[k].side != side) throw UsageError("dataset images must share one side length");
        data.col(static_cast<Eigen::Index>(k)) = images[k].flatten();
    }
    return data;
}

struct TrainSpec {
    MatrixXd dataset;  ///< d x m, one example per column, values in [0, 1]
    Eigen::Index hidden_count = 16;
    double learning_rate = 0.1;
    int epochs = 200;
    int batch_size = 20;
    std::uint64_t seed = 0;
    Activation activation = Activation::sigmoid;

    void validate() const {
        if (dataset.cols() == 0 || dataset.rows() == 0) throw UsageError("TrainSpec: dataset is empty");
        if (hidden_count < 1) throw UsageError("TrainSpec: hidden_count must be >= 1");
        if (!(learning_rate > 0.0)) throw UsageError("TrainSpec: learning_rate must be positive");
        if (epochs < 0) throw UsageError("TrainSpec: epochs must be >= 0");
        if (batch_size < 1) throw UsageError("TrainSpec: batch_size must be >= 1");
    }
};

struct TrainResult {
    AEParams params;
    std::vector<double> loss_curve;  ///< initial loss, then the loss after each epoch
};

/// Mini-batch SGD on mean squared error. Deterministic for a given spec.
inline TrainResult train(const TrainSpec& spec) {
    spec.validate();
    const Eigen::Index d = spec.dataset.rows();
    const auto m = static_cast<std::size_t>(spec.dataset.cols());
    TrainResult out{init_params(d, spec.hidden_count, spec.seed, spec.activation), {}};
    AEParams& p = out.params;
    out.loss_curve.push_back(dataset_loss(p, spec.dataset));

    auto shuffle_engine = stream_engine(spec.seed, 1);
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    MatrixXd batch;
    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_engine);
        for (std::size_t start = 0; start < m; start += static_cast<std::size_t>(spec.batch_size)) {
            const std::size_t stop = std::min(m, start + static_cast<std::size_t>(spec.batch_size));
            batch.resize(d, static_cast<Eigen::Index>(stop - start));
            for (std::size_t k = start; k < stop; ++k) batch.col(static_cast<Eigen::Index>(k - start)) = spec.dataset.col(order[k]);
            const AEGradient grad = loss_gradient(p, batch);
            p.encode_weights -= spec.learning_rate * grad.encode_weights;
            p.encode_bias -= spec.learning_rate * grad.encode_bias;
            p.decode_weights -= spec.learning_rate * grad.decode_weights;
            p.decode_bias -= spec.learning_rate * grad.decode_bias;
        }
        const double loss = dataset_loss(p, spec.dataset);
        if (!std::isfinite(loss)) {
            throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch) +
                                 " (learning_rate " + std::to_string(spec.learning_rate) + " too large?)");
        }
        out.loss_curve.push_back(loss);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layer-wise stacking
// ---------------------------------------------------------------------------

inline MatrixXd binarize(const MatrixXd& values, double threshold) {
    return values.unaryExpr([threshold](double v) { return v > threshold ? 1.0 : 0.0; });
}

struct LayerStack {
    std::vector<AEParams> layers;
    double binarize_threshold = 0.5;

    /// Input the layer at `depth` receives for the given raw inputs (columns).
    MatrixXd layer_input(const MatrixXd& raw, std::size_t depth) const {
        MatrixXd x = raw;
        for (std::size_t k = 0; k < depth; ++k) {
            const MatrixXd z = (layers[k].encode_weights * x).colwise() + layers[k].encode_bias;
            x = binarize(activation(z, layers[k].activation), binarize_threshold);
        }
        return x;
    }
};

struct StackResult {
    LayerStack stack;
    std::vector<std::vector<double>> loss_curves;
};

/// Greedy pretraining: layer 1 trains on specs[0].dataset; each deeper layer
/// trains on the binarized activations of the frozen layers below it, so the
/// dataset fields of specs[1..] are ignored.
inline StackResult stack_pretrain(const std::vector<TrainSpec>& specs, double binarize_threshold = 0.5) {
    if (specs.empty()) throw UsageError("stack_pretrain: no layer specs");
    if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
        throw UsageError("stack_pretrain: binarize_threshold must lie in (0, 1)");
    }
    StackResult out;
    out.stack.binarize_threshold = binarize_threshold;
    MatrixXd inputs = specs.front().dataset;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        TrainSpec spec = specs[k];
        if (k > 0) {
            const AEParams& below = out.stack.layers.back();
            const MatrixXd z = (below.encode_weights * inputs).colwise() + below.encode_bias;
            inputs = binarize(activation(z, below.activation), binarize_threshold);
            spec.dataset = inputs;
        }
        TrainResult layer = train(spec);
        out.stack.layers.push_back(std::move(layer.params));
        out.loss_curves.push_back(std::move(layer.loss_curve));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edge score
// ---------------------------------------------------------------------------

namespace detail {

inline VectorXd normalized(const VectorXd& v) {
    VectorXd c = v.array() - v.mean();
    const double n = c.norm();
    if (n <= 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff())) return VectorXd::Zero(v.size());
    return c / n;
}

}  // namespace detail

/// Oriented line strokes: 18 orientations (0..170 degrees) x 5 offsets
/// {-2, -1, 0, 1, 2} * side / 8 pixels from the centre; a pixel belongs to
/// a stroke when its centre is within half a pixel of the line.
inline std::vector<VectorXd> edge_template_bank(int side) {
    std::vector<VectorXd> bank;
    const double half = 0.5 * side;
    for (int k = 0; k < 18; ++k) {
        const double theta = (10.0 * k) * std::numbers::pi / 180.0;
        const double nx = -std::sin(theta), ny = std::cos(theta);
        for (int o = -2; o <= 2; ++o) {
            const double offset = o * side / 8.0;
            VectorXd t(static_cast<Eigen::Index>(side) * side);
            for (int r = 0; r < side; ++r) {
                for (int c = 0; c < side; ++c) {
                    const double x = c + 0.5 - half, y = r + 0.5 - half;
                    t(r * side + c) = std::abs(x * nx + y * ny - offset) <= 0.5 + 1e-9 ? 1.0 : 0.0;
                }
            }
            bank.push_back(detail::normalized(t));
        }
    }
    return bank;
}

inline const std::vector<VectorXd>& cached_edge_templates(int side) {
    static std::mutex mutex;
    static std::map<int, std::vector<VectorXd>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(side);
    if (it == cache.end()) it = cache.emplace(side, edge_template_bank(side)).first;
    return it->second;
}

/// Maximum absolute normalized cross-correlation with the stroke bank;
/// 0 for a zero-variance filter.
inline double edge_score(const VectorXd& filter, int side) {
    if (filter.size() != static_cast<Eigen::Index>(side) * side) throw UsageError("edge_score: filter size mismatch");
    const VectorXd f = detail::normalized(filter);
    if (f.isZero(0.0)) return 0.0;
    double best = 0.0;
    for (const auto& t : cached_edge_templates(side)) best = std::max(best, std::abs(f.dot(t)));
    return std::min(best, 1.0);
}

/// edge_score of `draws` i.i.d. standard Gaussian filters.
inline std::vector<double> random_filter_null(int side, std::size_t draws, std::uint64_t seed) {
    auto engine = stream_engine(seed, 7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> scores;
    scores.reserve(draws);
    VectorXd f(static_cast<Eigen::Index>(side) * side);
    for (std::size_t k = 0; k < draws; ++k) {
        for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = gauss(engine);
        scores.push_back(edge_score(f, side));
    }
    return scores;
}

/// Linear-interpolated percentile, q in [0, 100].
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw UsageError("percentile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

/// Binary images of one filled rectangle each over the extent [-1, 1]^2:
/// random centre, sides of 4..12 pixels (at side 16; scaled otherwise),
/// orientation a multiple of 15 degrees.
inline std::vector<RasterImage> rectangle_corpus(std::size_t count, int side, std::uint64_t seed) {
    auto engine = stream_engine(seed, 3);
    const Extent extent = Extent::centered(1.0);
    const double px = extent.size / side;
    const double scale = side / 16.0;
    std::uniform_real_distribution<double> center(-1.0 + 3.0 * scale * px, 1.0 - 3.0 * scale * px);
    std::uniform_int_distribution<int> length(4, 12);
    std::uniform_int_distribution<int> orientation(0, 11);
    std::vector<RasterImage> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Vec2 c(center(engine), center(engine));
        const double w = length(engine) * scale * px, h = length(engine) * scale * px;
        const double a = orientation(engine) * 15.0 * std::numbers::pi / 180.0;
        const Vec2 u(std::cos(a), std::sin(a)), v(-std::sin(a), std::cos(a));
        Polygon rect{{c - 0.5 * w * u - 0.5 * h * v, c + 0.5 * w * u - 0.5 * h * v, c + 0.5 * w * u + 0.5 * h * v,
                      c - 0.5 * w * u + 0.5 * h * v}};
        RasterImage img = rasterize(rect, side, extent);
        img.label = "rectangle";
        out.push_back(std::move(img));
    }
    return out;
}

/// Stroke-rendered edges through the origin at `count` evenly spaced angles.
inline std::vector<RasterImage> edge_corpus(std::size_t count, int side, double half_length) {
    std::vector<RasterImage> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
        out.push_back(rasterize(Edge{angle, half_length}, side, Extent::centered(1.0)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary parameter files ("AEP1")
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::ostream& os, double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_bytes(std::istream& is, int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
        const int c = is.get();
        if (c == EOF) throw UsageError("read_params: truncated file");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_bytes(is, 8)); }

}  // namespace detail

/// "AEP1", d, h (u32 LE), then row-major f64 LE: encode weights, encode
/// bias, decode weights, decode bias.
inline void write_params(std::ostream& os, const AEParams& p) {
    p.validate();
    os.write("AEP1", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(p.input_dim()));
    detail::put_u32(os, static_cast<std::uint32_t>(p.hidden_dim()));
    auto put_rows = [&](const MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_f64(os, m(r, c));
    };
    put_rows(p.encode_weights);
    put_rows(p.encode_bias);
    put_rows(p.decode_weights);
    put_rows(p.decode_bias);
}

inline AEParams read_params(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "AEP1") throw UsageError("read_params: bad magic");
    const auto d = static_cast<Eigen::Index>(detail::get_bytes(is, 4));
    const auto h = static_cast<Eigen::Index>(detail::get_bytes(is, 4));
    AEParams p = AEParams::zeros(d, h);
    auto get_rows = [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = detail::get_f64(is);
    };
    get_rows(p.encode_weights);
    get_rows(p.encode_bias);
    get_rows(p.decode_weights);
    get_rows(p.decode_bias);
    p.validate();
    return p;
}

inline void write_params(const std::string& path, const AEParams& p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot open " + path + " for writing");
    write_params(os, p);
}

inline AEParams read_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot open " + path);
    return read_params(is);
}

}  // namespace orbitlab
