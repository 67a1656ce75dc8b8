/**
 * @file experiments.hpp
 * @brief Experiment configuration (plain `key = value` files), presets, and
 *        the runner that writes CSV / PGM artifacts plus a replayable manifest.
 */
#pragma once

#include "orbitlab/autoencoder.hpp"
#include "orbitlab/core.hpp"
#include "orbitlab/figures.hpp"
#include "orbitlab/group.hpp"
#include "orbitlab/io.hpp"
#include "orbitlab/moduli.hpp"
#include "orbitlab/shadow.hpp"
#include "orbitlab/stabilizer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#ifndef ORBITLAB_VERSION
#define ORBITLAB_VERSION "0.1.0"
#endif

namespace orbitlab {

inline constexpr const char* kToolVersion = ORBITLAB_VERSION;

// ---------------------------------------------------------------------------
// Parameter schema
// ---------------------------------------------------------------------------

enum class ParamType { integer, real, text, real_list, text_list };

struct ParamSpec {
    std::string name;
    ParamType type;
    std::string default_value;
};

struct ExperimentInfo {
    std::string name;
    std::string summary;
    std::vector<ParamSpec> params;
};

inline const std::vector<ExperimentInfo>& experiment_catalog() {
    using P = ParamType;
    static const std::vector<ExperimentInfo> catalog{
        {"orbit-check", "orbit-stabilizer identity for a finite group (C<n>, D<n>, S<n>)",
         {{"group", P::text, "D4"}}},
        {"stab-volume", "eps-stabilizer hit fractions and fitted codimension for one figure",
         {{"figure", P::text, "edge"},
          {"radius", P::real, "0.5"},
          {"eps", P::real_list, "0.2,0.1,0.05,0.025"},
          {"count", P::integer, "1000000"},
          {"samples", P::integer, "256"}}},
        {"feature-compare", "hit fractions of several figures at one eps, sorted",
         {{"figures", P::text_list, "edge,circle"},
          {"radius", P::real, "0.5"},
          {"eps", P::real, "0.05"},
          {"count", P::integer, "1000000"},
          {"samples", P::integer, "256"}}},
        {"random-walk", "first-hit steps of a Gaussian walk in GL2 for several figures",
         {{"figures", P::text_list, "edge,circle"},
          {"step_sigma", P::real, "0.02"},
          {"eps", P::real, "0.05"},
          {"max_steps", P::integer, "100000"},
          {"trials", P::integer, "100"},
          {"start_radius", P::real, "0.8"},
          {"confine", P::integer, "1"}}},
        {"train-ae", "train one autoencoder on the rectangle corpus and score its filters",
         {{"images", P::integer, "2000"},
          {"side", P::integer, "16"},
          {"hidden", P::integer, "16"},
          {"learning_rate", P::real, "0.1"},
          {"epochs", P::integer, "200"},
          {"batch_size", P::integer, "20"},
          {"activation", P::text, "sigmoid"},
          {"null_draws", P::integer, "1000"}}},
        {"stack-ae", "greedy layer-wise pretraining on the rectangle corpus",
         {{"images", P::integer, "2000"},
          {"side", P::integer, "16"},
          {"hidden", P::text_list, "16,8"},
          {"learning_rate", P::real, "0.1"},
          {"epochs", P::integer, "200"},
          {"batch_size", P::integer, "20"},
          {"threshold", P::real, "0.5"}}},
        {"shadow-fit", "fit linear shadows of synthetic deformations or of a trained network",
         {{"mode", P::text, "synthetic"},
          {"points", P::integer, "64"},
          {"eps", P::real, "0.15"},
          {"side", P::integer, "16"},
          {"hidden", P::integer, "32"},
          {"learning_rate", P::real, "1.0"},
          {"epochs", P::integer, "1000"},
          {"batch_size", P::integer, "1"}}},
        {"moduli-sweep", "render the region swept by a generalized edge (or a triangulated hexagon)",
         {{"preset", P::text, "butterfly"}, {"side", P::integer, "128"}, {"steps", P::integer, "257"}}},
        {"complexity-contrast", "edge versus swept-figure stabilizer hit fractions",
         {{"figure", P::text, "butterfly"},
          {"radius", P::real, "0.5"},
          {"eps", P::real, "0.05"},
          {"count", P::integer, "1000000"},
          {"samples", P::integer, "256"}}},
    };
    return catalog;
}

inline const ExperimentInfo* find_experiment(std::string_view name) {
    for (const auto& e : experiment_catalog())
        if (e.name == name) return &e;
    return nullptr;
}

inline const std::vector<ParamSpec>& global_params() {
    static const std::vector<ParamSpec> globals{{"experiment", ParamType::text, ""},
                                                {"seed", ParamType::integer, "0"},
                                                {"workers", ParamType::integer, "1"},
                                                {"out_dir", ParamType::text, ""}};
    return globals;
}

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::optional<double> parse_real(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Integers; exact integral reals such as 1e6 are accepted too.
inline std::optional<std::int64_t> parse_integer(std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
    const auto r = parse_real(s);
    if (r && *r == std::floor(*r) && std::abs(*r) < 9e15) return static_cast<std::int64_t>(*r);
    return std::nullopt;
}

inline const char* type_name(ParamType t) {
    switch (t) {
        case ParamType::integer: return "an integer";
        case ParamType::real: return "a real number";
        case ParamType::text: return "a word";
        case ParamType::real_list: return "a comma-separated list of reals";
        case ParamType::text_list: return "a comma-separated list of words";
    }
    return "?";
}

inline bool value_matches(ParamType t, const std::string& v) {
    switch (t) {
        case ParamType::integer: return parse_integer(v).has_value();
        case ParamType::real: return parse_real(v).has_value();
        case ParamType::text: return !v.empty() && v.find_first_of(" \t") == std::string::npos;
        case ParamType::real_list: {
            for (const auto& item : split_list(v))
                if (!parse_real(item)) return false;
            return true;
        }
        case ParamType::text_list: {
            for (const auto& item : split_list(v))
                if (item.empty()) return false;
            return true;
        }
    }
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> parameters;  ///< every schema key, resolved
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::filesystem::path out_dir;

    const std::string& raw(const std::string& key) const {
        const auto it = parameters.find(key);
        if (it == parameters.end()) throw UsageError("parameter '" + key + "' is not defined for " + experiment);
        return it->second;
    }
    std::int64_t integer(const std::string& key) const { return *detail::parse_integer(raw(key)); }
    double real(const std::string& key) const { return *detail::parse_real(raw(key)); }
    const std::string& text(const std::string& key) const { return raw(key); }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : detail::split_list(raw(key))) out.push_back(*detail::parse_real(item));
        return out;
    }
    std::vector<std::string> texts(const std::string& key) const { return detail::split_list(raw(key)); }
};

/// Command-line values; each one overrides the config file.
struct ConfigOverrides {
    std::optional<std::string> experiment;
    std::vector<std::string> sets;  ///< "key=value"
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::filesystem::path> out_dir;
};

/// Parses `key = value` lines (`#` starts a comment), applies overrides,
/// fills defaults and type-checks everything. Unknown or duplicate keys are
/// usage errors naming the offending line.
inline ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {}) {
    struct Entry {
        std::string value;
        std::string origin;
    };
    std::map<std::string, Entry> entries;

    auto known_anywhere = [](const std::string& key) {
        for (const auto& g : global_params())
            if (g.name == key) return true;
        for (const auto& e : experiment_catalog())
            for (const auto& p : e.params)
                if (p.name == key) return true;
        return false;
    };

    std::istringstream lines{std::string(text)};
    std::string line;
    for (int number = 1; std::getline(lines, line); ++number) {
        const auto hash = line.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const std::string where = "line " + std::to_string(number);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value', got '" + body + "'");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        if (key.empty()) throw UsageError(where + ": missing key");
        if (!known_anywhere(key)) throw UsageError(where + ": unknown key '" + key + "'");
        if (entries.count(key)) throw UsageError(where + ": duplicate key '" + key + "' (first set at " + entries[key].origin + ")");
        entries[key] = {value, where};
    }

    for (const auto& set : overrides.sets) {
        const auto eq = set.find('=');
        if (eq == std::string::npos) throw UsageError("--set " + set + ": expected key=value");
        const std::string key = detail::trim(set.substr(0, eq));
        if (!known_anywhere(key)) throw UsageError("--set " + set + ": unknown key '" + key + "'");
        entries[key] = {detail::trim(set.substr(eq + 1)), "--set " + set};
    }
    if (overrides.experiment) entries["experiment"] = {*overrides.experiment, "--experiment"};
    if (overrides.seed) entries["seed"] = {std::to_string(*overrides.seed), "--seed"};
    if (overrides.workers) entries["workers"] = {std::to_string(*overrides.workers), "--workers"};
    if (overrides.out_dir) entries["out_dir"] = {overrides.out_dir->string(), "--out"};

    ExperimentConfig cfg;
    const auto exp_it = entries.find("experiment");
    if (exp_it == entries.end() || exp_it->second.value.empty()) throw UsageError("no experiment given");
    const ExperimentInfo* info = find_experiment(exp_it->second.value);
    if (!info) throw UsageError(exp_it->second.origin + ": unknown experiment '" + exp_it->second.value + "'");
    cfg.experiment = info->name;

    for (const auto& [key, entry] : entries) {
        bool ok = false;
        for (const auto& g : global_params()) ok = ok || g.name == key;
        const ParamSpec* spec = nullptr;
        for (const auto& p : info->params)
            if (p.name == key) spec = &p;
        if (!ok && !spec) throw UsageError(entry.origin + ": key '" + key + "' does not apply to experiment " + cfg.experiment);
        if (spec && !detail::value_matches(spec->type, entry.value)) {
            throw UsageError(entry.origin + ": '" + key + "' must be " + detail::type_name(spec->type) + ", got '" + entry.value + "'");
        }
    }

    if (auto it = entries.find("seed"); it != entries.end()) {
        const auto v = detail::parse_integer(it->second.value);
        if (!v || *v < 0) throw UsageError(it->second.origin + ": seed must be a non-negative integer");
        cfg.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto it = entries.find("workers"); it != entries.end()) {
        const auto v = detail::parse_integer(it->second.value);
        if (!v || *v < 1 || *v > 1024) throw UsageError(it->second.origin + ": workers must be an integer in 1..1024");
        cfg.workers = static_cast<unsigned>(*v);
    }
    if (auto it = entries.find("out_dir"); it != entries.end() && !it->second.value.empty()) {
        cfg.out_dir = it->second.value;
    } else if (const char* env = std::getenv("ORBITLAB_OUT"); env && *env) {
        cfg.out_dir = env;
    } else {
        cfg.out_dir = "out";
    }
    for (const auto& p : info->params) {
        const auto it = entries.find(p.name);
        cfg.parameters[p.name] = it != entries.end() ? it->second.value : p.default_value;
    }
    return cfg;
}

/// The resolved configuration in parseable form.
inline std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "experiment = " << cfg.experiment << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "workers = " << cfg.workers << '\n';
    os << "out_dir = " << cfg.out_dir.string() << '\n';
    for (const auto& p : find_experiment(cfg.experiment)->params) os << p.name << " = " << cfg.parameters.at(p.name) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct Preset {
    std::string name;
    std::string experiment;
    std::vector<std::string> sets;
    std::string description;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> list{
        {"orbit-d4", "orbit-check", {"group=D4"}, "D4 on the vertices of a square"},
        {"orbit-s3", "orbit-check", {"group=S3"}, "S3 on {1,2,3}"},
        {"orbit-c6", "orbit-check", {"group=C6"}, "C6 on the vertices of a hexagon"},
        {"stab-edge", "stab-volume", {"figure=edge"}, "edge codimension (expect 2)"},
        {"stab-circle", "stab-volume", {"figure=circle"}, "circle codimension (expect 3)"},
        {"stab-ellipse", "stab-volume", {"figure=ellipse"}, "ellipse a=1.5 b=1 codimension (expect 3)"},
        {"stab-hyperplane", "stab-volume", {"figure=hyperplane"}, "calibration set g00 = 1 (expect 1)"},
        {"compare-features", "feature-compare", {"figures=edge,circle,butterfly"}, "edge vs circle vs butterfly at eps 0.05"},
        {"walk-edge-circle", "random-walk", {"figures=edge,circle"}, "paired first-hit times, 100 trials"},
        {"train-rectangles", "train-ae", {}, "rectangle corpus, h = 16, 200 epochs"},
        {"stack-rectangles", "stack-ae", {}, "two greedy layers on the rectangle corpus"},
        {"shadow-synthetic", "shadow-fit", {"mode=synthetic"}, "recover known GL2 deformations"},
        {"shadow-network", "shadow-fit", {"mode=network"}, "shadow of a trained autoencoder on stabilized figures"},
        {"sweep-trapezoid", "moduli-sweep", {"preset=trapezoid"}, "parallel segments"},
        {"sweep-triangle", "moduli-sweep", {"preset=triangle"}, "segments sharing a start point"},
        {"sweep-butterfly", "moduli-sweep", {"preset=butterfly"}, "crossing segments"},
        {"sweep-hexagon", "moduli-sweep", {"preset=hexagon"}, "triangulated regular hexagon"},
        {"contrast-butterfly", "complexity-contrast", {"figure=butterfly"}, "edge vs butterfly boundary"},
        {"contrast-triangle", "complexity-contrast", {"figure=triangle"}, "edge vs triangle boundary"},
    };
    return list;
}

inline const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw UsageError("unknown preset '" + std::string(name) + "' (see `presets`)");
}

/// Config text for a preset, ready for parse_config.
inline std::string preset_config_text(const Preset& p) {
    std::string text = "experiment = " + p.experiment + "\n";
    for (const auto& s : p.sets) {
        const auto eq = s.find('=');
        text += s.substr(0, eq) + " = " + s.substr(eq + 1) + "\n";
    }
    return text;
}

// ---------------------------------------------------------------------------
// Figures by name
// ---------------------------------------------------------------------------

inline Figure named_figure(const std::string& id) {
    if (id == "edge") return Edge{0.0, 1.0};
    if (id == "circle") return Circle{Vec2::Zero(), 1.0};
    if (id == "ellipse") return Ellipse{Vec2::Zero(), 1.5, 1.0, 0.0};
    if (id == "origin") return PointCloud{{Vec2::Zero()}};
    if (id == "butterfly") return swept_boundary(butterfly_edge());
    if (id == "triangle") return swept_boundary(triangle_edge());
    if (id == "trapezoid") return swept_boundary(trapezoid_edge());
    throw UsageError("unknown figure '" + id + "' (edge, circle, ellipse, origin, butterfly, triangle, trapezoid)");
}

/// Analytic codimension 4 - dim(stabilizer) where known.
inline std::optional<int> analytic_codimension(const std::string& id) {
    if (id == "hyperplane") return 1;
    if (id == "edge" || id == "circle" || id == "ellipse") {
        return orbit_dim_from_stab(kGL2Dimension, analytic_stabilizer_dim(named_figure(id)));
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<std::filesystem::path> artifacts;
    double seconds = 0.0;
    std::filesystem::path manifest;
};

namespace detail {

class RunContext {
public:
    explicit RunContext(const ExperimentConfig& cfg) : cfg_(cfg) { std::filesystem::create_directories(cfg.out_dir); }

    const ExperimentConfig& cfg() const { return cfg_; }
    std::filesystem::path file(const std::string& name) {
        const auto p = cfg_.out_dir / name;
        artifacts_.push_back(p);
        return p;
    }
    CsvWriter csv(const std::string& name, std::initializer_list<std::string_view> header) { return {file(name), header}; }
    std::vector<std::filesystem::path>& artifacts() { return artifacts_; }

    std::uint64_t count(const std::string& key) const {
        const auto v = cfg_.integer(key);
        if (v < 1) throw UsageError(key + " must be positive");
        return static_cast<std::uint64_t>(v);
    }

private:
    const ExperimentConfig& cfg_;
    std::vector<std::filesystem::path> artifacts_;
};

inline void run_orbit_check(RunContext& ctx) {
    const FiniteAction action = FiniteAction::from_name(ctx.cfg().text("group"));
    auto out = ctx.csv("orbit_stabilizer.csv", {"group", "element", "orbit_size", "stabilizer_size", "group_order", "identity_holds"});
    for (std::size_t x = 0; x < action.degree(); ++x) {
        const auto os = finite_orbit_stabilizer(action, x);
        out.row(action.name(), action.ground_set()[x], os.orbit.size(), os.stabilizer.size(), action.order(),
                os.orbit.size() * os.stabilizer.size() == action.order());
    }
}

inline BallSpec ball_from(const RunContext& ctx) {
    return BallSpec{GL2Element::identity(), ctx.cfg().real("radius"), ctx.cfg().seed};
}

inline void write_stab_estimate(RunContext& ctx, const StabEstimate& est) {
    auto cells = ctx.csv("stab_volume.csv", {"figure_id", "eps", "hits", "count", "fraction", "stderr"});
    for (std::size_t i = 0; i < est.eps_grid.size(); ++i) {
        cells.row(est.figure_id, est.eps_grid[i], est.hits[i], est.sample_count, est.hit_fraction[i], est.stderr_at(i));
    }
    auto fit = ctx.csv("codim.csv", {"figure_id", "codim_fit", "codim_stderr", "analytic_codim", "usable_eps", "seed"});
    const auto analytic = analytic_codimension(est.figure_id);
    const auto usable = static_cast<std::uint64_t>(std::count(est.usable.begin(), est.usable.end(), true));
    fit.row(est.figure_id, est.codim_fit, est.codim_stderr, analytic ? std::to_string(*analytic) : std::string(), usable, est.seed);
}

inline void run_stab_volume(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const std::string id = cfg.text("figure");
    const BallSpec ball = ball_from(ctx);
    const auto count = ctx.count("count");
    StabEstimate est;
    if (id == "hyperplane") {
        est = estimate_codimension(id, hyperplane_distance, ball, cfg.reals("eps"), count, cfg.workers);
    } else {
        est = stabilizer_fraction(id, named_figure(id), ball, cfg.reals("eps"), count, cfg.workers,
                                  static_cast<std::size_t>(ctx.count("samples")));
    }
    write_stab_estimate(ctx, est);
}

inline void write_feature_rows(CsvWriter& out, const std::vector<FeatureRow>& rows) {
    for (const auto& r : rows) out.row(r.figure_id, r.eps, r.hits, r.count, r.fraction, r.stderr_);
}

inline void run_feature_compare(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    std::vector<NamedFigure> figs;
    for (const auto& id : cfg.texts("figures")) figs.push_back({id, named_figure(id)});
    const auto rows = compare_features(figs, ball_from(ctx), cfg.real("eps"), ctx.count("count"), cfg.workers,
                                       static_cast<std::size_t>(ctx.count("samples")));
    auto out = ctx.csv("features.csv", {"figure_id", "eps", "hits", "count", "fraction", "stderr"});
    write_feature_rows(out, rows);
    auto sep = ctx.csv("feature_separation.csv", {"first_id", "second_id", "separation_sigma"});
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) sep.row(rows[i].figure_id, rows[j].figure_id, separation(rows[i], rows[j]));
}

inline void run_random_walk(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const auto ids = cfg.texts("figures");
    std::vector<Figure> figs;
    for (const auto& id : ids) figs.push_back(named_figure(id));
    WalkSpec spec;
    spec.step_sigma = cfg.real("step_sigma");
    spec.eps = cfg.real("eps");
    const auto max_steps = cfg.integer("max_steps");
    if (max_steps < 0) throw UsageError("max_steps must be >= 0");
    spec.max_steps = static_cast<std::uint64_t>(max_steps);
    spec.trial_count = static_cast<std::size_t>(ctx.count("trials"));
    spec.start = BallSpec{GL2Element::identity(), cfg.real("start_radius"), cfg.seed};
    spec.seed = cfg.seed;
    spec.confine = cfg.integer("confine") != 0;
    const auto hits = random_walk_first_hit(figs, spec, cfg.workers);

    auto out = ctx.csv("first_hit.csv", {"figure_id", "trial", "first_hit_step"});
    for (std::size_t k = 0; k < ids.size(); ++k)
        for (std::size_t t = 0; t < spec.trial_count; ++t) out.row(ids[k], t, hits[k][t]);
    auto summary = ctx.csv("walk_summary.csv", {"figure_id", "trials", "median_first_hit", "never"});
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto never = static_cast<std::uint64_t>(std::count(hits[k].begin(), hits[k].end(), spec.max_steps + 1));
        summary.row(ids[k], spec.trial_count, median(hits[k]), never);
    }
    auto pairs = ctx.csv("walk_pairs.csv", {"first_id", "second_id", "first_earlier", "ties", "second_earlier"});
    for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            std::uint64_t first = 0, tie = 0, second = 0;
            for (std::size_t t = 0; t < spec.trial_count; ++t) {
                if (hits[a][t] < hits[b][t]) ++first;
                else if (hits[a][t] == hits[b][t]) ++tie;
                else ++second;
            }
            pairs.row(ids[a], ids[b], first, tie, second);
        }
    }
}

inline TrainSpec rectangle_spec(const ExperimentConfig& cfg, std::int64_t hidden) {
    const int side = static_cast<int>(cfg.integer("side"));
    const auto images = cfg.integer("images");
    if (images < 1 || side < 4) throw UsageError("images must be >= 1 and side >= 4");
    TrainSpec spec;
    spec.dataset = dataset_from_images(rectangle_corpus(static_cast<std::size_t>(images), side, cfg.seed));
    spec.hidden_count = hidden;
    spec.learning_rate = cfg.real("learning_rate");
    spec.epochs = static_cast<int>(cfg.integer("epochs"));
    spec.batch_size = static_cast<int>(cfg.integer("batch_size"));
    spec.seed = cfg.seed;
    return spec;
}

inline void write_loss_curve(CsvWriter& out, const std::vector<double>& curve) {
    for (std::size_t e = 0; e < curve.size(); ++e) out.row(e, curve[e]);
}

inline void run_train_ae(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const int side = static_cast<int>(cfg.integer("side"));
    TrainSpec spec = rectangle_spec(cfg, cfg.integer("hidden"));
    spec.activation = parse_activation(cfg.text("activation"));
    const TrainResult res = train(spec);

    auto loss = ctx.csv("loss.csv", {"epoch", "loss"});
    write_loss_curve(loss, res.loss_curve);

    auto filters = ctx.csv("filters.csv", {"filter", "edge_score"});
    double mean_score = 0.0;
    const auto h = res.params.hidden_dim();
    for (Eigen::Index i = 0; i < h; ++i) {
        const VectorXd row = res.params.encode_weights.row(i).transpose();
        const double score = edge_score(row, side);
        mean_score += score / static_cast<double>(h);
        filters.row(i, score);
        char name[32];
        std::snprintf(name, sizeof name, "filter_%02d.pgm", static_cast<int>(i));
        write_pgm_gray(ctx.file(name).string(), row, side, "filter " + std::to_string(i) + " min-max normalized");
    }

    const auto null = random_filter_null(side, static_cast<std::size_t>(ctx.count("null_draws")), cfg.seed);
    auto null_csv = ctx.csv("edge_null.csv", {"draw", "edge_score"});
    double null_mean = 0.0, null_sq = 0.0;
    for (std::size_t k = 0; k < null.size(); ++k) {
        null_csv.row(k, null[k]);
        null_mean += null[k] / static_cast<double>(null.size());
    }
    for (double v : null) null_sq += (v - null_mean) * (v - null_mean) / static_cast<double>(null.size());
    const double p95 = percentile(null, 95.0);
    auto summary = ctx.csv("edge_summary.csv", {"initial_loss", "final_loss", "loss_ratio", "mean_edge_score", "null_mean",
                                                "null_sd", "null_p95", "edges_emerged"});
    summary.row(res.loss_curve.front(), res.loss_curve.back(), res.loss_curve.back() / res.loss_curve.front(), mean_score,
                null_mean, std::sqrt(null_sq), p95, mean_score > p95);
    write_params(ctx.file("params.aep").string(), res.params);

    const auto corpus = rectangle_corpus(4, side, cfg.seed);
    for (std::size_t k = 0; k < corpus.size(); ++k) write_pgm(ctx.file("corpus_" + std::to_string(k) + ".pgm").string(), corpus[k]);
}

inline void run_stack_ae(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    std::vector<TrainSpec> specs;
    for (const auto& item : cfg.texts("hidden")) {
        const auto h = parse_integer(item);
        if (!h || *h < 1) throw UsageError("hidden: '" + item + "' is not a positive integer");
        if (specs.empty()) {
            specs.push_back(rectangle_spec(cfg, *h));
        } else {
            // Deeper layers get their data from the layer below.
            TrainSpec deeper = specs.front();
            deeper.dataset.resize(0, 0);
            deeper.hidden_count = *h;
            specs.push_back(std::move(deeper));
        }
    }
    const auto res = stack_pretrain(specs, cfg.real("threshold"));
    auto loss = ctx.csv("stack_loss.csv", {"layer", "epoch", "loss"});
    auto summary = ctx.csv("stack_summary.csv", {"layer", "input_dim", "hidden_dim", "initial_loss", "final_loss", "reduction"});
    for (std::size_t k = 0; k < res.loss_curves.size(); ++k) {
        const auto& curve = res.loss_curves[k];
        for (std::size_t e = 0; e < curve.size(); ++e) loss.row(k + 1, e, curve[e]);
        const auto& layer = res.stack.layers[k];
        summary.row(k + 1, layer.input_dim(), layer.hidden_dim(), curve.front(), curve.back(), 1.0 - curve.back() / curve.front());
        write_params(ctx.file("layer_" + std::to_string(k + 1) + ".aep").string(), layer);
    }
}

struct SyntheticCase {
    std::string name;
    GL2Element g;
};

inline std::vector<SyntheticCase> synthetic_deformations() {
    return {{"rot37", GL2Element::rotation(37.0 * std::numbers::pi / 180.0)},
            {"shear", GL2Element(1.0, 0.3, 0.0, 1.0)},
            {"scale", GL2Element::scaling(1.2, 0.8)},
            {"generic", GL2Element(0.9, -0.2, 0.4, 1.1)},
            {"reflect", GL2Element(1.0, 0.0, 0.0, -1.0)}};
}

/// Figures and parameters of the network shadow experiment.
inline std::vector<NamedFigure> shadow_acceptance_figures() {
    return {{"edge0", Edge{0.0, 0.75}},
            {"edge45", Edge{std::numbers::pi / 4, 0.75}},
            {"edge90", Edge{std::numbers::pi / 2, 0.75}},
            {"circle", Circle{Vec2::Zero(), 0.6}},
            {"ellipse", Ellipse{Vec2::Zero(), 0.75, 0.45, 0.0}}};
}

inline std::vector<Figure> shadow_training_figures() {
    std::vector<Figure> out;
    for (int k = 0; k < 12; ++k) out.push_back(Edge{std::numbers::pi * k / 12.0, 0.75});
    for (double r : {0.4, 0.6, 0.8}) out.push_back(Circle{Vec2::Zero(), r});
    for (int k = 0; k < 6; ++k) out.push_back(Ellipse{Vec2::Zero(), 0.75, 0.45, std::numbers::pi * k / 6.0});
    return out;
}

inline void run_shadow_fit(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const std::string mode = cfg.text("mode");
    const double eps = cfg.real("eps");
    const auto points = static_cast<std::size_t>(ctx.count("points"));
    auto out = ctx.csv("shadow.csv", {"figure_id", "g00", "g01", "g10", "g11", "det", "rms_residual", "stabilizer_transfer_ok"});
    auto detail_csv = ctx.csv("shadow_detail.csv", {"figure_id", "psi_distance", "rms_residual", "rank_deficient", "perturbed",
                                                    "transfer_applicable", "transfer_holds", "recovery_error"});
    auto emit = [&](const std::string& id, const ShadowFit& fit, double psi, bool applicable, bool holds, const std::string& err) {
        const Mat2& g = fit.g.matrix();
        out.row(id, g(0, 0), g(0, 1), g(1, 0), g(1, 1), fit.g.det(), fit.rms_residual, !applicable || holds);
        detail_csv.row(id, psi, fit.rms_residual, fit.rank_deficient, fit.perturbed, applicable, holds, err);
    };

    if (mode == "synthetic") {
        for (const std::string fid : {"circle", "ellipse", "butterfly"}) {
            const Figure f = named_figure(fid);
            const auto in = sample_points(f, points);
            for (const auto& c : synthetic_deformations()) {
                std::vector<Vec2> moved;
                for (const auto& p : in) moved.push_back(c.g.apply(p));
                const ShadowFit fit = fit_shadow(in, moved);
                const double psi = figure_distance(transform(c.g, f), f);
                const bool applicable = psi <= eps && fit.rms_residual <= eps;
                const bool holds = is_stabilizer(fit.g, f, kTransferFactor * eps);
                emit(fid + "/" + c.name, fit, psi, applicable, holds, format_number(frobenius_distance(fit.g.matrix(), c.g.matrix())));
            }
        }
        return;
    }
    if (mode != "network") throw UsageError("shadow-fit: mode must be synthetic or network");

    const int side = static_cast<int>(cfg.integer("side"));
    const Extent extent = Extent::centered(1.0);
    std::vector<RasterImage> images;
    for (const auto& f : shadow_training_figures()) images.push_back(rasterize(f, side, extent));
    TrainSpec spec;
    spec.dataset = dataset_from_images(images);
    spec.hidden_count = cfg.integer("hidden");
    spec.learning_rate = cfg.real("learning_rate");
    spec.epochs = static_cast<int>(cfg.integer("epochs"));
    spec.batch_size = static_cast<int>(cfg.integer("batch_size"));
    spec.seed = cfg.seed;
    const TrainResult net = train(spec);
    auto loss = ctx.csv("shadow_loss.csv", {"epoch", "loss"});
    write_loss_curve(loss, net.loss_curve);
    for (const auto& nf : shadow_acceptance_figures()) {
        const auto ex = shadow_of_network(nf.id, net.params, nf.figure, side, extent, eps, points);
        emit(nf.id, ex.fit, ex.psi_distance, ex.transfer_applicable, ex.transfer_ok, "");
        write_pgm(ctx.file("psi_" + nf.id + ".pgm").string(), network_action(net.params, nf.figure, side, extent).output);
    }
}

inline void write_segments(CsvWriter& out, const SweptRegion& region) {
    for (const auto& s : region.segments) out.row(s.t, s.segment.p.x(), s.segment.p.y(), s.segment.q.x(), s.segment.q.y());
}

inline void run_moduli_sweep(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const std::string shape = cfg.text("preset");
    const int side = static_cast<int>(cfg.integer("side"));
    const int steps = static_cast<int>(cfg.integer("steps"));
    const Extent extent = preset_extent(shape);
    auto summary = ctx.csv("sweep_summary.csv", {"preset", "generalized_edges", "segments", "set_pixels"});
    if (shape == "hexagon") {
        const Polygon hex = regular_polygon(6);
        const auto edges = triangulate_to_generalized_edges(hex);
        std::vector<RasterImage> parts;
        std::size_t strokes = 0;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const SweptRegion region = sweep(edges[k], steps, side, extent);
            auto seg = ctx.csv("segments_" + std::to_string(k) + ".csv", {"t", "x1", "y1", "x2", "y2"});
            write_segments(seg, region);
            strokes += region.segments.size();
            parts.push_back(region.raster);
        }
        RasterImage all = raster_union(parts);
        all.label = "swept-hexagon";
        write_pgm(ctx.file("sweep.pgm").string(), all);
        write_pgm(ctx.file("polygon_fill.pgm").string(), rasterize(hex, side, extent));
        summary.row(shape, edges.size(), strokes, all.count());
        return;
    }
    const SweptRegion region = sweep(preset_edge(shape), steps, side, extent);
    RasterImage img = region.raster;
    img.label = "swept-" + shape;
    write_pgm(ctx.file("sweep.pgm").string(), img);
    auto seg = ctx.csv("segments.csv", {"t", "x1", "y1", "x2", "y2"});
    write_segments(seg, region);
    summary.row(shape, 1, region.segments.size(), img.count());
}

inline void run_complexity_contrast(RunContext& ctx) {
    const auto& cfg = ctx.cfg();
    const std::string id = cfg.text("figure");
    const auto report = complexity_contrast(named_figure(id), ball_from(ctx), cfg.real("eps"), ctx.count("count"),
                                            cfg.workers, id == "edge" ? "edge-copy" : id);
    auto out = ctx.csv("contrast.csv", {"figure_id", "eps", "hits", "count", "fraction", "stderr"});
    write_feature_rows(out, {report.edge, report.figure});
    auto summary = ctx.csv("contrast_summary.csv", {"figure_id", "edge_fraction", "figure_fraction", "gap_sigma"});
    summary.row(report.figure.figure_id, report.edge.fraction, report.figure.fraction, report.gap_sigma);
}

}  // namespace detail

/// Runs the configured experiment, writing artifacts and `manifest.cfg` to
/// out_dir. The manifest's non-comment lines reproduce the run.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::RunContext ctx(cfg);
    const std::string& e = cfg.experiment;
    if (e == "orbit-check") detail::run_orbit_check(ctx);
    else if (e == "stab-volume") detail::run_stab_volume(ctx);
    else if (e == "feature-compare") detail::run_feature_compare(ctx);
    else if (e == "random-walk") detail::run_random_walk(ctx);
    else if (e == "train-ae") detail::run_train_ae(ctx);
    else if (e == "stack-ae") detail::run_stack_ae(ctx);
    else if (e == "shadow-fit") detail::run_shadow_fit(ctx);
    else if (e == "moduli-sweep") detail::run_moduli_sweep(ctx);
    else if (e == "complexity-contrast") detail::run_complexity_contrast(ctx);
    else throw UsageError("unknown experiment '" + e + "'");

    RunResult result;
    result.artifacts = ctx.artifacts();
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.manifest = cfg.out_dir / "manifest.cfg";
    std::ofstream os(result.manifest, std::ios::binary);
    if (!os) throw UsageError("cannot write " + result.manifest.string());
    os << "# orbitlab run manifest; replay with: orbitlab run --config manifest.cfg\n";
    os << render_config(cfg);
    os << "# tool_version " << kToolVersion << '\n';
    os << "# wall_clock_seconds " << format_number(result.seconds) << '\n';
    for (const auto& a : result.artifacts) os << "# sha256 " << a.filename().string() << ' ' << sha256_file(a) << '\n';
    return result;
}

}  // namespace orbitlab
