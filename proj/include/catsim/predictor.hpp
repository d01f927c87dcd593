#pragma once

// Data-rate regression: ordinary least squares and an M5-style model tree
// (standard-deviation-reduction splits, linear leaves, error-based pruning),
// plus k-fold cross-validation and the usual error metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "catsim/csv.hpp"
#include "catsim/error.hpp"

namespace catsim {

struct FeatureVector {
    double rsrp = 0.0;           // dBm
    double rsrq = 0.0;           // dB
    double snr = 0.0;            // dB
    double cqi = 0.0;            // index
    double payload_bytes = 1.0;  // bytes
    std::optional<double> speed; // m/s
};

struct LabeledSample {
    FeatureVector features;
    double rate = 0.0;  // MBit/s
};

inline constexpr std::size_t kBaseFeatureCount = 5;
inline constexpr std::size_t kMaxFeatureCount = 6;
inline constexpr std::array<std::string_view, kMaxFeatureCount> kFeatureNames = {
    "rsrp", "rsrq", "snr", "cqi", "payload_bytes", "speed"};

using FeatureRow = std::array<double, kMaxFeatureCount>;

/// Flattens features in kFeatureNames order. Only the first `count` entries are meaningful.
inline FeatureRow feature_row(const FeatureVector& f, std::size_t count) {
    if (count > kBaseFeatureCount && !f.speed) throw Error("feature vector lacks speed required by the model");
    return {f.rsrp, f.rsrq, f.snr, f.cqi, f.payload_bytes, f.speed.value_or(0.0)};
}

// ---------------------------------------------------------------------------
// Linear model

struct LinearModel {
    double intercept = 0.0;
    std::vector<double> coefficients;      // one per feature
    std::vector<std::size_t> dropped;      // columns not estimated (rank deficiency or elimination), fitted as 0

    std::size_t feature_count() const { return coefficients.size(); }

    double evaluate(const FeatureRow& x) const {
        double y = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) y += coefficients[j] * x[j];
        return y;
    }

    /// Intercept plus the coefficients actually estimated.
    std::size_t parameter_count() const { return 1 + coefficients.size() - dropped.size(); }
};

namespace detail {

/// OLS on the rows selected by `idx`. Columns are centred and scaled before a
/// column-pivoting QR so that constant or collinear columns are detected and
/// fitted as zero.
inline LinearModel fit_ols(const std::vector<FeatureRow>& x, const std::vector<double>& y,
                           std::span<const std::size_t> idx, std::size_t features,
                           std::span<const bool> excluded = {}) {
    const auto n = idx.size();
    if (n == 0) throw Error("linear regression: empty dataset");
    LinearModel m;
    m.coefficients.assign(features, 0.0);

    std::vector<double> mean(features, 0.0);
    double y_mean = 0.0;
    for (auto i : idx) {
        for (std::size_t j = 0; j < features; ++j) mean[j] += x[i][j];
        y_mean += y[i];
    }
    for (auto& v : mean) v /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);

    std::vector<double> scale(features, 0.0);
    for (auto i : idx)
        for (std::size_t j = 0; j < features; ++j) scale[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
    for (auto& s : scale) s = std::sqrt(s / static_cast<double>(n));

    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto i = idx[r];
        for (std::size_t j = 0; j < features; ++j) {
            const double relative = std::abs(mean[j]) > 0.0 ? scale[j] / std::abs(mean[j]) : scale[j];
            const bool usable = scale[j] > 0.0 && relative > 1e-12 && (excluded.empty() || !excluded[j]);
            a(r, j) = usable ? (x[i][j] - mean[j]) / scale[j] : 0.0;
        }
        b(r) = y[i] - y_mean;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    const auto rank = static_cast<std::size_t>(qr.rank());
    Eigen::VectorXd sol = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features));
    if (rank > 0) sol = qr.solve(b);
    const auto& perm = qr.colsPermutation().indices();
    for (std::size_t p = rank; p < features; ++p) {
        const auto col = static_cast<std::size_t>(perm(static_cast<Eigen::Index>(p)));
        sol(static_cast<Eigen::Index>(col)) = 0.0;
        m.dropped.push_back(col);
    }
    std::sort(m.dropped.begin(), m.dropped.end());

    m.intercept = y_mean;
    for (std::size_t j = 0; j < features; ++j) {
        if (std::find(m.dropped.begin(), m.dropped.end(), j) != m.dropped.end()) continue;
        m.coefficients[j] = sol(static_cast<Eigen::Index>(j)) / scale[j];
        m.intercept -= m.coefficients[j] * mean[j];
    }
    return m;
}

inline double mean_abs_residual(const LinearModel& m, const std::vector<FeatureRow>& x, const std::vector<double>& y,
                                std::span<const std::size_t> idx) {
    double s = 0.0;
    for (auto i : idx) s += std::abs(y[i] - m.evaluate(x[i]));
    return s / static_cast<double>(idx.size());
}

/// Pessimistic error estimate: mean absolute residual inflated by (n + v) / (n - v).
inline double estimated_error(const LinearModel& m, const std::vector<FeatureRow>& x, const std::vector<double>& y,
                              std::span<const std::size_t> idx) {
    const auto n = static_cast<double>(idx.size());
    const auto v = static_cast<double>(m.parameter_count());
    const double factor = n > v ? (n + v) / (n - v) : 10.0;
    return factor * mean_abs_residual(m, x, y, idx);
}

/// Greedy backward elimination: repeatedly drops the feature whose removal
/// lowers the estimated error most, until no removal helps.
inline LinearModel fit_simplified(const std::vector<FeatureRow>& x, const std::vector<double>& y,
                                  std::span<const std::size_t> idx, std::size_t features) {
    std::array<bool, kMaxFeatureCount> excluded{};
    auto best = fit_ols(x, y, idx, features, std::span<const bool>(excluded.data(), features));
    double best_err = estimated_error(best, x, y, idx);
    for (auto j : best.dropped) excluded[j] = true;
    while (true) {
        std::optional<std::size_t> drop;
        LinearModel candidate_best;
        double candidate_err = best_err;
        for (std::size_t j = 0; j < features; ++j) {
            if (excluded[j]) continue;
            auto trial = excluded;
            trial[j] = true;
            auto m = fit_ols(x, y, idx, features, std::span<const bool>(trial.data(), features));
            const double e = estimated_error(m, x, y, idx);
            if (e <= candidate_err) {
                candidate_err = e;
                candidate_best = std::move(m);
                drop = j;
            }
        }
        if (!drop) return best;
        excluded[*drop] = true;
        for (auto j : candidate_best.dropped) excluded[j] = true;
        best = std::move(candidate_best);
        best_err = candidate_err;
    }
}

inline double population_sd(const std::vector<double>& y, std::span<const std::size_t> idx) {
    double mean = 0.0;
    for (auto i : idx) mean += y[i];
    mean /= static_cast<double>(idx.size());
    double ss = 0.0;
    for (auto i : idx) ss += (y[i] - mean) * (y[i] - mean);
    return std::sqrt(ss / static_cast<double>(idx.size()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model tree

struct TreeNode {
    bool leaf = true;
    std::size_t feature = 0;  // split feature index
    double threshold = 0.0;   // x[feature] <= threshold goes left
    std::size_t left = 0;     // child indices into ModelTree::nodes
    std::size_t right = 0;
    std::size_t samples = 0;  // training samples routed here
    LinearModel model;        // meaningful at leaves
    double label_min = 0.0;   // leaf output is bounded to the training label range
    double label_max = 0.0;

    double evaluate(const FeatureRow& x) const { return std::clamp(model.evaluate(x), label_min, label_max); }
};

struct ModelTree {
    std::vector<TreeNode> nodes;  // preorder, nodes[0] is the root
    std::size_t feature_count = kBaseFeatureCount;
    std::size_t min_leaf_size = 0;

    std::size_t leaf_index(const FeatureRow& x) const {
        std::size_t i = 0;
        while (!nodes[i].leaf) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
        return i;
    }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](auto& n) { return n.leaf; }));
    }

    std::size_t depth() const {
        std::vector<std::size_t> d(nodes.size(), 0);
        std::size_t best = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            best = std::max(best, d[i]);
            if (!nodes[i].leaf) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
        }
        return best;
    }
};

using Regressor = std::variant<LinearModel, ModelTree>;

enum class Learner { model_tree, linear };

inline std::string_view to_string(Learner l) { return l == Learner::model_tree ? "model_tree" : "linear"; }

inline std::optional<Learner> learner_from_string(std::string_view s) {
    if (s == "model_tree" || s == "m5" || s == "m5t") return Learner::model_tree;
    if (s == "linear" || s == "lr") return Learner::linear;
    return std::nullopt;
}

struct TrainOptions {
    bool use_speed = false;
    std::size_t min_leaf_size = 0;   // 0 selects 2 * feature count
    double sd_stop_fraction = 0.05;  // stop when node SD < fraction * root SD
    bool prune = true;
};

namespace detail {

struct Design {
    std::vector<FeatureRow> x;
    std::vector<double> y;
    std::size_t features = kBaseFeatureCount;
};

inline Design make_design(std::span<const LabeledSample> data, bool use_speed) {
    Design d;
    d.features = use_speed ? kMaxFeatureCount : kBaseFeatureCount;
    d.x.reserve(data.size());
    d.y.reserve(data.size());
    for (const auto& s : data) {
        if (!std::isfinite(s.rate) || s.rate < 0.0) throw Error("dataset: label must be finite and >= 0");
        d.x.push_back(feature_row(s.features, d.features));
        d.y.push_back(s.rate);
    }
    return d;
}

struct BuildNode {
    std::vector<std::size_t> idx;
    LinearModel model;
    double label_min = 0.0;
    double label_max = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<BuildNode> left, right;
    double error = 0.0;  // estimated error after pruning
};

struct TreeBuilder {
    const Design& d;
    const TrainOptions& opt;
    std::size_t min_leaf;
    double root_sd = 0.0;

    std::unique_ptr<BuildNode> build(std::vector<std::size_t> idx) {
        auto node = std::make_unique<BuildNode>();
        node->idx = std::move(idx);
        node->model = fit_simplified(d.x, d.y, node->idx, d.features);
        const auto [lo, hi] = std::minmax_element(node->idx.begin(), node->idx.end(),
                                                  [&](std::size_t a, std::size_t b) { return d.y[a] < d.y[b]; });
        node->label_min = d.y[*lo];
        node->label_max = d.y[*hi];
        const auto n = node->idx.size();
        const double sd = population_sd(d.y, node->idx);

        if (n >= 2 * min_leaf && sd > 0.0 && sd >= opt.sd_stop_fraction * root_sd) split(*node, sd);

        const double own = estimated_error(node->model, d.x, d.y, node->idx);
        if (node->left) {
            const double nl = static_cast<double>(node->left->idx.size());
            const double nr = static_cast<double>(node->right->idx.size());
            const double subtree = (nl * node->left->error + nr * node->right->error) / (nl + nr);
            if (opt.prune && own <= subtree) {
                node->left.reset();
                node->right.reset();
                node->error = own;
            } else {
                node->error = subtree;
            }
        } else {
            node->error = own;
        }
        return node;
    }

    void split(BuildNode& node, double sd) {
        const auto n = node.idx.size();
        double best_sdr = 0.0;
        std::optional<std::pair<std::size_t, double>> best;
        std::vector<std::size_t> order(node.idx);
        for (std::size_t f = 0; f < d.features; ++f) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return d.x[a][f] < d.x[b][f]; });
            // Prefix sums give left/right SD for every cut in one pass.
            double s = 0.0, ss = 0.0, total = 0.0, total_sq = 0.0;
            for (auto i : order) {
                total += d.y[i];
                total_sq += d.y[i] * d.y[i];
            }
            for (std::size_t cut = 1; cut < n; ++cut) {
                const double yi = d.y[order[cut - 1]];
                s += yi;
                ss += yi * yi;
                if (cut < min_leaf || n - cut < min_leaf) continue;
                const double lo = d.x[order[cut - 1]][f];
                const double hi = d.x[order[cut]][f];
                if (!(lo < hi)) continue;
                const double nl = static_cast<double>(cut);
                const double nr = static_cast<double>(n - cut);
                const double var_l = std::max(0.0, ss / nl - (s / nl) * (s / nl));
                const double var_r =
                    std::max(0.0, (total_sq - ss) / nr - ((total - s) / nr) * ((total - s) / nr));
                const double sdr = sd - (nl / static_cast<double>(n)) * std::sqrt(var_l) -
                                   (nr / static_cast<double>(n)) * std::sqrt(var_r);
                if (sdr > best_sdr) {
                    best_sdr = sdr;
                    double thr = lo + (hi - lo) / 2.0;
                    if (!(thr < hi)) thr = lo;
                    best = std::pair{f, thr};
                }
            }
        }
        if (!best) return;
        node.feature = best->first;
        node.threshold = best->second;
        std::vector<std::size_t> li, ri;
        for (auto i : node.idx) (d.x[i][node.feature] <= node.threshold ? li : ri).push_back(i);
        node.left = build(std::move(li));
        node.right = build(std::move(ri));
    }
};

inline std::size_t flatten(const BuildNode& b, std::vector<TreeNode>& out) {
    const auto id = out.size();
    out.push_back({});
    out[id].samples = b.idx.size();
    if (!b.left) {
        out[id].leaf = true;
        out[id].model = b.model;
        out[id].label_min = b.label_min;
        out[id].label_max = b.label_max;
        return id;
    }
    out[id].leaf = false;
    out[id].feature = b.feature;
    out[id].threshold = b.threshold;
    const auto l = flatten(*b.left, out);
    const auto r = flatten(*b.right, out);
    out[id].left = l;
    out[id].right = r;
    return id;
}

}  // namespace detail

/// Ordinary least squares over all features. Linearly dependent columns are
/// reported in `dropped` and fitted as zero.
inline LinearModel train_linear(std::span<const LabeledSample> dataset, const TrainOptions& opt = {}) {
    if (dataset.empty()) throw Error("train_linear: empty dataset");
    const auto d = detail::make_design(dataset, opt.use_speed);
    std::vector<std::size_t> idx(d.y.size());
    std::iota(idx.begin(), idx.end(), 0);
    return detail::fit_ols(d.x, d.y, idx, d.features);
}

inline ModelTree train_model_tree(std::span<const LabeledSample> dataset, const TrainOptions& opt = {}) {
    if (dataset.empty()) throw Error("train_model_tree: empty dataset");
    const auto d = detail::make_design(dataset, opt.use_speed);
    const std::size_t min_leaf = opt.min_leaf_size == 0 ? 2 * d.features : opt.min_leaf_size;
    if (min_leaf < 2 * d.features)
        throw Error("train_model_tree: min_leaf_size must be at least twice the feature count");

    std::vector<std::size_t> idx(d.y.size());
    std::iota(idx.begin(), idx.end(), 0);
    detail::TreeBuilder builder{d, opt, min_leaf, detail::population_sd(d.y, idx)};
    const auto root = builder.build(std::move(idx));

    ModelTree tree;
    tree.feature_count = d.features;
    tree.min_leaf_size = min_leaf;
    detail::flatten(*root, tree.nodes);
    return tree;
}

inline Regressor train(Learner learner, std::span<const LabeledSample> dataset, const TrainOptions& opt = {}) {
    if (learner == Learner::linear) return train_linear(dataset, opt);
    return train_model_tree(dataset, opt);
}

/// Predicted data rate in MBit/s, clamped at 0.
inline double predict(const LinearModel& m, const FeatureVector& f) {
    return std::max(0.0, m.evaluate(feature_row(f, m.feature_count())));
}

inline double predict(const ModelTree& t, const FeatureVector& f) {
    const auto x = feature_row(f, t.feature_count);
    return std::max(0.0, t.nodes[t.leaf_index(x)].evaluate(x));
}

inline double predict(const Regressor& r, const FeatureVector& f) {
    return std::visit([&](const auto& m) { return predict(m, f); }, r);
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalMetrics {
    std::optional<double> correlation;  // empty when either series has zero variance
    double mae = 0.0;
    double rmse = 0.0;
};

inline EvalMetrics eval_metrics(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.size() != actuals.size()) throw Error("eval_metrics: length mismatch");
    if (predictions.empty()) throw Error("eval_metrics: empty input");
    const auto n = static_cast<double>(predictions.size());
    double abs_sum = 0.0, sq_sum = 0.0, mp = 0.0, ma = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - actuals[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        mp += predictions[i];
        ma += actuals[i];
    }
    mp /= n;
    ma /= n;
    double cov = 0.0, vp = 0.0, va = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        cov += (predictions[i] - mp) * (actuals[i] - ma);
        vp += (predictions[i] - mp) * (predictions[i] - mp);
        va += (actuals[i] - ma) * (actuals[i] - ma);
    }
    EvalMetrics m;
    m.mae = abs_sum / n;
    m.rmse = std::max(m.mae, std::sqrt(sq_sum / n));
    if (vp > 0.0 && va > 0.0) m.correlation = std::clamp(cov / std::sqrt(vp * va), -1.0, 1.0);
    return m;
}

struct CrossValidation {
    EvalMetrics metrics;
    std::vector<double> predictions;  // held-out prediction per sample, dataset order
    std::vector<std::size_t> fold;    // fold index per sample
};

inline CrossValidation cross_validate(std::span<const LabeledSample> dataset, std::size_t k, Learner learner,
                                      std::uint64_t seed, const TrainOptions& opt = {}) {
    if (k < 2) throw Error("cross_validate: k must be >= 2");
    if (k > dataset.size()) throw Error("cross_validate: k exceeds dataset size");
    const auto n = dataset.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    CrossValidation cv;
    cv.predictions.assign(n, 0.0);
    cv.fold.assign(n, 0);
    std::vector<double> actual(n);
    for (std::size_t f = 0; f < k; ++f) {
        const auto lo = f * n / k;
        const auto hi = (f + 1) * n / k;
        std::vector<LabeledSample> train_set;
        train_set.reserve(n - (hi - lo));
        for (std::size_t p = 0; p < n; ++p)
            if (p < lo || p >= hi) train_set.push_back(dataset[order[p]]);
        const auto model = train(learner, train_set, opt);
        for (std::size_t p = lo; p < hi; ++p) {
            const auto i = order[p];
            cv.predictions[i] = predict(model, dataset[i].features);
            cv.fold[i] = f;
        }
    }
    for (std::size_t i = 0; i < n; ++i) actual[i] = dataset[i].rate;
    cv.metrics = eval_metrics(cv.predictions, actual);
    return cv;
}

// ---------------------------------------------------------------------------
// Dataset CSV (transfer logs or external measurements with the same columns)

inline std::vector<LabeledSample> read_dataset_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto c_rsrp = table.require_column("rsrp_dbm");
    const auto c_rsrq = table.require_column("rsrq_db");
    const auto c_snr = table.require_column("snr_db");
    const auto c_cqi = table.require_column("cqi");
    const auto c_bytes = table.require_column("bytes");
    const auto c_rate = table.require_column("goodput_mbps");
    const auto c_speed = table.column("speed_mps");
    std::vector<LabeledSample> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        LabeledSample s;
        s.features.rsrp = table.number(r, c_rsrp);
        s.features.rsrq = table.number(r, c_rsrq);
        s.features.snr = table.number(r, c_snr);
        s.features.cqi = table.number(r, c_cqi);
        s.features.payload_bytes = table.number(r, c_bytes);
        if (c_speed) s.features.speed = table.number(r, *c_speed);
        s.rate = table.number(r, c_rate);
        if (!(s.features.payload_bytes > 0.0))
            throw ParseError("row " + std::to_string(table.line_numbers[r]) + ": bytes must be > 0");
        if (!(s.rate >= 0.0) || !std::isfinite(s.rate))
            throw ParseError("row " + std::to_string(table.line_numbers[r]) + ": goodput must be finite and >= 0");
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model text format
//
//   catsim-model 1
//   features rsrp rsrq snr cqi payload_bytes
//   linear <intercept> <c_0> ... <c_{F-1}>
// or
//   tree <min_leaf_size> <node count>
//   split <feature> <threshold> <samples>     (followed by left, then right subtree)
//   leaf <samples> <label min> <label max> <intercept> <c_0> ... <c_{F-1}>

namespace detail {

inline void write_linear_fields(std::ostream& out, const LinearModel& m) {
    out << csv::format_double(m.intercept);
    for (double c : m.coefficients) out << ' ' << csv::format_double(c);
}

inline void write_tree_node(std::ostream& out, const ModelTree& t, std::size_t i, int depth) {
    const auto& n = t.nodes[i];
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (n.leaf) {
        out << "leaf " << n.samples << ' ' << csv::format_double(n.label_min) << ' '
            << csv::format_double(n.label_max) << ' ';
        write_linear_fields(out, n.model);
        out << '\n';
        return;
    }
    out << "split " << kFeatureNames[n.feature] << ' ' << csv::format_double(n.threshold) << ' ' << n.samples
        << '\n';
    write_tree_node(out, t, n.left, depth + 1);
    write_tree_node(out, t, n.right, depth + 1);
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word(std::string_view what) {
        std::string w;
        if (!(in_ >> w)) throw ParseError("model: unexpected end of input, expected " + std::string(what));
        return w;
    }

    void expect(std::string_view token) {
        const auto w = word(token);
        if (w != token) throw ParseError("model: expected '" + std::string(token) + "', found '" + w + "'");
    }

    double number(std::string_view what) {
        const auto w = word(what);
        auto v = csv::to_double(w);
        if (!v) throw ParseError("model: cannot parse " + std::string(what) + " '" + w + "'");
        return *v;
    }

    std::size_t count(std::string_view what) {
        const double v = number(what);
        if (v < 0.0 || v != std::floor(v)) throw ParseError("model: " + std::string(what) + " must be a count");
        return static_cast<std::size_t>(v);
    }

private:
    std::istream& in_;
};

inline LinearModel read_linear_fields(TokenReader& r, std::size_t features) {
    LinearModel m;
    m.intercept = r.number("intercept");
    m.coefficients.resize(features);
    for (auto& c : m.coefficients) c = r.number("coefficient");
    return m;
}

inline std::size_t read_tree_node(TokenReader& r, ModelTree& t, std::size_t depth) {
    if (depth > 512) throw ParseError("model: tree too deep");
    const auto kind = r.word("node kind");
    const auto id = t.nodes.size();
    t.nodes.push_back({});
    if (kind == "leaf") {
        t.nodes[id].samples = r.count("sample count");
        t.nodes[id].label_min = r.number("label minimum");
        t.nodes[id].label_max = r.number("label maximum");
        if (!(t.nodes[id].label_min <= t.nodes[id].label_max)) throw ParseError("model: leaf label range inverted");
        t.nodes[id].model = read_linear_fields(r, t.feature_count);
        return id;
    }
    if (kind != "split") throw ParseError("model: unknown node kind '" + kind + "'");
    const auto fname = r.word("feature name");
    auto it = std::find(kFeatureNames.begin(), kFeatureNames.begin() + static_cast<long>(t.feature_count), fname);
    if (it == kFeatureNames.begin() + static_cast<long>(t.feature_count))
        throw ParseError("model: unknown split feature '" + fname + "'");
    t.nodes[id].leaf = false;
    t.nodes[id].feature = static_cast<std::size_t>(it - kFeatureNames.begin());
    t.nodes[id].threshold = r.number("threshold");
    t.nodes[id].samples = r.count("sample count");
    const auto l = read_tree_node(r, t, depth + 1);
    const auto rr = read_tree_node(r, t, depth + 1);
    t.nodes[id].left = l;
    t.nodes[id].right = rr;
    return id;
}

}  // namespace detail

inline void write_model(std::ostream& out, const Regressor& model) {
    const std::size_t features =
        std::visit([](const auto& m) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>) return m.feature_count();
            else return m.feature_count;
        }, model);
    out << "catsim-model 1\nfeatures";
    for (std::size_t j = 0; j < features; ++j) out << ' ' << kFeatureNames[j];
    out << '\n';
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        out << "linear ";
        detail::write_linear_fields(out, *lin);
        out << '\n';
        return;
    }
    const auto& tree = std::get<ModelTree>(model);
    out << "tree " << tree.min_leaf_size << ' ' << tree.nodes.size() << '\n';
    detail::write_tree_node(out, tree, 0, 0);
}

inline Regressor read_model(std::istream& in) {
    detail::TokenReader r(in);
    r.expect("catsim-model");
    if (r.word("version") != "1") throw ParseError("model: unsupported version");
    r.expect("features");
    // Feature names follow until the model kind keyword.
    std::size_t features = 0;
    std::string kind;
    while (true) {
        auto w = r.word("feature name or model kind");
        if (w == "linear" || w == "tree") {
            kind = w;
            break;
        }
        if (features >= kMaxFeatureCount || w != kFeatureNames[features])
            throw ParseError("model: unexpected feature '" + w + "'");
        ++features;
    }
    if (features != kBaseFeatureCount && features != kMaxFeatureCount)
        throw ParseError("model: feature list must be the base set, optionally plus speed");
    if (kind == "linear") return detail::read_linear_fields(r, features);
    ModelTree t;
    t.feature_count = features;
    t.min_leaf_size = r.count("min leaf size");
    const auto expected = r.count("node count");
    detail::read_tree_node(r, t, 0);
    if (t.nodes.size() != expected) throw ParseError("model: node count mismatch");
    return t;
}

}  // namespace catsim
