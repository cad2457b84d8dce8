#include "arm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "arm/common/error.hpp"

namespace arm::eval {

double fov_likelihood(const infer::Heatmap& h)
{
    if (h.values.empty()) throw Error(ErrorCode::EmptyInput, "empty heatmap");
    return *std::max_element(h.values.begin(), h.values.end());
}

ConfusionCounts confusion_at_threshold(std::span<const LabeledFOV> data, double t)
{
    ConfusionCounts c;
    for (const auto& f : data) {
        const bool pred = f.score >= t;
        const bool pos = f.label == Label::Tumor;
        if (pred && pos) ++c.tp;
        else if (pred) ++c.fp;
        else if (pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c)
{
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    return {ratio(c.tp + c.tn, c.total()), ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn), ratio(c.fp, c.fp + c.tn)};
}

namespace {

std::pair<std::size_t, std::size_t> class_counts(std::span<const LabeledFOV> data)
{
    std::size_t pos = 0;
    for (const auto& f : data) pos += f.label == Label::Tumor;
    return {pos, data.size() - pos};
}

void require_both(std::span<const LabeledFOV> data)
{
    const auto [p, n] = class_counts(data);
    if (p == 0 || n == 0) throw Error(ErrorCode::SingleClass, "dataset needs both benign and tumor FOVs");
}

// Trapezoid area over the tie-grouped sweep of (score, is_positive) pairs.
double sweep_auc(std::vector<std::pair<double, bool>>& s, std::vector<RocPoint>* points)
{
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double P = 0, N = 0;
    for (const auto& [_, pos] : s) (pos ? P : N) += 1;
    double tp = 0, fp = 0, area = 0, prev_x = 0, prev_y = 0;
    if (points) points->push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < s.size();) {
        const double score = s[i].first;
        for (; i < s.size() && s[i].first == score; ++i) (s[i].second ? tp : fp) += 1;
        const double x = fp / N;
        const double y = tp / P;
        area += (x - prev_x) * (y + prev_y) / 2.0;
        prev_x = x;
        prev_y = y;
        if (points) points->push_back({x, y, score});
    }
    return area;
}

std::vector<std::pair<double, bool>> pairs_of(std::span<const LabeledFOV> data)
{
    std::vector<std::pair<double, bool>> s;
    s.reserve(data.size());
    for (const auto& f : data) s.push_back({f.score, f.label == Label::Tumor});
    return s;
}

double percentile(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

} // namespace

RocCurve roc_curve(std::span<const LabeledFOV> data)
{
    require_both(data);
    RocCurve c;
    auto s = pairs_of(data);
    c.auc = sweep_auc(s, &c.points);
    return c;
}

double auc_statistic(std::span<const LabeledFOV> data)
{
    auto s = pairs_of(data);
    return sweep_auc(s, nullptr);
}

double auc_pair_counting(std::span<const LabeledFOV> data)
{
    require_both(data);
    double wins = 0;
    std::size_t pairs = 0;
    for (const auto& a : data) {
        if (a.label != Label::Tumor) continue;
        for (const auto& b : data) {
            if (b.label != Label::Benign) continue;
            ++pairs;
            wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
        }
    }
    return wins / static_cast<double>(pairs);
}

BootstrapResult bootstrap_ci(std::span<const LabeledFOV> data, const Statistic& statistic, int replications,
                             std::uint64_t seed, bool require_both_classes, double level)
{
    if (replications < 100) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 100 replications");
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "bootstrap on an empty dataset");
    if (require_both_classes) require_both(data);

    BootstrapResult r;
    r.replications = replications;
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(replications));
    std::vector<LabeledFOV> sample(data.size());
    for (int i = 0; i < replications; ++i) {
        std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(sseq);
        std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
        for (;;) {
            std::size_t pos = 0;
            for (auto& s : sample) {
                s = data[pick(rng)];
                pos += s.label == Label::Tumor;
            }
            if (!require_both_classes || (pos > 0 && pos < sample.size())) break;
            ++r.skipped;
        }
        const double v = statistic(sample);
        if (std::isnan(v)) {
            ++r.skipped; // undefined for this resample
            continue;
        }
        stats.push_back(v);
    }
    if (stats.empty()) throw Error(ErrorCode::EmptyInput, "statistic undefined on every resample");
    std::sort(stats.begin(), stats.end());
    const double tail = (1.0 - level) / 2.0;
    r.lo = percentile(stats, tail);
    r.hi = percentile(stats, 1.0 - tail);
    return r;
}

std::vector<OperatingPoint> pick_operating_points(std::span<const LabeledFOV> data, const OperatingRules& rules)
{
    require_both(data);
    std::vector<double> cand;
    for (const auto& f : data) cand.push_back(f.score);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    struct Eval {
        double t;
        ConfusionCounts c;
        Metrics m;
    };
    std::vector<Eval> ev;
    for (double t : cand) {
        const auto c = confusion_at_threshold(data, t);
        ev.push_back({t, c, metrics(c)});
    }

    auto make = [](const char* name, const Eval& e) {
        OperatingPoint p;
        p.name = name;
        p.threshold = e.t;
        p.counts = e.c;
        p.metrics = e.m;
        return p;
    };

    // ev is in ascending threshold order, so ">=" keeps the higher threshold on ties.
    const Eval* acc = &ev.front();
    for (const auto& e : ev)
        if (*e.m.accuracy >= *acc->m.accuracy) acc = &e;

    const Eval* prec = nullptr;
    for (const auto& e : ev) {
        if (!e.m.precision || *e.m.recall < rules.precision_recall_floor) continue;
        if (!prec || *e.m.precision > *prec->m.precision ||
            (*e.m.precision == *prec->m.precision && *e.m.recall >= *prec->m.recall))
            prec = &e;
    }
    if (!prec) prec = &ev.front();

    const Eval* rec = nullptr;
    for (auto it = ev.rbegin(); it != ev.rend(); ++it)
        if (*it->m.recall >= rules.recall_target) {
            rec = &*it;
            break;
        }
    if (!rec) rec = &ev.front();

    return {make("high_accuracy", *acc), make("high_precision", *prec), make("high_recall", *rec)};
}

void attach_confidence_intervals(std::vector<OperatingPoint>& points, std::span<const LabeledFOV> data, int replications,
                                 std::uint64_t seed)
{
    using Getter = std::optional<double> Metrics::*;
    auto ci_for = [&](double t, Getter g, std::optional<double> value) -> std::optional<MetricCI> {
        if (!value) return std::nullopt;
        const Statistic stat = [t, g](std::span<const LabeledFOV> s) {
            const auto m = metrics(confusion_at_threshold(s, t));
            return (m.*g).value_or(std::numeric_limits<double>::quiet_NaN());
        };
        const auto b = bootstrap_ci(data, stat, replications, seed);
        return MetricCI{*value, b.lo, b.hi};
    };
    for (auto& p : points) {
        p.accuracy_ci = ci_for(p.threshold, &Metrics::accuracy, p.metrics.accuracy);
        p.precision_ci = ci_for(p.threshold, &Metrics::precision, p.metrics.precision);
        p.recall_ci = ci_for(p.threshold, &Metrics::recall, p.metrics.recall);
    }
}

} // namespace arm::eval
