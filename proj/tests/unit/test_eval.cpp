#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

#include "arm/common/error.hpp"
#include "arm/eval/dataset.hpp"
#include "arm/eval/hsd.hpp"
#include "arm/eval/metrics.hpp"
#include "arm/scope/demo.hpp"

using namespace arm::eval;

namespace {

LabeledFOV fov(std::string id, Label label, double score)
{
    LabeledFOV f;
    f.id = std::move(id);
    f.label = label;
    f.score = score;
    return f;
}

std::vector<LabeledFOV> make(std::vector<double> pos, std::vector<double> neg)
{
    std::vector<LabeledFOV> d;
    for (double s : pos) d.push_back(fov("p" + std::to_string(d.size()), Label::Tumor, s));
    for (double s : neg) d.push_back(fov("n" + std::to_string(d.size()), Label::Benign, s));
    return d;
}

std::vector<LabeledFOV> random_dataset(std::mt19937_64& rng, int n, bool coarse)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<LabeledFOV> d;
    for (int i = 0; i < n; ++i) {
        const bool pos = i == 0 || (i != 1 && u(rng) < 0.4);
        double s = std::clamp(u(rng) * 0.7 + (pos ? 0.3 : 0.0), 0.0, 1.0);
        if (coarse) s = std::round(s * 10.0) / 10.0;
        d.push_back(fov(std::to_string(i), pos ? Label::Tumor : Label::Benign, s));
    }
    return d;
}

} // namespace

TEST_CASE("fov likelihood is the heatmap maximum")
{
    arm::infer::Heatmap h;
    h.rows = 3;
    h.cols = 4;
    h.values.assign(12, 0.0f);
    CHECK(fov_likelihood(h) == 0.0);
    h.at(1, 2) = 0.9f;
    CHECK(fov_likelihood(h) == doctest::Approx(0.9));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : h.values) v = u(rng);
    float m = 0.0f;
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c) m = std::max(m, h.at(r, c));
    CHECK(fov_likelihood(h) == m);
    CHECK_THROWS_AS(fov_likelihood(arm::infer::Heatmap{}), arm::Error);
}

TEST_CASE("confusion counts and metric formulas")
{
    const auto d = make({0.9, 0.4}, {0.6, 0.1});
    const auto all = confusion_at_threshold(d, 0.0);
    CHECK(all.tn == 0);
    CHECK(all.fn == 0);
    const auto none = confusion_at_threshold(d, 1.5);
    CHECK(none.tp == 0);
    CHECK(none.fp == 0);
    CHECK(confusion_at_threshold(d, 0.5) == ConfusionCounts{1, 1, 1, 1});
    CHECK(confusion_at_threshold(d, 0.6) == ConfusionCounts{1, 1, 1, 1});
    CHECK(confusion_at_threshold(d, 0.61) == ConfusionCounts{1, 2, 0, 1});

    const auto m = metrics({3, 2, 1, 4});
    CHECK(*m.accuracy == doctest::Approx(0.5));
    CHECK(*m.precision == doctest::Approx(0.75));
    CHECK(*m.recall == doctest::Approx(3.0 / 7.0));
    CHECK(*metrics({2, 5, 0, 1}).precision == 1.0);
    CHECK_FALSE(metrics({0, 5, 2, 0}).recall);
    CHECK_FALSE(metrics({0, 5, 0, 2}).precision);
}

TEST_CASE("roc curve examples")
{
    CHECK(roc_curve(make({0.9, 0.8}, {0.1, 0.2})).auc == doctest::Approx(1.0));
    CHECK(roc_curve(make({0.8, 0.4}, {0.6, 0.2})).auc == doctest::Approx(0.75));
    CHECK(roc_curve(make({0.5, 0.5, 0.5}, {0.5, 0.5})).auc == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_curve(make({0.3, 0.4}, {})), arm::Error);
    CHECK_THROWS_AS(auc_pair_counting(make({}, {0.3})), arm::Error);
}

TEST_CASE("trapezoid AUC matches pair counting, ROC is monotone and anchored")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> n(2, 200);
    for (int k = 0; k < 100; ++k) {
        const auto d = random_dataset(rng, n(rng), k % 2 == 0);
        const auto roc = roc_curve(d);
        CHECK(std::abs(roc.auc - auc_pair_counting(d)) < 1e-9);
        REQUIRE(roc.points.size() >= 2);
        CHECK(roc.points.front().fpr == 0.0);
        CHECK(roc.points.front().tpr == 0.0);
        CHECK(roc.points.back().fpr == 1.0);
        CHECK(roc.points.back().tpr == 1.0);
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
            CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
            CHECK(roc.points[i].threshold < roc.points[i - 1].threshold);
        }
        // Each ROC point is the confusion matrix at its threshold.
        std::size_t P = 0;
        for (const auto& f : d) P += f.label == Label::Tumor;
        const double prev = static_cast<double>(P) / static_cast<double>(d.size());
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            const auto m = metrics(confusion_at_threshold(d, roc.points[i].threshold));
            CHECK(*m.recall == doctest::Approx(roc.points[i].tpr));
            CHECK(*m.fpr == doctest::Approx(roc.points[i].fpr));
            CHECK(*m.accuracy == doctest::Approx(prev * *m.recall + (1.0 - prev) * (1.0 - *m.fpr)));
        }
    }
}

TEST_CASE("bootstrap intervals")
{
    const auto d = make({0.8, 0.4}, {0.6, 0.2});
    const Statistic constant = [](std::span<const LabeledFOV>) { return 0.42; };
    const auto c = bootstrap_ci(d, constant, 200, 1);
    CHECK(c.lo == 0.42);
    CHECK(c.hi == 0.42);

    const auto a = bootstrap_ci(d, auc_statistic, 2000, 9);
    CHECK(a.lo <= 0.75);
    CHECK(a.hi >= 0.75);
    CHECK(a.skipped > 0); // 4 FOVs: single-class draws happen
    const auto b = bootstrap_ci(d, auc_statistic, 2000, 9);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.skipped == b.skipped);
    CHECK_THROWS_AS(bootstrap_ci(d, auc_statistic, 99, 1), arm::Error);
    CHECK_THROWS_AS(bootstrap_ci(make({0.5}, {}), auc_statistic, 100, 1), arm::Error);
}

TEST_CASE("bootstrap intervals widen as the dataset shrinks")
{
    std::mt19937_64 rng(21);
    auto mean_width = [&](int n) {
        double w = 0.0;
        for (int k = 0; k < 8; ++k) {
            const auto d = random_dataset(rng, n, false);
            const auto ci = bootstrap_ci(d, auc_statistic, 400, static_cast<std::uint64_t>(k));
            w += ci.hi - ci.lo;
        }
        return w / 8.0;
    };
    const double small = mean_width(20);
    const double medium = mean_width(80);
    const double large = mean_width(320);
    MESSAGE("mean AUC CI width n=20 " << small << ", n=80 " << medium << ", n=320 " << large);
    CHECK(small > medium);
    CHECK(medium > large);
}

TEST_CASE("5000 replications on 500 FOVs is fast and reproducible")
{
    std::mt19937_64 rng(4);
    const auto d = random_dataset(rng, 500, false);
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = bootstrap_ci(d, auc_statistic, 5000, 123);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("5000 x 500 bootstrap took " << s << " s");
    CHECK(s < 30.0);
    const auto b = bootstrap_ci(d, auc_statistic, 5000, 123);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    const auto auc = roc_curve(d).auc;
    CHECK(a.lo <= auc);
    CHECK(a.hi >= auc);
}

TEST_CASE("operating points on separated data")
{
    const auto d = make({0.9, 0.8, 0.7}, {0.1, 0.2, 0.3});
    const auto pts = pick_operating_points(d);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].name == "high_accuracy");
    CHECK(pts[1].name == "high_precision");
    CHECK(pts[2].name == "high_recall");
    for (const auto& p : pts) {
        CHECK(p.threshold > 0.3);
        CHECK(p.threshold <= 0.7);
        CHECK(*p.metrics.accuracy == 1.0);
        CHECK(*p.metrics.precision == 1.0);
        CHECK(*p.metrics.recall == 1.0);
    }
}

TEST_CASE("operating points match exhaustive search")
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 200; ++k) {
        const auto d = random_dataset(rng, 10, k % 3 == 0);
        std::vector<double> cand;
        for (const auto& f : d) cand.push_back(f.score);

        double best_acc = -1, t_acc = 0, best_prec = -1, rec_prec = -1, t_prec = 0, t_rec = -1;
        for (double t : cand) {
            const auto m = metrics(confusion_at_threshold(d, t));
            if (*m.accuracy > best_acc || (*m.accuracy == best_acc && t > t_acc)) best_acc = *m.accuracy, t_acc = t;
            if (m.precision && *m.recall >= 0.5 &&
                std::tuple(*m.precision, *m.recall, t) > std::tuple(best_prec, rec_prec, t_prec))
                best_prec = *m.precision, rec_prec = *m.recall, t_prec = t;
            if (*m.recall >= 0.95 && t > t_rec) t_rec = t;
        }
        const auto pts = pick_operating_points(d);
        CHECK(pts[0].threshold == t_acc);
        CHECK(pts[1].threshold == t_prec);
        CHECK(pts[2].threshold == t_rec);
        CHECK(*pts[2].metrics.recall >= 0.95);
        for (const auto& p : pts) CHECK(p.counts == confusion_at_threshold(d, p.threshold));
    }
}

TEST_CASE("operating points fall back to the lowest score for recall")
{
    OperatingRules strict;
    strict.recall_target = 1.5; // unreachable
    const auto d = make({0.9, 0.4}, {0.6, 0.2});
    const auto pts = pick_operating_points(d, strict);
    CHECK(pts[2].threshold == 0.2);
    CHECK(*pts[2].metrics.recall == 1.0);
}

TEST_CASE("bundled 10-row manifest matches the hand tally")
{
    const auto d = read_manifest(std::filesystem::path(ARM_TEST_DATA_DIR) / "manifest10.csv");
    REQUIRE(d.size() == 10);
    CHECK(d[0].magnification == "10X");
    CHECK(roc_curve(d).auc == doctest::Approx(0.8));
    auto pts = pick_operating_points(d);
    CHECK(pts[0].threshold == doctest::Approx(0.30));
    CHECK(*pts[0].metrics.accuracy == doctest::Approx(0.8));
    CHECK(*pts[0].metrics.precision == doctest::Approx(5.0 / 7.0));
    CHECK(pts[1].threshold == doctest::Approx(0.70));
    CHECK(*pts[1].metrics.precision == doctest::Approx(0.75));
    CHECK(*pts[1].metrics.recall == doctest::Approx(0.6));
    CHECK(pts[2].threshold == doctest::Approx(0.30));
    CHECK(*pts[2].metrics.recall == 1.0);

    attach_confidence_intervals(pts, d, 500, 1);
    for (const auto& p : pts) {
        REQUIRE(p.accuracy_ci);
        CHECK(p.accuracy_ci->lo <= p.accuracy_ci->value);
        CHECK(p.accuracy_ci->hi >= p.accuracy_ci->value);
    }

    std::ostringstream os;
    write_metrics_csv(os, 0.8, std::nullopt, pts);
    const std::string text = os.str();
    CHECK(text.rfind("name,threshold,metric,value,lo,hi,tp,tn,fp,fn\nauc,NA,auc,0.800000,NA,NA", 0) == 0);
    CHECK(text.find("high_precision,0.700000,precision,0.750000,") != std::string::npos);
    CHECK(text.find("high_accuracy,0.300000,accuracy,0.800000,") != std::string::npos);

    std::ostringstream roc;
    write_roc_csv(roc, roc_curve(d));
    CHECK(roc.str().rfind("fpr,tpr,threshold\n0.000000,0.000000,inf\n", 0) == 0);
}

TEST_CASE("manifest parsing")
{
    std::istringstream ok("fov_id,label,score\na,1,0.3\nb,0,0.2\n\n");
    const auto d = read_manifest(ok);
    REQUIRE(d.size() == 2);
    CHECK(d[0].label == Label::Tumor);
    std::istringstream bad_label("fov_id,label,score\na,maybe,0.3\n");
    CHECK_THROWS_AS(read_manifest(bad_label), arm::Error);
    std::istringstream bad_score("fov_id,label,score\na,tumor,1.3\n");
    CHECK_THROWS_AS(read_manifest(bad_score), arm::Error);
    std::istringstream no_cols("fov_id,label\n");
    CHECK_THROWS_AS(read_manifest(no_cols), arm::Error);

    std::istringstream by_image("fov_id,label,image_path\na,tumor,x.png\n");
    const auto s = read_manifest(by_image, "/data", [](const std::filesystem::path& p) {
        return p == std::filesystem::path("/data/x.png") ? 0.7 : 0.0;
    });
    CHECK(s[0].score == 0.7);

    std::ostringstream out;
    write_manifest(out, d);
    std::istringstream back(out.str());
    const auto r = read_manifest(back);
    CHECK(r[1].score == 0.2);
    CHECK(r[1].label == Label::Benign);
}

TEST_CASE("manifest scores from exported heatmaps")
{
    const auto dir = std::filesystem::temp_directory_path() / "arm_eval_heatmaps";
    std::filesystem::create_directories(dir);
    arm::infer::Heatmap h;
    h.rows = 2;
    h.cols = 2;
    h.values = {0.1f, 0.6f, 0.2f, 0.0f};
    arm::infer::export_heatmap(h, dir / "a.png");
    std::istringstream in("fov_id,label,score,heatmap_path\na,tumor,,a.png\n");
    const auto d = read_manifest(in, dir);
    CHECK(d[0].score == doctest::Approx(0.6).epsilon(1e-4));
    std::filesystem::remove_all(dir);
}

TEST_CASE("HSD transform properties")
{
    const auto white = hsd_transform(255, 255, 255);
    CHECK(white.point.density == 0.0);
    CHECK(white.point.saturation == 0.0);
    CHECK(white.point.hue == 0.0);
    for (double g : {10.0, 77.0, 128.0, 254.0}) {
        const auto p = hsd_transform(g, g, g).point;
        CHECK(p.saturation == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p.hue == 0.0);
        CHECK(p.density == doctest::Approx(-std::log10(g / 255.0)));
    }
    const auto low = hsd_transform(0.0, 100, 300);
    CHECK(low.clamped);
    CHECK_FALSE(hsd_transform(1.0, 100, 255).clamped);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(1.0, 254.0), k(0.1, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double r = u(rng), g = u(rng), b = u(rng);
        // Largest s that keeps every channel at or above one count.
        const double s_max = std::log(1.0 / 255.0) / std::log(std::min({r, g, b}) / 255.0);
        const double s = k(rng) * std::min(s_max, 5.0);
        const auto p = hsd_transform(r, g, b).point;
        // c -> I0 * (c / I0)^s scales every OD by s.
        auto pw = [&](double c) { return 255.0 * std::pow(c / 255.0, s); };
        const auto qs = hsd_transform(pw(r), pw(g), pw(b));
        REQUIRE_FALSE(qs.clamped);
        const auto q = qs.point;
        CHECK(std::abs(p.hue - q.hue) < 1e-9);
        CHECK(std::abs(p.saturation - q.saturation) < 1e-9);
        CHECK(q.density == doctest::Approx(p.density * s).epsilon(1e-9));
    }
}

TEST_CASE("colour summary separates stain families and flags white images")
{
    using namespace arm::scope;
    DemoSlideOptions pink, purple;
    pink.cell_px = purple.cell_px = 96;
    pink.family = StainFamily::Pink;
    purple.family = StainFamily::Purple;
    std::vector<NamedImage> images;
    for (int s = 0; s < 3; ++s) {
        images.push_back({"pink" + std::to_string(s), make_demo_slide("p", 100 + s, pink).slide.image});
        images.push_back({"purple" + std::to_string(s), make_demo_slide("q", 200 + s, purple).slide.image});
    }
    images.push_back({"white", arm::tensor::Tensor(32, 32, 3, 1.0f)});
    images.push_back({"pink0_again", images[0].rgb});
    const auto sum = color_summary(images);
    REQUIRE(sum.rows.size() == 8);
    CHECK(sum.rows[6].excluded);
    CHECK(sum.rows[6].mean.saturation == 0.0);
    CHECK(sum.rows[7].mean.hue == sum.rows[0].mean.hue);
    CHECK(sum.histograms[7].counts == sum.histograms[0].counts);

    auto mean_hue = [&](int parity) {
        double cx = 0, cy = 0;
        for (int i = parity; i < 6; i += 2) cx += std::cos(sum.rows[i].mean.hue), cy += std::sin(sum.rows[i].mean.hue);
        return std::atan2(cy, cx);
    };
    const double sep = hue_distance(mean_hue(0), mean_hue(1));
    MESSAGE("pink/purple mean hue separation " << sep << " rad");
    CHECK(sep > 0.3);
    for (int i = 0; i < 6; i += 2)
        for (int j = 1; j < 6; j += 2) CHECK(hue_distance(sum.rows[i].mean.hue, sum.rows[j].mean.hue) > 0.3);

    std::ostringstream colors, hist;
    write_colors_csv(colors, sum);
    write_density_hist_csv(hist, sum);
    CHECK(colors.str().rfind("image_id,hue,saturation,density,tissue_fraction,clamped_pixels,excluded\n", 0) == 0);
    const std::string hist_text = hist.str();
    CHECK(std::count(hist_text.begin(), hist_text.end(), '\n') == 1 + 8 * ColorOptions{}.hist_bins);
}
