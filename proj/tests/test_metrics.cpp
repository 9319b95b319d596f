#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "emu/core/error.hpp"
#include "emu/metrics/metrics.hpp"
#include "emu/metrics/report.hpp"

using namespace emu;
using namespace emu::metrics;
namespace fs = std::filesystem;

namespace {
// Independent reference: scan all ordered pairs and test rook adjacency.
std::optional<double> brute_moran(const std::vector<double>& z, const std::vector<std::uint8_t>& mask,
                                  std::size_t h, std::size_t w) {
    const std::size_t cells = h * w;
    std::size_t n = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (!mask[i]) continue;
        ++n;
        mean += z[i];
    }
    if (n < 2) return std::nullopt;
    mean /= static_cast<double>(n);
    std::vector<double> d(cells, 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (!mask[i]) continue;
        d[i] = z[i] - mean;
        den += d[i] * d[i];
    }
    if (den == 0.0) return std::nullopt;
    double num = 0.0;
    std::size_t links = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        for (std::size_t j = 0; j < cells; ++j) {
            if (!mask[i] || !mask[j]) continue;
            const long dy = std::labs(static_cast<long>(i / w) - static_cast<long>(j / w));
            const long dx = std::labs(static_cast<long>(i % w) - static_cast<long>(j % w));
            if (dy + dx == 1) {
                num += d[i] * d[j];
                ++links;
            }
        }
    }
    if (links == 0) return std::nullopt;
    return (static_cast<double>(n) / static_cast<double>(links)) * (num / den);
}
}  // namespace

TEST_CASE("moment pools reproduce hand statistics and merge like concatenation") {
    MomentPool p;
    p.add(1.0);
    p.add(3.0);
    CHECK(*p.mean() == 2.0);
    CHECK(*p.stddev() == 1.0);
    CHECK(*p.cv_percent() == 50.0);
    CHECK(*p.rms() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));

    MomentPool empty;
    CHECK(!empty.mean());
    CHECK(!empty.cv_percent());

    MomentPool zero_mean;
    zero_mean.add(-1.0);
    zero_mean.add(1.0);
    CHECK(!zero_mean.cv_percent());  // undefined at zero mean

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-2.0, 5.0);
    MomentPool a, b, direct;
    for (int i = 0; i < 500; ++i) {
        const double v = u(gen);
        (i < 200 ? a : b).add(v);
        direct.add(v);
    }
    MomentPool merged = a;
    merged.merge(b);
    CHECK(merged.n == direct.n);
    CHECK(*merged.mean() == doctest::Approx(*direct.mean()).epsilon(1e-12));
    CHECK(*merged.variance() == doctest::Approx(*direct.variance()).epsilon(1e-12));
}

TEST_CASE("pearson correlation matches hand values") {
    CHECK(*pearson({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*pearson({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(*pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == 0.8);  // exact in binary arithmetic
    CHECK(!pearson({1, 1, 1}, {1, 2, 3}));
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(pearson({}, {}), ShapeError);
}

TEST_CASE("moran's i equals the brute-force pair scan bit for bit on every masked grid") {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution keep(0.7);
    std::size_t defined = 0;
    for (std::size_t h = 1; h <= 6; ++h) {
        for (std::size_t w = 1; w <= 6; ++w) {
            if (h * w < 2) continue;
            for (int rep = 0; rep < 8; ++rep) {
                std::vector<double> z(h * w);
                for (double& v : z) v = u(gen);
                std::vector<std::uint8_t> mask(h * w, 1);
                if (rep > 0) {  // rep 0 keeps the full grid
                    for (auto& m : mask) m = keep(gen) ? 1 : 0;
                }
                const auto want = brute_moran(z, mask, h, w);
                const auto got = morans_i(z, mask, h, w);
                REQUIRE(got.has_value() == want.has_value());
                if (got) {
                    CHECK(*got == *want);  // exact, same accumulation order
                    ++defined;
                }
            }
        }
    }
    CHECK(defined > 200);  // the sweep actually exercised defined cases

    // Unmasked overload is the all-ones mask.
    std::vector<double> z(30);
    for (double& v : z) v = u(gen);
    CHECK(*morans_i(z, 5, 6) == *morans_i(z, std::vector<std::uint8_t>(30, 1), 5, 6));
    CHECK_THROWS_AS(morans_i(z, std::vector<std::uint8_t>(29, 1), 5, 6), ShapeError);

    // Isolated included cells leave no links.
    std::vector<std::uint8_t> corners(9, 0);
    corners[0] = corners[8] = 1;
    CHECK(!morans_i({1, 0, 0, 0, 0, 0, 0, 0, 2}, corners, 3, 3));
}

TEST_CASE("moran's i hits -1 on a checkerboard and rewards smoothness") {
    std::vector<double> board(16);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) board[y * 4 + x] = ((x + y) % 2 == 0) ? 1.0 : -1.0;
    }
    CHECK(*morans_i(board, 4, 4) == doctest::Approx(-1.0).epsilon(1e-12));

    std::vector<double> ramp(64);
    for (std::size_t i = 0; i < 64; ++i) ramp[i] = static_cast<double>(i % 8);
    const double smooth = *morans_i(ramp, 8, 8);
    std::vector<double> shuffled = ramp;
    std::mt19937_64 gen(3);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(smooth > 0.5);
    CHECK(smooth > *morans_i(shuffled, 8, 8));

    CHECK(!morans_i(std::vector<double>(12, 3.14), 3, 4));
    CHECK_THROWS_AS(morans_i({1, 2, 3}, 2, 2), ShapeError);
}

TEST_CASE("confusion counts follow the clear-positive convention") {
    const std::vector<double> score{0.9, 0.8, 0.4, 0.2};
    const std::vector<double> truth{1, 0, 1, 0};
    const Confusion c = confusion_at(score, truth, 0.5);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(*c.accuracy() == 0.5);
    CHECK(*c.sensitivity() == 0.5);
    CHECK(*c.specificity() == 0.5);
    CHECK(*c.precision() == 0.5);

    // A score equal to the threshold is called cloud.
    const Confusion tie = confusion_at({0.5}, {1}, 0.5);
    CHECK(tie.fn == 1);

    CHECK(!confusion_at({0.9}, {1}, 0.5).specificity());
    CHECK_THROWS_AS(confusion_at(score, truth, 1.5), ConfigError);
    CHECK_THROWS_AS(confusion_at({0.5}, {0.7}, 0.5), DataError);
    CHECK_THROWS_AS(confusion_at({0.5, 0.6}, {1}, 0.5), ShapeError);
}

TEST_CASE("roc sweep reproduces hand-computed curves") {
    SUBCASE("perfect and inverted rankings") {
        CHECK(*roc_curve({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}).auc == 1.0);
        CHECK(*roc_curve({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}).auc == 0.0);
    }
    SUBCASE("ties earn half credit") {
        const RocCurve rc = roc_curve({0.8, 0.5, 0.5, 0.3}, {1, 1, 0, 0});
        CHECK(*rc.auc == 0.875);  // Mann-Whitney: (3 wins + 0.5 tie) / 4 pairs
        REQUIRE(rc.points.size() == 4);
        CHECK(rc.points[0].fpr == 0.0);
        CHECK(rc.points[0].tpr == 0.0);
        CHECK(rc.points[1].tpr == 0.5);
        CHECK(rc.points[2].fpr == 0.5);
        CHECK(rc.points[2].tpr == 1.0);
        CHECK(rc.points.back().fpr == 1.0);
        CHECK(rc.points.back().tpr == 1.0);
    }
    SUBCASE("auc is invariant under monotone score transforms") {
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> u(0.01, 0.99);
        std::vector<double> s(300), t(300), s2(300);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = u(gen);
            t[i] = (u(gen) < s[i]) ? 1.0 : 0.0;
            s2[i] = s[i] * s[i];
        }
        CHECK(*roc_curve(s, t).auc == *roc_curve(s2, t).auc);
    }
    SUBCASE("uninformative scores give auc near one half") {
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> s(4000), t(4000);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = u(gen);
            t[i] = (u(gen) < 0.4) ? 1.0 : 0.0;
        }
        CHECK(*roc_curve(s, t).auc == doctest::Approx(0.5).epsilon(0.1));
        CHECK(std::fabs(*roc_curve(s, t).auc - 0.5) < 0.05);
    }
    SUBCASE("degenerate label sets have no auc") {
        CHECK(!roc_curve({0.1, 0.9}, {1, 1}).auc);
        CHECK(!roc_curve({0.1, 0.9}, {0, 0}).auc);
    }
}

TEST_CASE("the swept threshold maximizes accuracy and is realizable") {
    const std::vector<double> score{0.9, 0.8, 0.2, 0.1};
    const std::vector<double> truth{1, 1, 0, 0};
    const OperatingPoint best = best_accuracy_threshold(score, truth);
    CHECK(*best.cm.accuracy() == 1.0);
    CHECK(best.threshold > 0.2);
    CHECK(best.threshold < 0.8);
    const Confusion redo = confusion_at(score, truth, best.threshold);
    CHECK(redo.tp == best.cm.tp);
    CHECK(redo.tn == best.cm.tn);

    const OperatingPoint flat = best_accuracy_threshold({0.4, 0.4, 0.4}, {1, 0, 1});
    CHECK(*flat.cm.accuracy() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(flat.threshold >= 0.0);
    CHECK(flat.threshold <= 1.0);
}

TEST_CASE("normal quantile inverts the normal cdf to near machine precision") {
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-14));
    for (double p : {1e-8, 1e-4, 0.2, 0.7, 0.9999, 1.0 - 1e-9}) {
        CHECK(std::fabs(normal_cdf(normal_quantile(p)) - p) <= 1e-12);
        CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(-0.3), DomainError);
}

TEST_CASE("coverage matches nominal levels on exact normal quantile grids") {
    const std::size_t n = 20000;
    std::vector<double> truth(n), mean(n, 0.0), var(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        truth[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    const std::vector<double> levels{0.5, 0.8, 0.9, 0.95};
    const auto obs = coverage_curve(truth, mean, var, levels);
    for (std::size_t li = 0; li < levels.size(); ++li) {
        REQUIRE(obs[li]);
        CHECK(std::fabs(*obs[li] - levels[li]) <= 2.0 / static_cast<double>(n));
    }

    SUBCASE("underdispersed predictions fall below the identity") {
        std::vector<double> tight(n, 0.25);  // half the true standard deviation
        const auto under = coverage_curve(truth, mean, tight, levels);
        for (std::size_t li = 0; li < levels.size(); ++li) {
            CHECK(*under[li] < levels[li] - 0.2);
        }
    }
    SUBCASE("degenerate variance covers only exact hits") {
        const auto hit = coverage_curve({2.0, 3.0}, {2.0, 2.0}, {0.0, 0.0}, {0.9});
        CHECK(*hit[0] == 0.5);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(coverage_curve({1.0}, {1.0}, {-0.1}, {0.9}), DomainError);
        CHECK_THROWS_AS(coverage_curve({1.0}, {1.0, 2.0}, {0.1, 0.1}, {0.9}), ShapeError);
        CHECK_THROWS_AS(coverage_curve({1.0}, {1.0}, {0.1}, {1.0}), DomainError);
        const auto none = coverage_curve({}, {}, {}, {0.9});
        CHECK(!none[0]);
    }
}

TEST_CASE("reports render undefined values and round-trip byte-identically") {
    EvalReport r;
    r.put("zeta", 0.1);
    r.put("alpha", std::optional<double>{});
    r.put_count("count", 42);
    r.put_text("note", "hello");
    CHECK(r.text("alpha") == "undefined");
    CHECK(!r.maybe_number("alpha"));
    CHECK(r.number("zeta") == 0.1);
    CHECK_THROWS_AS(r.number("alpha"), DataError);
    CHECK_THROWS_AS(r.text("missing"), DataError);

    const std::string text = r.to_text();
    CHECK(text.find("alpha") < text.find("count"));
    CHECK(text.find("count") < text.find("zeta"));

    const fs::path dir = fs::temp_directory_path() / "emu_metrics_tests";
    fs::create_directories(dir);
    r.save(dir / "report.txt");
    const EvalReport back = EvalReport::load(dir / "report.txt");
    CHECK(back.to_text() == text);
}

TEST_CASE("the evaluation accumulator conditions on agreed-clear pixels") {
    EvalConfig cfg;
    cfg.bands = 1;
    cfg.cloud_threshold = 0.5;
    cfg.strata_min_pixels = 3;

    TilePrediction t;
    t.height = 2;
    t.width = 2;
    t.truth_sr = {{0.10, 0.20, 0.30, 0.40}};
    t.truth_clear = {1, 1, 0, 0};
    t.class_map = {0, 1, 0, 1};
    t.pred_sr = {{0.13, 0.27, 0.99, 0.99}};
    t.pred_var = {{1e-4, 1e-4, 1e-4, 1e-4}};
    t.p_clear = {0.9, 0.1, 0.9, 0.1};

    EvalAccumulator acc(cfg);
    acc.add_tile(t);
    const EvalReport r = acc.report();

    // Only pixel 0 is truth-clear AND called clear.
    CHECK(r.text("pixels.evaluated") == "1");
    CHECK(r.text("pixels.truth_clear") == "2");
    CHECK(r.number("sr.rmse.b0") == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(r.number("sr.bias.b0") == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(r.text("sr.pearson.b0") == "undefined");  // a single point has no spread

    // Confusion over all four pixels: tp=1 (px0), fn=1 (px1), fp=1 (px2), tn=1.
    CHECK(r.text("cloud.tp") == "1");
    CHECK(r.text("cloud.fn") == "1");
    CHECK(r.text("cloud.fp") == "1");
    CHECK(r.text("cloud.tn") == "1");

    CHECK(r.text("strata.c0.count") == "1");
    CHECK(r.text("strata.c0.low_support") == "1");
    CHECK(!r.has("strata.c1.count"));  // class 1 never passes the condition
}

TEST_CASE("pooled tile metrics equal a direct computation over all pixels") {
    EvalConfig cfg;
    cfg.bands = 2;
    cfg.cloud_threshold = 0.4;

    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto make_tile = [&](std::size_t h, std::size_t w) {
        TilePrediction t;
        t.height = h;
        t.width = w;
        const std::size_t n = h * w;
        t.truth_sr.assign(2, std::vector<double>(n));
        t.pred_sr.assign(2, std::vector<double>(n));
        t.pred_var.assign(2, std::vector<double>(n));
        t.truth_clear.resize(n);
        t.p_clear.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t b = 0; b < 2; ++b) {
                t.truth_sr[b][i] = 0.2 + 0.3 * u(gen);
                t.pred_sr[b][i] = t.truth_sr[b][i] + 0.05 * (u(gen) - 0.5);
                t.pred_var[b][i] = 1e-4 + 1e-4 * u(gen);
            }
            t.truth_clear[i] = (u(gen) < 0.7) ? 1.0 : 0.0;
            t.p_clear[i] = u(gen);
        }
        return t;
    };
    const TilePrediction a = make_tile(6, 5);
    const TilePrediction b = make_tile(4, 9);

    EvalAccumulator acc(cfg);
    acc.add_tile(a);
    acc.add_tile(b);
    const EvalReport r = acc.report();

    // Direct recomputation across the concatenated evaluated pixels.
    for (std::size_t band = 0; band < 2; ++band) {
        double ss = 0.0;
        std::size_t n = 0;
        std::vector<double> truth_list, pred_list;
        for (const TilePrediction* t : {&a, &b}) {
            for (std::size_t i = 0; i < t->truth_clear.size(); ++i) {
                if (t->truth_clear[i] != 1.0 || t->p_clear[i] <= 0.4) continue;
                const double e = t->pred_sr[band][i] - t->truth_sr[band][i];
                ss += e * e;
                ++n;
                truth_list.push_back(t->truth_sr[band][i]);
                pred_list.push_back(t->pred_sr[band][i]);
            }
        }
        REQUIRE(n > 0);
        const std::string sb = std::to_string(band);
        CHECK(r.number("sr.rmse.b" + sb) ==
              doctest::Approx(std::sqrt(ss / static_cast<double>(n))).epsilon(1e-12));
        CHECK(r.number("sr.pearson.b" + sb) ==
              doctest::Approx(*pearson(truth_list, pred_list)).epsilon(1e-12));
        auto clear_mask = [](const TilePrediction& t) {
            std::vector<std::uint8_t> m(t.truth_clear.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = t.truth_clear[i] == 1.0 ? 1 : 0;
            return m;
        };
        CHECK(r.number("spatial.moran.pred.b" + sb) ==
              doctest::Approx(0.5 * (*morans_i(a.pred_sr[band], clear_mask(a), 6, 5) +
                                     *morans_i(b.pred_sr[band], clear_mask(b), 4, 9)))
                  .epsilon(1e-12));
    }

    // Deterministic serialization: a second identical accumulation matches.
    EvalAccumulator acc2(cfg);
    acc2.add_tile(a);
    acc2.add_tile(b);
    CHECK(acc2.report().to_text() == r.to_text());
}

TEST_CASE("point predictions leave variance-bound fields undefined") {
    EvalConfig cfg;
    cfg.bands = 1;
    TilePrediction t;
    t.height = 1;
    t.width = 2;
    t.truth_sr = {{0.1, 0.2}};
    t.truth_clear = {1, 1};
    t.pred_sr = {{0.1, 0.2}};
    t.p_clear = {0.9, 0.9};

    EvalAccumulator acc(cfg);
    acc.add_tile(t);
    const EvalReport r = acc.report();
    CHECK(r.text("calibration.q90") == "undefined");
    CHECK(r.text("uncertainty.mean_var.b0") == "undefined");

    EvalAccumulator none(cfg);
    CHECK_THROWS_AS(none.report(), DataError);
}
