#include <doctest.h>

#include <cmath>

#include "adsorbkit/errors.hpp"
#include "adsorbkit/metrics.hpp"
#include "adsorbkit/rng.hpp"

using namespace adsorbkit;

TEST_CASE("mae and r2") {
    std::vector<double> t = {1, 2, 3, 4};
    CHECK(mae_r2(t, t).mae == doctest::Approx(0.0));
    CHECK(mae_r2(t, t).r2 == doctest::Approx(1.0));

    std::vector<double> mean_pred(4, 2.5);
    CHECK(mae_r2(mean_pred, t).r2 == doctest::Approx(0.0));

    SUBCASE("independent two-pass computation") {
        Rng rng(31);
        std::vector<double> p, targets;
        for (int i = 0; i < 100; ++i) {
            p.push_back(rng.uniform(-3, 3));
            targets.push_back(rng.uniform(-3, 3));
        }
        double mean = 0.0;
        for (double x : targets) mean += x;
        mean /= targets.size();
        double abs_sum = 0, res = 0, tot = 0;
        for (int i = 0; i < 100; ++i) {
            abs_sum += std::abs(p[i] - targets[i]);
            res += (p[i] - targets[i]) * (p[i] - targets[i]);
            tot += (targets[i] - mean) * (targets[i] - mean);
        }
        MaeR2 m = mae_r2(p, targets);
        CHECK(m.mae == doctest::Approx(abs_sum / 100).epsilon(1e-10));
        CHECK(m.r2 == doctest::Approx(1 - res / tot).epsilon(1e-10));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(mae_r2({}, {}), EmptyInputError);
        CHECK_THROWS_AS(mae_r2({1.0, 2.0}, {3.0, 3.0}), ConstantTargetsError);
        CHECK_THROWS_AS(mae_r2({1.0}, {1.0, 2.0}), ShapeMismatchError);
    }
}

TEST_CASE("prediction inclusion ratio") {
    std::vector<EnergyRange> r(6, EnergyRange{-1.0, 1.0});
    CHECK(pir({0, 0.5, -0.5, 2, -2, 3}, r) == doctest::Approx(50.0));
    CHECK(pir({0, 0, 0, 0, 0, 0}, r) == doctest::Approx(100.0));
    CHECK(pir({5, 5, 5, 5, 5, 5}, r) == doctest::Approx(0.0));
    // bounds are inclusive
    CHECK(pir({1.0, -1.0}, {EnergyRange{-1, 1}, EnergyRange{-1, 1}}) == doctest::Approx(100.0));

    SUBCASE("invariant under common permutation") {
        Rng rng(32);
        std::vector<double> preds;
        std::vector<EnergyRange> ranges;
        for (int i = 0; i < 40; ++i) {
            preds.push_back(rng.uniform(-2, 2));
            double lo = rng.uniform(-2, 1);
            ranges.push_back({lo, lo + rng.uniform(0, 1)});
        }
        double base = pir(preds, ranges);
        std::vector<std::size_t> order(preds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int trial = 0; trial < 5; ++trial) {
            rng.shuffle(order);
            std::vector<double> p2;
            std::vector<EnergyRange> r2;
            for (auto i : order) {
                p2.push_back(preds[i]);
                r2.push_back(ranges[i]);
            }
            CHECK(pir(p2, r2) == doctest::Approx(base));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(pir({}, {}), EmptyInputError);
        CHECK_THROWS_AS(pir({1.0}, {{0, 1}, {0, 1}}), ShapeMismatchError);
    }
}

TEST_CASE("similarity matrix") {
    SUBCASE("identity on identical orthonormal rows") {
        Matrix e(3, 3);
        for (int i = 0; i < 3; ++i) e(i, i) = 1.0;
        Matrix s = similarity_matrix(e, e);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) CHECK(s(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
        }
    }
    SUBCASE("negating a text row flips that column") {
        Matrix g(2, 2), t(2, 2);
        g(0, 0) = 1;
        g(1, 1) = 1;
        t(0, 0) = 1;
        t(1, 1) = 1;
        t(1, 1) = -1;
        Matrix s = similarity_matrix(g, t);
        CHECK(s(1, 1) == doctest::Approx(-1.0));
        CHECK(s(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("naive double-loop oracle") {
        Rng rng(33);
        Matrix g(8, 16), t(8, 16);
        for (auto& v : g.data()) v = rng.uniform(-2, 2);
        for (auto& v : t.data()) v = rng.uniform(-2, 2);
        Matrix s = similarity_matrix(g, t);
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                double num = 0, ng = 0, nt = 0;
                for (std::size_t k = 0; k < 16; ++k) {
                    num += g(i, k) * t(j, k);
                    ng += g(i, k) * g(i, k);
                    nt += t(j, k) * t(j, k);
                }
                CHECK(s(i, j) == doctest::Approx(num / std::sqrt(ng * nt)).epsilon(1e-12));
                CHECK(s(i, j) >= -1.0 - 1e-12);
                CHECK(s(i, j) <= 1.0 + 1e-12);
            }
        }
        // transpose identity
        Matrix st = similarity_matrix(t, g);
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                CHECK(s(i, j) == doctest::Approx(st(j, i)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("zero-norm row") {
        Matrix g(2, 2), t(2, 2);
        t(0, 0) = 1;
        t(1, 1) = 1;
        CHECK_THROWS_AS(similarity_matrix(g, t), ZeroNormRowError);
    }
}

TEST_CASE("diagonal dominance") {
    Matrix eye(4, 4);
    for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
    CHECK(diagonal_dominance(eye) == doctest::Approx(1.0));
    Matrix ones(4, 4, 1.0);
    CHECK(diagonal_dominance(ones) == doctest::Approx(0.0));

    SUBCASE("re-summation oracle") {
        Rng rng(34);
        Matrix m(6, 6);
        for (auto& v : m.data()) v = rng.uniform(-1, 1);
        double diag = 0, off = 0;
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                (i == j ? diag : off) += m(i, j);
            }
        }
        CHECK(diagonal_dominance(m) == doctest::Approx(diag / 6 - off / 30).epsilon(1e-12));
    }
    Matrix tiny(1, 1, 1.0);
    CHECK_THROWS_AS(diagonal_dominance(tiny), InvalidArgumentError);
}

TEST_CASE("top-1 retrieval") {
    Matrix eye(4, 4);
    for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
    CHECK(retrieval_top1(eye) == doctest::Approx(100.0));

    Matrix reversed(4, 4);
    for (int i = 0; i < 4; ++i) reversed(i, 3 - i) = 1.0;
    CHECK(retrieval_top1(reversed) == doctest::Approx(0.0));

    SUBCASE("brute-force argmax scan") {
        Rng rng(35);
        Matrix m(16, 16);
        for (auto& v : m.data()) v = rng.uniform(-1, 1);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < 16; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < 16; ++j) {
                if (m(i, j) > m(i, best)) best = j;
            }
            if (best == i) ++hits;
        }
        CHECK(retrieval_top1(m) == doctest::Approx(100.0 * hits / 16.0));
    }
}

TEST_CASE("autocorrelation heatmap") {
    Rng rng(36);
    Matrix e(10, 7);
    for (auto& v : e.data()) v = rng.uniform(-2, 2);
    Matrix s = autocorrelation_heatmap(e);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(s(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(s(i, j) == doctest::Approx(s(j, i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("csv export shape") {
    Matrix m(2, 3);
    m(0, 0) = 1.5;
    m(1, 2) = -2.0;
    std::string csv = matrix_to_csv(m);
    CHECK(csv.substr(0, 6) == "0,1,2\n");
    CHECK(csv.find("1.5") != std::string::npos);
    // deterministic output
    CHECK(csv == matrix_to_csv(m));
}
