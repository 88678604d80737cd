#include "doctest.h"
#include "oracles.hpp"

#include "corallite/evaluation.hpp"
#include "corallite/volume_io.hpp"

#include <cmath>

using namespace corallite;

namespace {

BinaryImage rect(int h, int w, int r0, int c0, int rh, int cw)
{
    BinaryImage m(h, w);
    for (int r = r0; r < r0 + rh; ++r)
        for (int c = c0; c < c0 + cw; ++c)
            m(r, c) = 1;
    return m;
}

}  // namespace

TEST_CASE("component_penalty values")
{
    CHECK(component_penalty(4, 4) == 0.0);
    CHECK(component_penalty(6, 4) == doctest::Approx(0.3956124250860895).epsilon(1e-12));
    CHECK(component_penalty(5, 0) == 1.0);
    CHECK(component_penalty(4, 6) == doctest::Approx(0.3934693402873666).epsilon(1e-12));
    CHECK_THROWS(component_penalty(0, 3));
    CHECK_THROWS(component_penalty(-1, 3));
}

TEST_CASE("component_penalty stays in [0,1]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    for (int i = 0; i < 2000; ++i) {
        const double ap = 1.0 + u(rng), al = u(rng);
        const double p = component_penalty(ap, al);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("error_map")
{
    SUBCASE("pred equals truth")
    {
        const auto m = label_components(rect(10, 10, 2, 2, 3, 3));
        const auto em = error_map(m, m);
        for (double v : em.values.pixels())
            CHECK(v == 0.0);
    }
    SUBCASE("empty truth gives penalty 1 on the region")
    {
        const auto pred = rect(10, 10, 1, 1, 2, 2);
        const auto em = error_map(label_components(pred), label_components(BinaryImage(10, 10)));
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c)
                CHECK(em.values(r, c) == (pred(r, c) ? 1.0 : 0.0));
    }
    SUBCASE("area 6 over area 4")
    {
        const auto truth = rect(8, 8, 0, 0, 2, 2);
        const auto pred = rect(8, 8, 0, 0, 2, 3);
        const auto em = error_map(label_components(pred), label_components(truth));
        int excess = 0;
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) {
                if (pred(r, c) && !truth(r, c)) {
                    ++excess;
                    CHECK(em.values(r, c) == doctest::Approx(0.3956124250860895).epsilon(1e-12));
                } else {
                    CHECK(em.values(r, c) == 0.0);
                }
            }
        CHECK(excess == 2);
    }
    SUBCASE("values within [0,1] on random masks")
    {
        std::mt19937_64 rng(9);
        for (int i = 0; i < 50; ++i) {
            const auto p = oracle::random_mask(rng, 20, 20, 0.4);
            const auto t = oracle::random_mask(rng, 20, 20, 0.4);
            const auto em = error_map(label_components(p), label_components(t));
            for (int r = 0; r < 20; ++r)
                for (int c = 0; c < 20; ++c) {
                    CHECK(em.values(r, c) >= 0.0);
                    CHECK(em.values(r, c) <= 1.0);
                    if (!p(r, c))
                        CHECK(em.values(r, c) == 0.0);
                }
        }
    }
}

TEST_CASE("topo_loss closed forms")
{
    RealImage zero(10, 10);
    CHECK(topo_loss(zero) == 0.0);

    RealImage five(10, 10);
    for (int i = 0; i < 5; ++i)
        five(i, 2 * i) = 1.0;
    CHECK(topo_loss(five) == doctest::Approx(5 * (oracle::sigmoid(1) - 0.5) / 200).epsilon(1e-12));
    CHECK(std::abs(topo_loss(five) - 0.0057765) < 1e-7);

    RealImage ones(7, 9);
    for (auto& v : ones.pixels())
        v = 1.0;
    CHECK(topo_loss(ones) == doctest::Approx(0.11552928931500245).epsilon(1e-12));
    CHECK(topo_loss_ceiling() == doctest::Approx(0.11552928931500245).epsilon(1e-12));
    CHECK(topo_score(topo_loss(ones)) == doctest::Approx(0.88447071068499755).epsilon(1e-12));
}

TEST_CASE("topo_loss on a large uniform map does not drift")
{
    RealImage big(2000, 2000);
    for (auto& v : big.pixels())
        v = 1.0;
    CHECK(std::abs(topo_loss(big) - topo_loss_ceiling()) < 1e-12);
}

TEST_CASE("dice identities")
{
    const auto a = rect(6, 6, 0, 0, 2, 2);
    const auto b = rect(6, 6, 3, 3, 2, 2);
    CHECK(dice(a, a) == 1.0);
    CHECK(dice(a, b) == 0.0);
    CHECK(dice(BinaryImage(6, 6), BinaryImage(6, 6)) == 1.0);
    const auto c = rect(6, 6, 0, 1, 2, 2);  // shares 2 of 4 pixels with a
    CHECK(dice(a, c) == 0.5);
    CHECK_THROWS(dice(a, BinaryImage(5, 6)));
}

TEST_CASE("bce values")
{
    RealImage half(4, 4);
    for (auto& v : half.pixels())
        v = 0.5;
    CHECK(bce(half, rect(4, 4, 0, 0, 2, 2)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    RealImage p(1, 1);
    p(0, 0) = 0.9;
    BinaryImage t(1, 1);
    t(0, 0) = 1;
    CHECK(bce(p, t) == doctest::Approx(0.10536051565782628).epsilon(1e-9));

    const auto truth = rect(5, 5, 1, 1, 3, 3);
    const auto perfect = to_probability(truth);
    CHECK(bce(perfect, truth) < 1e-6);

    RealImage sure(1, 1);
    sure(0, 0) = 1.0;
    CHECK(bce(sure, t) == doctest::Approx(-std::log(1.0 - kBceEpsilon)));
    BinaryImage f(1, 1);
    CHECK(bce(sure, f) == doctest::Approx(-std::log(kBceEpsilon)));
}

TEST_CASE("combined_loss composition")
{
    const auto truth = rect(10, 10, 2, 2, 4, 4);
    const auto perfect = combined_loss(to_probability(truth), truth, 0.1);
    CHECK(perfect.total < 1e-6);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RealImage prob(10, 10);
    for (auto& v : prob.pixels())
        v = u(rng);
    const auto parts = combined_loss(prob, truth, 0.0);
    CHECK(parts.total == 0.5 * (parts.bce + parts.dice));

    // five isolated false pixels against an empty truth
    RealImage five(10, 10);
    for (int i = 0; i < 5; ++i)
        five(2 * i, i) = 1.0;
    const BinaryImage empty(10, 10);
    const auto t0 = combined_loss(five, empty, 0.0);
    const auto t1 = combined_loss(five, empty, 0.1);
    CHECK(t1.topo == doctest::Approx(0.005776464465750122).epsilon(1e-12));
    CHECK(t1.total - t0.total == doctest::Approx(0.1 * 0.005776464465750122).epsilon(1e-9));
}

TEST_CASE("count_error")
{
    CHECK(count_error(10, 10) == 0.0);
    CHECK(count_error(12, 10) == 0.2);
    CHECK(count_error(0, 5) == 1.0);
    CHECK_THROWS_AS(count_error(3, 0), std::domain_error);
}

TEST_CASE("render_error_map quantises to 8 bits")
{
    const auto dir = std::filesystem::temp_directory_path() / "corallite_test_em";
    std::filesystem::create_directories(dir);
    ErrorMap em{RealImage(2, 3), "test"};
    em.values(0, 0) = 1.0;
    em.values(0, 1) = 0.3956124250860895;
    render_error_map(em, dir / "em.png");
    int depth = 0;
    const auto img = load_gray(dir / "em.png", &depth);
    CHECK(depth == 8);
    CHECK(img(0, 0) == 255);
    CHECK(img(0, 1) == 101);
    CHECK(img(1, 2) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate on a slice")
{
    const auto truth = rect(300, 300, 10, 10, 20, 20);
    EvalOptions opts;
    const auto same = evaluate(truth, truth, opts);
    CHECK(same.dsc_full == 1.0);
    CHECK(same.mdsc_tiles == 1.0);
    CHECK(same.topo_score == 1.0);
    CHECK(same.tiles == 4);
    REQUIRE(same.count_error.has_value());
    CHECK(*same.count_error == 0.0);

    const auto none = evaluate(truth, BinaryImage(300, 300), opts);
    CHECK_FALSE(none.count_error.has_value());
    CHECK(none.topo_score >= 1.0 - topo_loss_ceiling());

    // tile larger than the slice is clamped to its shorter side
    const auto small = evaluate(rect(50, 60, 0, 0, 5, 5), rect(50, 60, 0, 0, 5, 5), opts);
    CHECK(small.tiles == 2);
    CHECK(small.mdsc_tiles == 1.0);
}

TEST_CASE("compensated_sum")
{
    std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(compensated_sum(v) == 2.0);
}
