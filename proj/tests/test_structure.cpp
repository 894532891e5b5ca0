#include <doctest.h>

#include "adsorbkit/errors.hpp"
#include "adsorbkit/structure.hpp"
#include "helpers.hpp"

using namespace adsorbkit;

namespace {

Lattice cubic(double a) {
    return Lattice({Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}});
}

}  // namespace

TEST_CASE("lattice validation") {
    CHECK_THROWS_AS(Lattice({Vec3{1, 0, 0}, Vec3{2, 0, 0}, Vec3{0, 0, 1}}), InvalidArgumentError);
    // left-handed (negative determinant)
    CHECK_THROWS_AS(Lattice({Vec3{0, 1, 0}, Vec3{1, 0, 0}, Vec3{0, 0, 1}}), InvalidArgumentError);
    CHECK(cubic(4.0).volume() == doctest::Approx(64.0));
}

TEST_CASE("site coordinates wrap into [0,1)") {
    Site s("H", {1.25, -0.25, 1.0}, Tag::Adsorbate);
    CHECK(s.frac[0] == doctest::Approx(0.25));
    CHECK(s.frac[1] == doctest::Approx(0.75));
    CHECK(s.frac[2] == doctest::Approx(0.0));
    CHECK(s.frac[2] >= 0.0);
}

TEST_CASE("composition formula") {
    auto structure = [&](std::vector<std::string> els) {
        std::vector<Site> sites;
        for (std::size_t i = 0; i < els.size(); ++i) {
            sites.emplace_back(els[i], Vec3{0.1 * i, 0.0, 0.0}, Tag::Surface);
        }
        return Structure(cubic(20.0), std::move(sites));
    };
    CHECK(composition_formula(structure({"Al", "Al", "As", "As"})) == "Al2As2");
    CHECK(composition_formula(structure({"H"})) == "H");

    // 24-site slab, 12 + 12
    std::vector<std::string> slab;
    for (int i = 0; i < 12; ++i) slab.push_back("Al");
    for (int i = 0; i < 12; ++i) slab.push_back("As");
    CHECK(composition_formula(structure(slab)) == "Al12As12");

    SUBCASE("invariant under site reordering") {
        testkit::Rng rng(11);
        Structure base = testkit::random_structure(rng, 30, 15.0, 20.0, {"Cu", "Al", "O", "H"});
        std::string formula = composition_formula(base);
        for (int k = 0; k < 5; ++k) {
            CHECK(composition_formula(testkit::permute_structure(base, rng)) == formula);
        }
    }
}

TEST_CASE("parse_formula") {
    auto counts = parse_formula("Al2As2");
    CHECK(counts.at("Al") == 2);
    CHECK(counts.at("As") == 2);
    CHECK(parse_formula("H").at("H") == 1);
    CHECK_THROWS_AS(parse_formula("2Al"), InvalidArgumentError);
    CHECK_THROWS_AS(parse_formula(""), InvalidArgumentError);
}

TEST_CASE("min image distance") {
    Lattice l = cubic(4.0);
    CHECK(min_image_distance(l, {0, 0, 0}, {0.9, 0, 0}) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(min_image_distance(l, {0.3, 0.7, 0.2}, {0.3, 0.7, 0.2}) == 0.0);

    SUBCASE("matches 5x5x5 brute force on random triclinic lattices") {
        testkit::Rng rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            Lattice lat = testkit::random_lattice(rng, 6.0, 14.0);
            Vec3 a = {rng.uniform(), rng.uniform(), rng.uniform()};
            Vec3 b = {rng.uniform(), rng.uniform(), rng.uniform()};
            double fast = min_image_distance(lat, a, b);
            double brute = testkit::brute_min_distance(lat, a, b, 2);
            CHECK(fast == doctest::Approx(brute).epsilon(1e-12));
        }
    }

    SUBCASE("symmetry and integer-translation invariance") {
        testkit::Rng rng(13);
        for (int trial = 0; trial < 30; ++trial) {
            Lattice lat = testkit::random_lattice(rng, 5.0, 12.0);
            Vec3 a = {rng.uniform(), rng.uniform(), rng.uniform()};
            Vec3 b = {rng.uniform(), rng.uniform(), rng.uniform()};
            CHECK(min_image_distance(lat, a, b) ==
                  doctest::Approx(min_image_distance(lat, b, a)).epsilon(1e-12));
            Vec3 shifted = {b[0] + 3.0, b[1] - 2.0, b[2] + 1.0};
            CHECK(min_image_distance(lat, a, b) ==
                  doctest::Approx(min_image_distance(lat, a, shifted)).epsilon(1e-12));
        }
    }

    SUBCASE("27 images equal 125 images when vectors exceed twice the cutoff") {
        // every generated lattice in the suite satisfies this precondition for
        // cutoffs up to ~2.8 A (strict) with min_len well above 2x that
        testkit::Rng rng(17);
        for (int trial = 0; trial < 30; ++trial) {
            Lattice lat = testkit::random_lattice(rng, 6.0, 12.0);
            Vec3 a = {rng.uniform(), rng.uniform(), rng.uniform()};
            Vec3 b = {rng.uniform(), rng.uniform(), rng.uniform()};
            CHECK(testkit::brute_min_distance(lat, a, b, 1) ==
                  doctest::Approx(testkit::brute_min_distance(lat, a, b, 2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("covalent radii table") {
    const RadiiTable& table = RadiiTable::bundled();
    // cross-checked against the published single-bond values
    CHECK(covalent_radius(table, "H") == doctest::Approx(0.31));
    CHECK(covalent_radius(table, "Cu") == doctest::Approx(1.32));
    CHECK(covalent_radius(table, "C") == doctest::Approx(0.76));
    CHECK(covalent_radius(table, "O") == doctest::Approx(0.66));
    CHECK(covalent_radius(table, "Al") == doctest::Approx(1.21));
    CHECK(covalent_radius(table, "As") == doctest::Approx(1.19));
    CHECK(covalent_radius(table, "Pt") == doctest::Approx(1.36));
    CHECK_THROWS_AS(covalent_radius(table, "Xx"), UnknownElementError);

    for (const auto& [element, r] : table.entries()) {
        CAPTURE(element);
        CHECK(r > 0.2);
        CHECK(r < 3.0);
    }
}

TEST_CASE("structure requires at least one site") {
    CHECK_THROWS_AS(Structure(cubic(4.0), {}), InvalidArgumentError);
}
