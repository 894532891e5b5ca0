#include <doctest.h>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/errors.hpp"
#include "helpers.hpp"

using namespace adsorbkit;

namespace {

bool structures_close(const Structure& a, const Structure& b, double tol) {
    if (a.size() != b.size()) return false;
    double pa[6], pb[6];
    a.lattice.cell_parameters(pa[0], pa[1], pa[2], pa[3], pa[4], pa[5]);
    b.lattice.cell_parameters(pb[0], pb[1], pb[2], pb[3], pb[4], pb[5]);
    for (int i = 0; i < 6; ++i) {
        if (std::abs(pa[i] - pb[i]) > 1e-6) return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.sites[i].element != b.sites[i].element) return false;
        if (a.sites[i].tag != b.sites[i].tag) return false;
        for (int k = 0; k < 3; ++k) {
            double d = std::abs(a.sites[i].frac[k] - b.sites[i].frac[k]);
            d = std::min(d, 1.0 - d);  // frac wrap
            if (d > tol) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("parse a single-site cubic file") {
    const std::string text =
        "data_test\n"
        "_cell_length_a 4.0\n"
        "_cell_length_b 4.0\n"
        "_cell_length_c 4.0\n"
        "_cell_angle_alpha 90.0\n"
        "_cell_angle_beta 90.0\n"
        "_cell_angle_gamma 90.0\n"
        "loop_\n"
        "_atom_site_type_symbol\n"
        "_atom_site_fract_x\n"
        "_atom_site_fract_y\n"
        "_atom_site_fract_z\n"
        "_atom_site_adsorbkit_tag\n"
        "H 0.5 0.5 0.5 2\n";
    ParsedCif parsed = parse_cif(text);
    CHECK(parsed.data_block_name == "test");
    CHECK_FALSE(parsed.tag_column_missing);
    REQUIRE(parsed.structure.size() == 1);
    CHECK(parsed.structure.sites[0].element == "H");
    CHECK(parsed.structure.sites[0].tag == Tag::Adsorbate);
    CHECK(parsed.structure.sites[0].frac[0] == doctest::Approx(0.5));
    CHECK(parsed.structure.lattice.volume() == doctest::Approx(64.0));
}

TEST_CASE("missing tag column defaults to Surface with a warning flag") {
    const std::string text =
        "data_x\n"
        "_cell_length_a 5.0\n"
        "_cell_length_b 5.0\n"
        "_cell_length_c 5.0\n"
        "_cell_angle_alpha 90.0\n"
        "_cell_angle_beta 90.0\n"
        "_cell_angle_gamma 90.0\n"
        "loop_\n"
        "_atom_site_type_symbol\n"
        "_atom_site_fract_x\n"
        "_atom_site_fract_y\n"
        "_atom_site_fract_z\n"
        "Cu 0.1 0.2 0.3\n";
    ParsedCif parsed = parse_cif(text);
    CHECK(parsed.tag_column_missing);
    CHECK(parsed.structure.sites[0].tag == Tag::Surface);
}

TEST_CASE("garbled loop row names its line") {
    const std::string text =
        "data_x\n"
        "_cell_length_a 5.0\n"
        "_cell_length_b 5.0\n"
        "_cell_length_c 5.0\n"
        "_cell_angle_alpha 90.0\n"
        "_cell_angle_beta 90.0\n"
        "_cell_angle_gamma 90.0\n"
        "loop_\n"
        "_atom_site_type_symbol\n"
        "_atom_site_fract_x\n"
        "_atom_site_fract_y\n"
        "_atom_site_fract_z\n"
        "_atom_site_adsorbkit_tag\n"
        "Cu 0.1 0.2 0.3 1\n"
        "Cu 0.1 oops 0.3 1\n";
    try {
        parse_cif(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 15);
    }
}

TEST_CASE("error taxonomy") {
    CHECK_THROWS_AS(parse_cif("data_x\n"), ParseError);
    const std::string bad_cell =
        "data_x\n"
        "_cell_length_a -2.0\n"
        "_cell_length_b 5.0\n"
        "_cell_length_c 5.0\n"
        "_cell_angle_alpha 90.0\n"
        "_cell_angle_beta 90.0\n"
        "_cell_angle_gamma 90.0\n"
        "loop_\n"
        "_atom_site_type_symbol\n"
        "_atom_site_fract_x\n"
        "_atom_site_fract_y\n"
        "_atom_site_fract_z\n"
        "Cu 0.1 0.2 0.3\n";
    CHECK_THROWS_AS(parse_cif(bad_cell), NonPositiveCellError);
    std::string unknown_element = bad_cell;
    unknown_element.replace(unknown_element.find("-2.0"), 4, "5.0");
    unknown_element.replace(unknown_element.find("Cu 0.1"), 2, "Qq");
    CHECK_THROWS_AS(parse_cif(unknown_element), UnknownElementError);
}

TEST_CASE("write is deterministic and round-trips") {
    testkit::Rng rng(23);
    for (std::size_t n : {std::size_t{1}, std::size_t{10}, std::size_t{60}}) {
        Structure s = testkit::random_structure(rng, n, 8.0, 16.0, {"Cu", "Al", "As", "H"}, true);
        std::string text = write_cif(s, "roundtrip");
        CHECK(text == write_cif(s, "roundtrip"));

        ParsedCif parsed = parse_cif(text);
        CHECK(parsed.data_block_name == "roundtrip");
        CHECK(structures_close(parsed.structure, s, 1e-8));

        // canonical form is idempotent byte for byte
        std::string again = write_cif(parsed.structure, "roundtrip");
        CHECK(again == text);
        CHECK(write_cif(parse_cif(again).structure, "roundtrip") == again);
    }
}

TEST_CASE("truncate_at_double_newline") {
    CHECK(truncate_at_double_newline("abc\n\ndef") == "abc");
    CHECK(truncate_at_double_newline("abc\ndef") == "abc\ndef");
    CHECK(truncate_at_double_newline("\n\nabc") == "");
    CHECK(truncate_at_double_newline("a\r\n\r\nb") == "a");

    SUBCASE("idempotent") {
        for (const std::string s :
             {"abc\n\ndef", "abc\ndef", "", "\n\n", "x\n\ny\n\nz", "line\n"}) {
            CHECK(truncate_at_double_newline(truncate_at_double_newline(s)) ==
                  truncate_at_double_newline(s));
        }
    }
}

TEST_CASE("composition_matches is a filter") {
    Structure s(Lattice({Vec3{8, 0, 0}, Vec3{0, 8, 0}, Vec3{0, 0, 8}}),
                {Site("Al", {0.0, 0.0, 0.1}, Tag::Surface),
                 Site("Al", {0.5, 0.0, 0.1}, Tag::Surface),
                 Site("As", {0.0, 0.5, 0.1}, Tag::Surface),
                 Site("As", {0.5, 0.5, 0.1}, Tag::Surface)});
    std::string cif = write_cif(s, "al2as2");
    CHECK(composition_matches(cif, "Al2As2"));
    CHECK_FALSE(composition_matches(cif, "Al2As3"));
    CHECK_FALSE(composition_matches("not a cif at all", "Al2As2"));

    // generated streams carry junk after a blank line; the filter ignores it
    CHECK(composition_matches(cif + "\ntrailing junk\n", "Al2As2"));
}
