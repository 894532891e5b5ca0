#include <doctest.h>

#include <cmath>
#include <set>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/dataset.hpp"
#include "adsorbkit/errors.hpp"
#include "adsorbkit/synth.hpp"
#include "helpers.hpp"

using namespace adsorbkit;

namespace {

const RadiiTable& radii() { return RadiiTable::bundled(); }

// independent Morse sum using the 5^3 image-grid minimum distance
double brute_oracle(const Structure& s, const OracleParams& params) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.sites[i].tag != Tag::Adsorbate) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (s.sites[j].tag == Tag::Adsorbate) continue;
            double d = testkit::brute_min_distance(s.lattice, s.sites[i].frac, s.sites[j].frac, 2);
            if (d > params.cutoff()) continue;
            auto m = params.pair(s.sites[i].element, s.sites[j].element);
            double x = 1.0 - std::exp(-m.width * (d - m.r0));
            e += m.depth * (x * x - 1.0);
        }
    }
    return e;
}

}  // namespace

TEST_CASE("morse parameters are symmetric, bounded, deterministic") {
    OracleParams params(radii());
    for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"H", "Cu"}, {"Cu", "H"}, {"Al", "As"}, {"Pt", "Pt"}, {"C", "O"}}) {
        auto m1 = params.pair(a, b);
        auto m2 = params.pair(b, a);
        CHECK(m1.depth == m2.depth);
        CHECK(m1.width == m2.width);
        CHECK(m1.r0 == doctest::Approx(radii().radius(a) + radii().radius(b)));
        CHECK(m1.depth >= 0.1);
        CHECK(m1.depth <= 1.0);
        CHECK(m1.width >= 1.0);
        CHECK(m1.width <= 2.0);
    }
}

TEST_CASE("oracle energy") {
    OracleParams params(radii());
    SUBCASE("no catalyst atom within the cutoff gives zero") {
        double a = 30.0;
        Structure s(Lattice({Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}}),
                    {Site("Cu", {0.1, 0.1, 0.1}, Tag::Surface),
                     Site("H", {0.5, 0.5, 0.5}, Tag::Adsorbate)});
        CHECK(oracle_energy(s, params) == 0.0);
    }
    SUBCASE("single pair at the equilibrium distance gives -depth") {
        auto m = params.pair("H", "Cu");
        double a = 30.0;
        Structure s(Lattice({Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}}),
                    {Site("Cu", {0.5, 0.5, 0.5}, Tag::Surface),
                     Site("H", {0.5 + m.r0 / a, 0.5, 0.5}, Tag::Adsorbate)});
        CHECK(oracle_energy(s, params) == doctest::Approx(-m.depth).epsilon(1e-12));
    }
    SUBCASE("matches the brute-force image oracle on random systems") {
        testkit::Rng rng(41);
        for (int trial = 0; trial < 10; ++trial) {
            Structure s = testkit::random_structure(rng, 24, 13.0, 20.0,
                                                    {"Cu", "Al", "H", "O"}, true);
            CHECK(oracle_energy(s, params) == doctest::Approx(brute_oracle(s, params)).epsilon(1e-10));
        }
    }
    SUBCASE("invariant under rigid motion and permutation") {
        testkit::Rng rng(42);
        GenSpec spec;
        spec.seed = 3;
        for (int trial = 0; trial < 20; ++trial) {
            Sample sample = generate_system(spec, trial, params);
            double base = oracle_energy(sample.structure, params);
            Structure rotated =
                testkit::rotate_structure(sample.structure, testkit::random_rotation(rng));
            CHECK(oracle_energy(rotated, params) == doctest::Approx(base).epsilon(1e-9));
            Structure moved = testkit::translate_structure(
                sample.structure, {rng.uniform(), rng.uniform(), rng.uniform()});
            CHECK(oracle_energy(moved, params) == doctest::Approx(base).epsilon(1e-9));
            Structure shuffled = testkit::permute_structure(sample.structure, rng);
            CHECK(oracle_energy(shuffled, params) == doctest::Approx(base).epsilon(1e-9));
        }
    }
    SUBCASE("requires an adsorbate") {
        double a = 20.0;
        Structure s(Lattice({Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}}),
                    {Site("Cu", {0.5, 0.5, 0.5}, Tag::Surface)});
        CHECK_THROWS_AS(oracle_energy(s, params), NoAdsorbateError);
    }
}

TEST_CASE("generator determinism") {
    GenSpec spec;
    spec.seed = 7;
    OracleParams params(radii());
    Sample a = generate_system(spec, 0, params);
    Sample b = generate_system(spec, 0, params);
    CHECK(sample_to_json_line(a) == sample_to_json_line(b));

    Sample c = generate_system(spec, 1, params);
    CHECK(sample_to_json_line(a) != sample_to_json_line(c));
}

TEST_CASE("configurations of one system vary in energy") {
    GenSpec spec;
    spec.seed = 11;
    OracleParams params(radii());
    SystemSpec sys = sample_system(spec, 4);
    std::set<std::string> formulas;
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 30; ++k) {
        Sample s = generate_sample(spec, sys, k, params);
        lo = std::min(lo, s.energy_ev);
        hi = std::max(hi, s.energy_ev);
        formulas.insert(s.meta.catalyst_formula);
    }
    CHECK(formulas.size() == 1);  // same system
    CHECK(hi - lo >= 0.1);
}

TEST_CASE("generated config string is re-derivable from the structure") {
    GenSpec spec;
    spec.seed = 13;
    OracleParams params(radii());
    for (int i = 0; i < 10; ++i) {
        Sample s = generate_system(spec, i, params);
        NeighborList nl = build_neighbor_list(s.structure, radii(), 1.0);
        CHECK(three_part_string(s.structure, s.meta, nl).text == s.config_string.text);
    }
}

TEST_CASE("jsonl round trip") {
    GenSpec spec;
    spec.seed = 17;
    OracleParams params(radii());
    Sample s = generate_system(spec, 5, params);
    std::string line = sample_to_json_line(s);
    Sample back = sample_from_json_line(line);
    CHECK(back.energy_ev == doctest::Approx(s.energy_ev).epsilon(1e-12));
    CHECK(back.config_string.text == s.config_string.text);
    CHECK(back.meta.catalyst_formula == s.meta.catalyst_formula);
    CHECK(back.meta.adsorbate_symbols == s.meta.adsorbate_symbols);
    CHECK(back.structure.size() == s.structure.size());
    CHECK(sample_to_json_line(back) == line);
}

TEST_CASE("indicative cif generation") {
    GenSpec spec;
    spec.seed = 19;
    OracleParams params(radii());

    SystemMeta meta;
    meta.adsorbate_symbols = {"H"};
    meta.catalyst_formula = "Cu27";
    meta.miller = {1, 1, 1};

    SUBCASE("composition always matches the requested system") {
        for (int j = 0; j < 8; ++j) {
            std::string cif = generate_indicative_cif(spec, meta, j, params);
            CHECK(composition_matches(cif, "Cu27H"));
        }
    }
    SUBCASE("the truncated stream parses") {
        std::string raw = generate_indicative_cif(spec, meta, 0, params);
        CHECK(raw.find("\n\n") != std::string::npos);
        std::string cif = truncate_at_double_newline(raw);
        ParsedCif parsed = parse_cif(cif);
        CHECK(parsed.structure.size() == 28);
    }
    SUBCASE("deterministic per (meta, index)") {
        CHECK(generate_indicative_cif(spec, meta, 3, params) ==
              generate_indicative_cif(spec, meta, 3, params));
        CHECK(generate_indicative_cif(spec, meta, 3, params) !=
              generate_indicative_cif(spec, meta, 4, params));
    }
    SUBCASE("strict extraction often comes up empty where permissive does not") {
        int strict_empty = 0, permissive_nonempty = 0, total = 0;
        for (int j = 0; j < 40; ++j) {
            std::string cif = truncate_at_double_newline(
                generate_indicative_cif(spec, meta, 200 + j, params));
            ParsedCif parsed = parse_cif(cif);
            ConfigString perm = permissive_config_string(parsed.structure, meta, radii());
            if (perm.segments[2].find("primary none") == std::string::npos) ++permissive_nonempty;

            // strict pass needs tags; skip tag-stripped files
            if (parsed.tag_column_missing) continue;
            NeighborList nl = build_neighbor_list(parsed.structure, radii(), 1.0);
            InteractingAtoms sets = interacting_atoms(parsed.structure, nl);
            if (sets.primary.empty()) ++strict_empty;
            ++total;
        }
        CHECK(permissive_nonempty == 40);
        CHECK(total > 5);
        CHECK(strict_empty >= total / 4);  // noisy coordinates break strict contacts often
    }
    SUBCASE("unrealizable metadata") {
        SystemMeta bad = meta;
        bad.catalyst_formula = "Zz9";
        CHECK_THROWS_AS(generate_indicative_cif(spec, bad, 0, params), UnrealizableMetaError);
    }
}

TEST_CASE("dataset energies span a learnable range") {
    GenSpec spec;
    spec.seed = 23;
    OracleParams params(radii());
    double lo = 1e300, hi = -1e300, sum = 0.0, sq = 0.0;
    const int n = 512;
    for (int i = 0; i < n; ++i) {
        double e = generate_system(spec, i, params).energy_ev;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        sum += e;
        sq += e * e;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::isfinite(mean));
    CHECK(std::isfinite(var));
    CHECK(var > 0.0);
    CHECK(hi - lo >= 1.0);
}

TEST_CASE("padded embedding preserves geometry") {
    GenSpec spec;
    spec.seed = 29;
    OracleParams params(radii());
    Sample s = generate_system(spec, 2, params);
    Structure padded = embed_in_box(s.structure, kPermissiveBoxSide);
    CHECK(padded.lattice.shortest_vector() >= kPermissiveBoxSide);
    // pairwise distances inside the cluster are unchanged
    testkit::Rng rng(1);
    for (int probe = 0; probe < 20; ++probe) {
        std::size_t i = rng.uniform_index(s.structure.size());
        std::size_t j = rng.uniform_index(s.structure.size());
        Vec3 ci = s.structure.lattice.to_cartesian(s.structure.sites[i].frac);
        Vec3 cj = s.structure.lattice.to_cartesian(s.structure.sites[j].frac);
        Vec3 pi = padded.lattice.to_cartesian(padded.sites[i].frac);
        Vec3 pj = padded.lattice.to_cartesian(padded.sites[j].frac);
        CHECK(norm(ci - cj) == doctest::Approx(norm(pi - pj)).epsilon(1e-9));
    }
}
