#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adsorbkit/dataset.hpp"
#include "adsorbkit/structure.hpp"

namespace adsorbkit {

// Controls slab/adsorbate generation. Catalyst species are drawn from the
// palette minus the elements used by the adsorbate menu.
struct GenSpec {
    std::vector<std::string> palette = {"Cu", "Al", "As", "Pt", "H", "C", "O"};
    std::array<int, 3> slab_cells = {3, 3, 3};  // surface nx, ny, layer count
    double lattice_lo = 3.5;                    // Angstrom
    double lattice_hi = 4.5;
    std::vector<std::vector<std::string>> adsorbate_menu = {
        {"H"}, {"O"}, {"C"}, {"C", "H"}, {"O", "H"}, {"C", "C", "H", "H", "H"}};
    double jitter_sigma = 0.2;  // Angstrom, Cartesian placement noise
    std::uint64_t seed = 0;
    int configs_per_system = 4;  // consecutive indices share a system

    void validate(const RadiiTable& radii) const;
    std::vector<std::string> catalyst_species_pool() const;
};

// Identity of one adsorbate-catalyst system; configurations of the same
// system share all of these fields.
struct SystemSpec {
    std::vector<std::string> adsorbate;
    std::vector<std::string> catalyst_species;  // one or two elements, sorted
    std::array<int, 3> miller;
    double lattice_const;
    std::uint64_t alloy_seed;  // per-site species assignment for alloys
};

// Morse pair parameters derived from a seeded hash of the element pair;
// the equilibrium distance is the covalent contact distance.
class OracleParams {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x0adE0c20ULL;

    explicit OracleParams(const RadiiTable& radii, std::uint64_t seed = kDefaultSeed);

    struct Morse {
        double depth;  // eV, in [0.1, 1.0]
        double width;  // 1/Angstrom, in [1.0, 2.0]
        double r0;     // Angstrom
    };

    Morse pair(const std::string& a, const std::string& b) const;
    double cutoff() const { return 6.0; }
    const RadiiTable& radii() const { return *radii_; }

private:
    const RadiiTable* radii_;
    std::uint64_t seed_;
};

// Sum of Morse wells over (adsorbate, non-adsorbate) pairs within the cutoff,
// using minimum-image distances. Invariant under rigid motion and permutation.
double oracle_energy(const Structure& structure, const OracleParams& params);

SystemSpec sample_system(const GenSpec& spec, std::uint64_t system_index);

// One configuration of the given system (placement site, contact distance and
// jitter vary with config_index).
Sample generate_sample(const GenSpec& spec, const SystemSpec& system, std::uint64_t config_index,
                       const OracleParams& params);

// Dataset entry point: deterministic in (spec.seed, index). Consecutive
// indices cycle through configurations of the same system.
Sample generate_system(const GenSpec& spec, std::uint64_t index, const OracleParams& params);

// Re-embed a structure in a cubic box of at least min_side Angstrom,
// preserving Cartesian geometry (periodicity is intentionally broken; the
// result is a padded cluster).
Structure embed_in_box(const Structure& structure, double min_side);

// Side length used when padding structures for permissive-scale neighbor
// extraction.
constexpr double kPermissiveBoxSide = 26.0;

// A plausible-composition, imprecise-coordinates CIF for the given system
// metadata: low-energy placement, Gaussian coordinate noise, tags stripped
// half the time, trailing junk after a blank line. Composition always
// matches the metadata. Throws UnrealizableMeta when the formula or
// adsorbate cannot be produced from the radii table.
std::string generate_indicative_cif(const GenSpec& spec, const SystemMeta& meta,
                                    std::uint64_t index, const OracleParams& params);

}  // namespace adsorbkit
