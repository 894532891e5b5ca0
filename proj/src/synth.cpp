#include "adsorbkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/errors.hpp"
#include "adsorbkit/neighbors.hpp"
#include "adsorbkit/rng.hpp"

namespace adsorbkit {

namespace {

constexpr double kBaseHeight = 2.0;  // bottom layer z, Angstrom
constexpr double kVacuum = 16.0;     // headroom above the top layer

struct SlabGeometry {
    double spacing;     // in-plane site spacing
    double interlayer;  // layer separation
    double cell_c;
    int nx, ny, nz;
    std::array<int, 3> miller;
};

// Facet-dependent stacking: each facet shifts successive layers by a
// different lateral pattern, so facets are distinguishable surfaces.
std::array<double, 2> layer_offset(const std::array<int, 3>& miller, int layer) {
    if (miller == std::array<int, 3>{1, 1, 0}) return {0.0, 0.5 * (layer % 2)};
    if (miller == std::array<int, 3>{1, 1, 1}) {
        double t = (layer % 3) / 3.0;
        return {t, t};
    }
    if (miller == std::array<int, 3>{2, 1, 1}) return {0.5 * (layer % 2), 0.0};
    return {0.5 * (layer % 2), 0.5 * (layer % 2)};
}

SlabGeometry slab_geometry(const std::array<int, 3>& cells, double lattice_const,
                           const std::array<int, 3>& miller) {
    SlabGeometry g;
    g.nx = cells[0];
    g.ny = cells[1];
    g.nz = cells[2];
    g.spacing = lattice_const / std::sqrt(2.0);
    double hkl = std::sqrt(static_cast<double>(miller[0] * miller[0] + miller[1] * miller[1] +
                                               miller[2] * miller[2]));
    g.interlayer = std::max(1.2, lattice_const / (2.0 * hkl));
    g.cell_c = kBaseHeight + (g.nz - 1) * g.interlayer + kVacuum;
    g.miller = miller;
    return g;
}

Lattice slab_lattice(const SlabGeometry& g) {
    return Lattice({Vec3{g.nx * g.spacing, 0.0, 0.0}, Vec3{0.0, g.ny * g.spacing, 0.0},
                    Vec3{0.0, 0.0, g.cell_c}});
}

// Slab sites in layer-major order; alternate layers are laterally offset by
// half a site spacing. Throws when the element list does not fit the slab.
std::vector<Site> slab_sites(const SlabGeometry& g,
                             const std::vector<std::string>& site_elements) {
    if (static_cast<int>(site_elements.size()) > g.nx * g.ny * g.nz) {
        throw UnrealizableMetaError("composition larger than slab capacity");
    }
    std::vector<Site> sites;
    sites.reserve(site_elements.size());
    std::size_t index = 0;
    for (int layer = 0; layer < g.nz && index < site_elements.size(); ++layer) {
        std::array<double, 2> off = layer_offset(g.miller, layer);
        double z = kBaseHeight + layer * g.interlayer;
        Tag tag = (layer == g.nz - 1) ? Tag::Surface : Tag::Subsurface;
        for (int ix = 0; ix < g.nx && index < site_elements.size(); ++ix) {
            for (int iy = 0; iy < g.ny && index < site_elements.size(); ++iy) {
                Vec3 frac = {(ix + off[0]) / g.nx, (iy + off[1]) / g.ny, z / g.cell_c};
                sites.emplace_back(site_elements[index], frac, tag);
                ++index;
            }
        }
    }
    return sites;
}

// Cartesian positions of the adsorbate group; index 0 is the binding atom.
// The second atom stacks above the anchor, remaining atoms fan out around it.
std::vector<Vec3> adsorbate_positions(const std::vector<std::string>& symbols,
                                      const Vec3& anchor, const RadiiTable& radii, Rng& rng,
                                      double jitter_sigma) {
    std::vector<Vec3> pos(symbols.size());
    pos[0] = anchor;
    if (symbols.size() > 1) {
        double bond01 = radii.radius(symbols[0]) + radii.radius(symbols[1]);
        pos[1] = anchor + Vec3{0.0, 0.0, 0.98 * bond01};
        for (std::size_t k = 2; k < symbols.size(); ++k) {
            double rho = 0.95 * (radii.radius(symbols[1]) + radii.radius(symbols[k]));
            double angle = 6.283185307179586 * static_cast<double>(k - 2) /
                           static_cast<double>(std::max<std::size_t>(1, symbols.size() - 2));
            pos[k] = pos[1] +
                     Vec3{0.85 * rho * std::cos(angle), 0.85 * rho * std::sin(angle), 0.45};
        }
        for (std::size_t k = 1; k < symbols.size(); ++k) {
            pos[k] = pos[k] + Vec3{0.5 * jitter_sigma * rng.normal(),
                                   0.5 * jitter_sigma * rng.normal(),
                                   0.5 * jitter_sigma * rng.normal()};
        }
    }
    return pos;
}

Vec3 to_frac_orthorhombic(const Lattice& lattice, const Vec3& cart) {
    return {cart[0] / lattice.row(0)[0], cart[1] / lattice.row(1)[1],
            cart[2] / lattice.row(2)[2]};
}

// Builds the full structure for one configuration of the system.
Structure realize_configuration(const GenSpec& spec, const SystemSpec& system, Rng& rng,
                                const RadiiTable& radii) {
    SlabGeometry g = slab_geometry(spec.slab_cells, system.lattice_const, system.miller);
    const int slab_count = g.nx * g.ny * g.nz;

    // ordered (checkerboard) alloys: the composition is a fixed function of
    // the species pair and slab dims, never of a per-site coin flip
    std::vector<std::string> site_elements(slab_count);
    {
        int i = 0;
        for (int layer = 0; layer < g.nz; ++layer) {
            for (int ix = 0; ix < g.nx; ++ix) {
                for (int iy = 0; iy < g.ny; ++iy) {
                    std::size_t which = (system.catalyst_species.size() == 1)
                                            ? 0
                                            : static_cast<std::size_t>((layer + ix + iy) % 2);
                    site_elements[i++] = system.catalyst_species[which];
                }
            }
        }
    }

    Lattice lattice = slab_lattice(g);
    std::vector<Site> sites = slab_sites(g, site_elements);

    // adsorption site: atop, bridge, or fourfold hollow on the top layer
    const int site_type = static_cast<int>(rng.uniform_index(3));
    const int ix = static_cast<int>(rng.uniform_index(g.nx));
    const int iy = static_cast<int>(rng.uniform_index(g.ny));
    const std::array<double, 2> top_off = layer_offset(g.miller, g.nz - 1);
    const double z_top = kBaseHeight + (g.nz - 1) * g.interlayer;

    auto top_element = [&](int jx, int jy) -> const std::string& {
        int wx = ((jx % g.nx) + g.nx) % g.nx;
        int wy = ((jy % g.ny) + g.ny) % g.ny;
        return site_elements[(g.nz - 1) * g.nx * g.ny + wx * g.ny + wy];
    };

    double r_anchor = radii.radius(system.adsorbate[0]);
    Vec3 lateral = {(ix + top_off[0]) * g.spacing, (iy + top_off[1]) * g.spacing, 0.0};
    double lateral_offset = 0.0;
    double surf_radius = radii.radius(top_element(ix, iy));
    if (site_type == 1) {  // bridge
        lateral[0] += 0.5 * g.spacing;
        lateral_offset = 0.5 * g.spacing;
        surf_radius = 0.5 * (surf_radius + radii.radius(top_element(ix + 1, iy)));
    } else if (site_type == 2) {  // hollow
        lateral[0] += 0.5 * g.spacing;
        lateral[1] += 0.5 * g.spacing;
        lateral_offset = g.spacing * std::sqrt(0.5);
        surf_radius = 0.25 * (surf_radius + radii.radius(top_element(ix + 1, iy)) +
                              radii.radius(top_element(ix, iy + 1)) +
                              radii.radius(top_element(ix + 1, iy + 1)));
    }

    double contact = r_anchor + surf_radius;
    double target = contact * rng.uniform(0.88, 1.06);
    double height;
    if (target > lateral_offset) {
        height = std::sqrt(target * target - lateral_offset * lateral_offset);
    } else {
        height = 0.55 * contact;  // site too wide for a bond; float above it
    }
    height = std::max(height, 0.35 * contact);

    Vec3 anchor = {lateral[0] + spec.jitter_sigma * rng.normal(),
                   lateral[1] + spec.jitter_sigma * rng.normal(),
                   z_top + height + spec.jitter_sigma * rng.normal()};

    std::vector<Vec3> group =
        adsorbate_positions(system.adsorbate, anchor, radii, rng, spec.jitter_sigma);
    for (std::size_t k = 0; k < group.size(); ++k) {
        sites.emplace_back(system.adsorbate[k], to_frac_orthorhombic(lattice, group[k]),
                           Tag::Adsorbate);
    }
    return Structure(lattice, std::move(sites));
}

}  // namespace

void GenSpec::validate(const RadiiTable& radii) const {
    if (palette.empty()) throw InvalidArgumentError("gen: palette is empty");
    for (const auto& e : palette) {
        if (!radii.contains(e)) throw UnknownElementError(e);
    }
    if (slab_cells[0] < 1 || slab_cells[1] < 1 || slab_cells[2] < 1) {
        throw InvalidArgumentError("gen: slab dims must be >= 1");
    }
    if (!(lattice_lo > 0.0 && lattice_hi >= lattice_lo)) {
        throw InvalidArgumentError("gen: bad lattice constant range");
    }
    if (adsorbate_menu.empty()) throw InvalidArgumentError("gen: adsorbate menu is empty");
    std::set<std::string> pal(palette.begin(), palette.end());
    for (const auto& group : adsorbate_menu) {
        if (group.empty()) throw InvalidArgumentError("gen: empty adsorbate group");
        for (const auto& e : group) {
            if (pal.count(e) == 0) {
                throw InvalidArgumentError("gen: adsorbate element " + e + " not in palette");
            }
        }
    }
    if (catalyst_species_pool().empty()) {
        throw InvalidArgumentError("gen: palette has no catalyst species");
    }
    if (configs_per_system < 1) {
        throw InvalidArgumentError("gen: configs_per_system must be >= 1");
    }
}

std::vector<std::string> GenSpec::catalyst_species_pool() const {
    std::set<std::string> adsorbate_elements;
    for (const auto& group : adsorbate_menu) {
        adsorbate_elements.insert(group.begin(), group.end());
    }
    std::vector<std::string> pool;
    for (const auto& e : palette) {
        if (adsorbate_elements.count(e) == 0) pool.push_back(e);
    }
    std::sort(pool.begin(), pool.end());
    return pool;
}

OracleParams::OracleParams(const RadiiTable& radii, std::uint64_t seed)
    : radii_(&radii), seed_(seed) {}

OracleParams::Morse OracleParams::pair(const std::string& a, const std::string& b) const {
    const std::string& lo = std::min(a, b);
    const std::string& hi = std::max(a, b);
    std::uint64_t h = hash_combine(seed_, fnv1a64(lo + "|" + hi));
    double u1 = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
    Morse m;
    m.depth = 0.1 + 0.9 * u1;
    m.width = 1.0 + u2;
    m.r0 = radii_->radius(a) + radii_->radius(b);
    return m;
}

double oracle_energy(const Structure& structure, const OracleParams& params) {
    if (!structure.has_adsorbate()) throw NoAdsorbateError();
    double energy = 0.0;
    for (std::size_t i = 0; i < structure.size(); ++i) {
        if (structure.sites[i].tag != Tag::Adsorbate) continue;
        for (std::size_t j = 0; j < structure.size(); ++j) {
            if (structure.sites[j].tag == Tag::Adsorbate) continue;
            double d = min_image_distance(structure.lattice, structure.sites[i].frac,
                                          structure.sites[j].frac);
            if (d > params.cutoff()) continue;
            OracleParams::Morse m =
                params.pair(structure.sites[i].element, structure.sites[j].element);
            double x = 1.0 - std::exp(-m.width * (d - m.r0));
            energy += m.depth * (x * x - 1.0);
        }
    }
    return energy;
}

SystemSpec sample_system(const GenSpec& spec, std::uint64_t system_index) {
    Rng rng(hash_combine(hash_combine(spec.seed, 0x5157ULL), system_index));
    std::vector<std::string> pool = spec.catalyst_species_pool();

    SystemSpec sys;
    sys.adsorbate = spec.adsorbate_menu[rng.uniform_index(spec.adsorbate_menu.size())];
    if (pool.size() >= 2 && rng.uniform() < 0.5) {
        std::size_t a = rng.uniform_index(pool.size());
        std::size_t b = rng.uniform_index(pool.size() - 1);
        if (b >= a) ++b;
        sys.catalyst_species = {pool[std::min(a, b)], pool[std::max(a, b)]};
    } else {
        sys.catalyst_species = {pool[rng.uniform_index(pool.size())]};
    }
    static const std::array<std::array<int, 3>, 4> kMillerMenu = {
        {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {2, 1, 1}}};
    sys.miller = kMillerMenu[rng.uniform_index(kMillerMenu.size())];
    sys.lattice_const = rng.uniform(spec.lattice_lo, spec.lattice_hi);
    sys.alloy_seed = rng.next_u64();
    return sys;
}

Sample generate_sample(const GenSpec& spec, const SystemSpec& system, std::uint64_t config_index,
                       const OracleParams& params) {
    const RadiiTable& radii = params.radii();
    spec.validate(radii);

    Rng rng(hash_combine(hash_combine(spec.seed, 0xc0f19ULL),
                         hash_combine(system.alloy_seed, config_index)));
    Structure structure = realize_configuration(spec, system, rng, radii);

    Sample sample{structure, SystemMeta{}, ConfigString{}, 0.0};
    sample.meta.adsorbate_symbols = system.adsorbate;
    sample.meta.miller = system.miller;
    {
        std::map<std::string, int> counts;
        for (const auto& site : structure.sites) {
            if (site.tag != Tag::Adsorbate) counts[site.element] += 1;
        }
        sample.meta.catalyst_formula = composition_formula(counts);
    }
    NeighborList nl = build_neighbor_list(structure, radii, 1.0);
    sample.config_string = three_part_string(structure, sample.meta, nl);
    sample.energy_ev = oracle_energy(structure, params);
    return sample;
}

Sample generate_system(const GenSpec& spec, std::uint64_t index, const OracleParams& params) {
    std::uint64_t system_index = index / spec.configs_per_system;
    std::uint64_t config_index = index % spec.configs_per_system;
    return generate_sample(spec, sample_system(spec, system_index), config_index, params);
}

Structure embed_in_box(const Structure& structure, double min_side) {
    double side = min_side;
    std::vector<Vec3> carts(structure.size());
    for (std::size_t i = 0; i < structure.size(); ++i) {
        carts[i] = structure.lattice.to_cartesian(structure.sites[i].frac);
        side = std::max({side, std::abs(carts[i][0]) * 2.0 + 4.0,
                         std::abs(carts[i][1]) * 2.0 + 4.0, std::abs(carts[i][2]) * 2.0 + 4.0});
    }
    Lattice box({Vec3{side, 0.0, 0.0}, Vec3{0.0, side, 0.0}, Vec3{0.0, 0.0, side}});
    std::vector<Site> sites;
    sites.reserve(structure.size());
    for (std::size_t i = 0; i < structure.size(); ++i) {
        Vec3 frac = {carts[i][0] / side + 0.25, carts[i][1] / side + 0.25,
                     carts[i][2] / side + 0.05};
        sites.emplace_back(structure.sites[i].element, frac, structure.sites[i].tag);
    }
    return Structure(box, std::move(sites));
}

std::string generate_indicative_cif(const GenSpec& spec, const SystemMeta& meta,
                                    std::uint64_t index, const OracleParams& params) {
    const RadiiTable& radii = params.radii();
    spec.validate(radii);
    meta.validate();

    std::map<std::string, int> catalyst_counts;
    try {
        catalyst_counts = parse_formula(meta.catalyst_formula);
    } catch (const InvalidArgumentError&) {
        throw UnrealizableMetaError("unparseable catalyst formula " + meta.catalyst_formula);
    }
    int total = 0;
    for (const auto& [element, n] : catalyst_counts) {
        if (!radii.contains(element)) throw UnrealizableMetaError("unknown element " + element);
        total += n;
    }
    for (const auto& e : meta.adsorbate_symbols) {
        if (!radii.contains(e)) throw UnrealizableMetaError("unknown adsorbate element " + e);
    }

    Rng rng(hash_combine(hash_combine(spec.seed, 0x1d1caULL),
                         hash_combine(fnv1a64(meta.catalyst_formula +
                                              render_adsorbate_symbols(meta.adsorbate_symbols)),
                                      index)));

    std::array<int, 3> cells = spec.slab_cells;
    while (cells[0] * cells[1] * cells[2] < total) cells[2] += 1;
    double lattice_const = 0.5 * (spec.lattice_lo + spec.lattice_hi);
    SlabGeometry g = slab_geometry(cells, lattice_const, meta.miller);

    std::vector<std::string> site_elements;
    site_elements.reserve(total);
    for (const auto& [element, n] : catalyst_counts) {
        for (int k = 0; k < n; ++k) site_elements.push_back(element);
    }
    rng.shuffle(site_elements);

    // pick the lowest-energy of several candidate placements, mimicking a
    // generator trained on relaxed configurations
    std::optional<Structure> best;
    double best_energy = 0.0;
    for (int c = 0; c < 6; ++c) {
        Rng crng(rng.next_u64());
        Lattice lattice = slab_lattice(g);
        std::vector<Site> sites = slab_sites(g, site_elements);
        double z_top = 0.0;
        std::string top_element = site_elements.back();
        for (const auto& site : sites) {
            double z = lattice.to_cartesian(site.frac)[2];
            if (z > z_top) {
                z_top = z;
                top_element = site.element;
            }
        }
        double contact = radii.radius(meta.adsorbate_symbols[0]) + radii.radius(top_element);
        Vec3 anchor = {(crng.uniform_index(g.nx) + 0.5 * crng.uniform()) * g.spacing,
                       (crng.uniform_index(g.ny) + 0.5 * crng.uniform()) * g.spacing,
                       z_top + contact * crng.uniform(0.85, 1.1)};
        std::vector<Vec3> group =
            adsorbate_positions(meta.adsorbate_symbols, anchor, radii, crng, spec.jitter_sigma);
        for (std::size_t k = 0; k < group.size(); ++k) {
            sites.emplace_back(meta.adsorbate_symbols[k], to_frac_orthorhombic(lattice, group[k]),
                               Tag::Adsorbate);
        }
        Structure candidate(lattice, std::move(sites));
        double e = oracle_energy(candidate, params);
        if (!best || e < best_energy) {
            best = candidate;
            best_energy = e;
        }
    }

    // imprecise coordinates: pad into a box and blur everything
    Structure padded = embed_in_box(*best, kPermissiveBoxSide);
    bool strip_tags = rng.uniform() < 0.5;
    std::vector<Site> noisy;
    noisy.reserve(padded.size());
    for (const auto& site : padded.sites) {
        Vec3 cart = padded.lattice.to_cartesian(site.frac);
        cart = cart + Vec3{0.3 * rng.normal(), 0.3 * rng.normal(), 0.3 * rng.normal()};
        noisy.emplace_back(site.element, to_frac_orthorhombic(padded.lattice, cart), site.tag);
    }
    Structure blurred(padded.lattice, std::move(noisy));

    std::string cif = write_cif(blurred, "indicative_" + std::to_string(index));
    if (strip_tags) {
        std::string untagged;
        untagged.reserve(cif.size());
        std::istringstream in(cif);
        std::string line;
        bool saw_tag_header = false;
        while (std::getline(in, line)) {
            if (line == "_atom_site_adsorbkit_tag") {
                saw_tag_header = true;
                continue;
            }
            if (saw_tag_header && !line.empty() && line[0] != '_') {
                line = line.substr(0, line.find_last_of(' '));
            }
            untagged += line;
            untagged += "\n";
        }
        cif = untagged;
    }

    cif += "\nconfidence 0." + std::to_string(100 + static_cast<int>(index % 900)) +
           "\nnotes indicative structure, coordinates are approximate\n";
    return cif;
}

}  // namespace adsorbkit
