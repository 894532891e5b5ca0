#pragma once

// Shared test utilities: seeded random structures, independent brute-force
// oracles, and rigid-motion helpers. Everything here recomputes results from
// first principles and must stay independent of the library's fast paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adsorbkit/neighbors.hpp"
#include "adsorbkit/rng.hpp"
#include "adsorbkit/structure.hpp"

namespace testkit {

using adsorbkit::operator+;
using adsorbkit::operator-;
using adsorbkit::operator*;
using adsorbkit::Lattice;
using adsorbkit::Matrix;
using adsorbkit::RadiiTable;
using adsorbkit::Rng;
using adsorbkit::Site;
using adsorbkit::Structure;
using adsorbkit::Tag;
using adsorbkit::Vec3;

// Near-orthogonal lattice with every vector at least min_len long: angles are
// kept within a few degrees of 90 so that 27-image minimum distances are
// exact for the cutoffs used in the suite.
inline Lattice random_lattice(Rng& rng, double min_len, double max_len) {
    double a = rng.uniform(min_len, max_len);
    double b = rng.uniform(min_len, max_len);
    double c = rng.uniform(min_len, max_len);
    auto tilt = [&]() { return rng.uniform(-0.06, 0.06); };
    Vec3 av = {a, a * tilt(), a * tilt()};
    Vec3 bv = {b * tilt(), b, b * tilt()};
    Vec3 cv = {c * tilt(), c * tilt(), c};
    return Lattice({av, bv, cv});
}

inline Structure random_structure(Rng& rng, std::size_t n_sites, double min_len, double max_len,
                                  const std::vector<std::string>& elements,
                                  bool ensure_adsorbate = false) {
    Lattice lattice = random_lattice(rng, min_len, max_len);
    std::vector<Site> sites;
    sites.reserve(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) {
        Tag tag = static_cast<Tag>(rng.uniform_index(3));
        if (ensure_adsorbate && i == 0) tag = Tag::Adsorbate;
        sites.emplace_back(elements[rng.uniform_index(elements.size())],
                           Vec3{rng.uniform(), rng.uniform(), rng.uniform()}, tag);
    }
    return Structure(lattice, std::move(sites));
}

// Brute-force minimum-image distance over a (2r+1)^3 image grid.
inline double brute_min_distance(const Lattice& lattice, const Vec3& a, const Vec3& b,
                                 int radius) {
    Vec3 d = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    for (auto& v : d) v -= std::floor(v);
    double best = 1e300;
    for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
            for (int k = -radius; k <= radius; ++k) {
                Vec3 f = {d[0] + i, d[1] + j, d[2] + k};
                Vec3 cart = f[0] * lattice.row(0) + f[1] * lattice.row(1) + f[2] * lattice.row(2);
                best = std::min(best, adsorbkit::norm(cart));
            }
        }
    }
    return best;
}

// O(N^2) neighbor construction over a 5x5x5 image grid; the independent
// oracle for the cell-list path.
inline std::vector<std::vector<std::pair<std::size_t, double>>> brute_force_neighbors(
    const Structure& structure, const RadiiTable& radii, double scale) {
    const std::size_t n = structure.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double cutoff = scale * (radii.radius(structure.sites[i].element) +
                                     radii.radius(structure.sites[j].element));
            double d = brute_min_distance(structure.lattice, structure.sites[i].frac,
                                          structure.sites[j].frac, 2);
            if (d <= cutoff) rows[i].emplace_back(j, d);
        }
    }
    for (auto& row : rows) std::sort(row.begin(), row.end());
    return rows;
}

// Proper rotation from three seeded angles.
inline std::array<Vec3, 3> random_rotation(Rng& rng) {
    double a = rng.uniform(0.0, 6.28318530717958647692);
    double b = rng.uniform(0.0, 3.14159265358979323846);
    double c = rng.uniform(0.0, 6.28318530717958647692);
    double ca = std::cos(a), sa = std::sin(a);
    double cb = std::cos(b), sb = std::sin(b);
    double cc = std::cos(c), sc = std::sin(c);
    // ZYZ Euler composition
    std::array<Vec3, 3> r = {
        Vec3{ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb},
        Vec3{sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb},
        Vec3{-sb * cc, sb * sc, cb},
    };
    return r;
}

// Rotates the lattice (and therefore every Cartesian position) by R.
inline Structure rotate_structure(const Structure& s, const std::array<Vec3, 3>& r) {
    auto rotate = [&](const Vec3& v) {
        return Vec3{adsorbkit::dot(r[0], v), adsorbkit::dot(r[1], v), adsorbkit::dot(r[2], v)};
    };
    Lattice lattice({rotate(s.lattice.row(0)), rotate(s.lattice.row(1)), rotate(s.lattice.row(2))});
    std::vector<Site> sites = s.sites;
    return Structure(lattice, std::move(sites));
}

// Translates every site by t (fractional) and rewraps.
inline Structure translate_structure(const Structure& s, const Vec3& t) {
    std::vector<Site> sites;
    sites.reserve(s.size());
    for (const auto& site : s.sites) {
        sites.emplace_back(site.element,
                           Vec3{site.frac[0] + t[0], site.frac[1] + t[1], site.frac[2] + t[2]},
                           site.tag);
    }
    return Structure(s.lattice, std::move(sites));
}

inline Structure permute_structure(const Structure& s, Rng& rng) {
    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Site> sites;
    sites.reserve(s.size());
    for (std::size_t i : order) sites.push_back(s.sites[i]);
    return Structure(s.lattice, std::move(sites));
}

}  // namespace testkit
