#pragma once

#include <map>
#include <string>
#include <vector>

#include "adsorbkit/linalg.hpp"

namespace adsorbkit {

// Periodic cell. Rows are the lattice vectors in Angstrom; the determinant
// must be strictly positive (right-handed, non-degenerate).
class Lattice {
public:
    explicit Lattice(const std::array<Vec3, 3>& rows);

    const Vec3& row(int i) const { return rows_[i]; }
    const std::array<Vec3, 3>& rows() const { return rows_; }

    Vec3 to_cartesian(const Vec3& frac) const;
    double volume() const { return volume_; }

    // Norm of the shortest of the three lattice vectors.
    double shortest_vector() const;

    // Perpendicular distance between lattice planes normal to axis k
    // (volume / area of the face spanned by the other two vectors).
    double perpendicular_height(int k) const;

    // Unit normal of the a-b plane, oriented along c.
    Vec3 surface_normal() const;

    // Conventional cell parameters (lengths in Angstrom, angles in degrees).
    void cell_parameters(double& a, double& b, double& c,
                         double& alpha, double& beta, double& gamma) const;

    // Build a lattice from cell parameters using the standard crystallographic
    // orientation: a along x, b in the xy-plane.
    static Lattice from_parameters(double a, double b, double c,
                                   double alpha_deg, double beta_deg, double gamma_deg);

private:
    std::array<Vec3, 3> rows_;
    double volume_ = 0.0;
};

enum class Tag : int {
    Subsurface = 0,
    Surface = 1,
    Adsorbate = 2,
};

// One site; fractional coordinates are wrapped into [0,1) on construction.
struct Site {
    std::string element;
    Vec3 frac;
    Tag tag;

    Site(std::string element_, const Vec3& frac_, Tag tag_);
};

struct Structure {
    Lattice lattice;
    std::vector<Site> sites;

    Structure(const Lattice& lattice_, std::vector<Site> sites_);

    std::size_t size() const { return sites.size(); }
    bool has_adsorbate() const;
};

// Covalent radii in Angstrom, immutable after construction.
class RadiiTable {
public:
    explicit RadiiTable(std::map<std::string, double> radii);

    bool contains(const std::string& element) const { return radii_.count(element) != 0; }
    double radius(const std::string& element) const;
    double max_radius() const { return max_radius_; }
    const std::map<std::string, double>& entries() const { return radii_; }

    // Bundled single-bond covalent radii (fixed, versioned data).
    static const RadiiTable& bundled();

private:
    std::map<std::string, double> radii_;
    double max_radius_ = 0.0;
};

// Canonical composition formula: elements sorted alphabetically, count
// suffix omitted when 1 (e.g. "Al2As2", "H").
std::string composition_formula(const Structure& structure);
std::string composition_formula(const std::map<std::string, int>& counts);

// Parse an "El<count>El<count>..." formula into element counts; throws
// InvalidArgumentError on malformed input.
std::map<std::string, int> parse_formula(const std::string& formula);

// Minimum Cartesian distance between fractional positions a and b over the
// 27 periodic images of b.
double min_image_distance(const Lattice& lattice, const Vec3& a, const Vec3& b);

double covalent_radius(const RadiiTable& table, const std::string& element);

inline double wrap_frac(double x) {
    double w = x - std::floor(x);
    return (w >= 1.0) ? 0.0 : w;
}

}  // namespace adsorbkit
