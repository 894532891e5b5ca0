#include "adsorbkit/structure.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

namespace {

double det3(const std::array<Vec3, 3>& m) {
    return dot(m[0], cross(m[1], m[2]));
}

bool finite3(const Vec3& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

}  // namespace

Lattice::Lattice(const std::array<Vec3, 3>& rows) : rows_(rows) {
    for (const auto& r : rows_) {
        if (!finite3(r)) throw InvalidArgumentError("lattice row is not finite");
    }
    volume_ = det3(rows_);
    if (!(volume_ > 0.0)) {
        throw InvalidArgumentError("lattice determinant must be strictly positive");
    }
}

Vec3 Lattice::to_cartesian(const Vec3& frac) const {
    return frac[0] * rows_[0] + frac[1] * rows_[1] + frac[2] * rows_[2];
}

double Lattice::shortest_vector() const {
    return std::min({norm(rows_[0]), norm(rows_[1]), norm(rows_[2])});
}

double Lattice::perpendicular_height(int k) const {
    const Vec3& u = rows_[(k + 1) % 3];
    const Vec3& v = rows_[(k + 2) % 3];
    double area = norm(cross(u, v));
    return volume_ / area;
}

Vec3 Lattice::surface_normal() const {
    Vec3 n = cross(rows_[0], rows_[1]);
    double len = norm(n);
    return {n[0] / len, n[1] / len, n[2] / len};
}

void Lattice::cell_parameters(double& a, double& b, double& c,
                              double& alpha, double& beta, double& gamma) const {
    constexpr double rad2deg = 57.295779513082320876798154814105;
    a = norm(rows_[0]);
    b = norm(rows_[1]);
    c = norm(rows_[2]);
    alpha = rad2deg * std::acos(std::clamp(dot(rows_[1], rows_[2]) / (b * c), -1.0, 1.0));
    beta = rad2deg * std::acos(std::clamp(dot(rows_[0], rows_[2]) / (a * c), -1.0, 1.0));
    gamma = rad2deg * std::acos(std::clamp(dot(rows_[0], rows_[1]) / (a * b), -1.0, 1.0));
}

Lattice Lattice::from_parameters(double a, double b, double c,
                                 double alpha_deg, double beta_deg, double gamma_deg) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) {
        throw NonPositiveCellError("cell lengths must be positive");
    }
    for (double angle : {alpha_deg, beta_deg, gamma_deg}) {
        if (!(angle > 0.0 && angle < 180.0)) {
            throw NonPositiveCellError("cell angles must lie in (0, 180) degrees");
        }
    }
    constexpr double deg2rad = 0.017453292519943295769236907684886;
    double ca = std::cos(alpha_deg * deg2rad);
    double cb = std::cos(beta_deg * deg2rad);
    double cg = std::cos(gamma_deg * deg2rad);
    double sg = std::sin(gamma_deg * deg2rad);

    Vec3 av = {a, 0.0, 0.0};
    Vec3 bv = {b * cg, b * sg, 0.0};
    double cx = c * cb;
    double cy = c * (ca - cb * cg) / sg;
    double cz2 = c * c - cx * cx - cy * cy;
    if (cz2 <= 0.0) {
        throw NonPositiveCellError("cell angles describe a degenerate cell");
    }
    Vec3 cv = {cx, cy, std::sqrt(cz2)};
    return Lattice({av, bv, cv});
}

Site::Site(std::string element_, const Vec3& frac_, Tag tag_)
    : element(std::move(element_)),
      frac{wrap_frac(frac_[0]), wrap_frac(frac_[1]), wrap_frac(frac_[2])},
      tag(tag_) {}

Structure::Structure(const Lattice& lattice_, std::vector<Site> sites_)
    : lattice(lattice_), sites(std::move(sites_)) {
    if (sites.empty()) throw InvalidArgumentError("structure must contain at least one site");
}

bool Structure::has_adsorbate() const {
    return std::any_of(sites.begin(), sites.end(),
                       [](const Site& s) { return s.tag == Tag::Adsorbate; });
}

RadiiTable::RadiiTable(std::map<std::string, double> radii) : radii_(std::move(radii)) {
    for (const auto& [element, r] : radii_) {
        if (!(r > 0.2 && r < 3.0)) {
            throw InvalidArgumentError("covalent radius out of range for " + element);
        }
        max_radius_ = std::max(max_radius_, r);
    }
}

double RadiiTable::radius(const std::string& element) const {
    auto it = radii_.find(element);
    if (it == radii_.end()) throw UnknownElementError(element);
    return it->second;
}

double covalent_radius(const RadiiTable& table, const std::string& element) {
    return table.radius(element);
}

std::string composition_formula(const std::map<std::string, int>& counts) {
    std::ostringstream out;
    for (const auto& [element, n] : counts) {
        out << element;
        if (n != 1) out << n;
    }
    return out.str();
}

std::string composition_formula(const Structure& structure) {
    std::map<std::string, int> counts;
    for (const auto& site : structure.sites) counts[site.element] += 1;
    return composition_formula(counts);
}

std::map<std::string, int> parse_formula(const std::string& formula) {
    std::map<std::string, int> counts;
    std::size_t i = 0;
    while (i < formula.size()) {
        if (!std::isupper(static_cast<unsigned char>(formula[i]))) {
            throw InvalidArgumentError("malformed formula: " + formula);
        }
        std::string element(1, formula[i]);
        ++i;
        while (i < formula.size() && std::islower(static_cast<unsigned char>(formula[i]))) {
            element.push_back(formula[i]);
            ++i;
        }
        std::string digits;
        while (i < formula.size() && std::isdigit(static_cast<unsigned char>(formula[i]))) {
            digits.push_back(formula[i]);
            ++i;
        }
        int n = digits.empty() ? 1 : std::stoi(digits);
        if (n < 1) throw InvalidArgumentError("malformed formula: " + formula);
        counts[element] += n;
    }
    if (counts.empty()) throw InvalidArgumentError("empty formula");
    return counts;
}

double min_image_distance(const Lattice& lattice, const Vec3& a, const Vec3& b) {
    Vec3 d = {wrap_frac(b[0]) - wrap_frac(a[0]),
              wrap_frac(b[1]) - wrap_frac(a[1]),
              wrap_frac(b[2]) - wrap_frac(a[2])};
    double best = std::numeric_limits<double>::infinity();
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            for (int k = -1; k <= 1; ++k) {
                Vec3 f = {d[0] + i, d[1] + j, d[2] + k};
                double r = norm(lattice.to_cartesian(f));
                best = std::min(best, r);
            }
        }
    }
    return best;
}

}  // namespace adsorbkit
