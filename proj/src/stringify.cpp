#include "adsorbkit/stringify.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

namespace {

const std::string kSep = "</s>";

std::map<std::string, int> element_counts(const Structure& structure,
                                          const std::set<std::size_t>& indices) {
    std::map<std::string, int> counts;
    for (std::size_t i : indices) counts[structure.sites[i].element] += 1;
    return counts;
}

std::vector<std::size_t> adsorbate_indices_by_tag(const Structure& structure) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < structure.size(); ++i) {
        if (structure.sites[i].tag == Tag::Adsorbate) out.push_back(i);
    }
    return out;
}

ConfigString assemble(const std::string& seg1, const std::string& seg2,
                      const std::string& seg3) {
    ConfigString cs;
    cs.segments = {seg1, seg2, seg3};
    cs.text = "data " + seg1 + kSep + seg2;
    if (!seg3.empty()) cs.text += kSep + seg3;
    return cs;
}

std::string miller_text(const std::array<int, 3>& miller) {
    std::ostringstream out;
    out << "(" << miller[0] << " " << miller[1] << " " << miller[2] << ")";
    return out.str();
}

}  // namespace

void SystemMeta::validate() const {
    if (adsorbate_symbols.empty()) throw InvalidArgumentError("adsorbate symbol list is empty");
    if (miller[0] == 0 && miller[1] == 0 && miller[2] == 0) {
        throw InvalidArgumentError("miller indices must not all be zero");
    }
    parse_formula(catalyst_formula);
}

std::string render_adsorbate_symbols(const std::vector<std::string>& symbols) {
    std::string out;
    std::size_t i = 0;
    while (i < symbols.size()) {
        std::size_t run = 1;
        while (i + run < symbols.size() && symbols[i + run] == symbols[i]) ++run;
        if (run >= 3) {
            out += symbols[i] + std::to_string(run);
        } else {
            for (std::size_t k = 0; k < run; ++k) out += symbols[i];
        }
        i += run;
    }
    return out;
}

std::vector<std::string> parse_adsorbate_symbols(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isupper(static_cast<unsigned char>(text[i]))) {
            throw InvalidArgumentError("malformed adsorbate symbols: " + text);
        }
        std::string element(1, text[i]);
        ++i;
        while (i < text.size() && std::islower(static_cast<unsigned char>(text[i]))) {
            element.push_back(text[i]);
            ++i;
        }
        std::string digits;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            digits.push_back(text[i]);
            ++i;
        }
        int n = digits.empty() ? 1 : std::stoi(digits);
        for (int k = 0; k < n; ++k) out.push_back(element);
    }
    if (out.empty()) throw InvalidArgumentError("empty adsorbate symbols");
    return out;
}

InteractingAtoms interacting_atoms(const Structure& structure, const NeighborList& nl) {
    if (!structure.has_adsorbate()) throw NoAdsorbateError();

    InteractingAtoms result;
    auto is_adsorbate = [&](std::size_t i) {
        return structure.sites[i].tag == Tag::Adsorbate;
    };
    for (std::size_t i : adsorbate_indices_by_tag(structure)) {
        for (const auto& [j, d] : nl.neighbors_of(i)) {
            (void)d;
            if (!is_adsorbate(j)) result.primary.insert(j);
        }
    }
    for (std::size_t p : result.primary) {
        for (const auto& [j, d] : nl.neighbors_of(p)) {
            (void)d;
            if (!is_adsorbate(j) && result.primary.count(j) == 0) result.secondary.insert(j);
        }
    }
    return result;
}

std::string render_config_segment(const std::map<std::string, int>& primary,
                                  const std::map<std::string, int>& secondary) {
    std::ostringstream out;
    out << "primary";
    if (primary.empty()) {
        out << " none";
    } else {
        for (const auto& [element, n] : primary) out << " " << element << "x" << n;
    }
    out << " secondary";
    if (secondary.empty()) {
        out << " none";
    } else {
        for (const auto& [element, n] : secondary) out << " " << element << "x" << n;
    }
    return out.str();
}

void parse_config_segment(const std::string& segment, std::map<std::string, int>& primary,
                          std::map<std::string, int>& secondary) {
    primary.clear();
    secondary.clear();
    std::istringstream in(segment);
    std::string tok;
    std::map<std::string, int>* current = nullptr;
    bool saw_primary = false, saw_secondary = false;
    while (in >> tok) {
        if (tok == "primary") {
            current = &primary;
            saw_primary = true;
        } else if (tok == "secondary") {
            current = &secondary;
            saw_secondary = true;
        } else if (tok == "none") {
            if (current == nullptr) throw InvalidArgumentError("config segment: stray 'none'");
        } else {
            if (current == nullptr) throw InvalidArgumentError("config segment: stray token " + tok);
            std::size_t x = tok.rfind('x');
            if (x == std::string::npos || x == 0 || x + 1 >= tok.size()) {
                throw InvalidArgumentError("config segment: bad group " + tok);
            }
            std::string element = tok.substr(0, x);
            int n = std::stoi(tok.substr(x + 1));
            (*current)[element] += n;
        }
    }
    if (!saw_primary || !saw_secondary) {
        throw InvalidArgumentError("config segment must contain 'primary' and 'secondary'");
    }
}

ConfigString three_part_string(const Structure& structure, const SystemMeta& meta,
                               const NeighborList& nl_strict) {
    meta.validate();
    InteractingAtoms sets = interacting_atoms(structure, nl_strict);
    std::string seg3 = render_config_segment(element_counts(structure, sets.primary),
                                             element_counts(structure, sets.secondary));
    return assemble(render_adsorbate_symbols(meta.adsorbate_symbols),
                    meta.catalyst_formula + " " + miller_text(meta.miller), seg3);
}

ConfigString two_part_prompt(const SystemMeta& meta) {
    meta.validate();
    return assemble(render_adsorbate_symbols(meta.adsorbate_symbols),
                    meta.catalyst_formula + " " + miller_text(meta.miller), "");
}

ConfigString parse_config_string(const std::string& text) {
    if (text.rfind("data ", 0) != 0) {
        throw InvalidArgumentError("config string must start with 'data '");
    }
    std::string body = text.substr(5);
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        std::size_t sep = body.find(kSep, pos);
        if (sep == std::string::npos) {
            parts.push_back(body.substr(pos));
            break;
        }
        parts.push_back(body.substr(pos, sep - pos));
        pos = sep + kSep.size();
    }
    if (parts.size() != 2 && parts.size() != 3) {
        throw InvalidArgumentError("config string must have two or three segments");
    }
    ConfigString cs;
    cs.segments = {parts[0], parts[1], parts.size() == 3 ? parts[2] : ""};
    cs.text = text;
    return cs;
}

double surface_height(const Structure& structure, std::size_t site_index) {
    Vec3 cart = structure.lattice.to_cartesian(structure.sites[site_index].frac);
    return dot(cart, structure.lattice.surface_normal());
}

ConfigString permissive_config_string(const Structure& structure, const SystemMeta& meta,
                                      const RadiiTable& radii) {
    meta.validate();

    std::vector<std::size_t> adsorbate = adsorbate_indices_by_tag(structure);
    std::vector<bool> is_adsorbate(structure.size(), false);
    if (!adsorbate.empty()) {
        for (std::size_t i : adsorbate) is_adsorbate[i] = true;
    } else {
        // No tags: claim the topmost sites whose elements match the adsorbate
        // composition, element by element.
        std::map<std::string, int> wanted;
        for (const auto& s : meta.adsorbate_symbols) wanted[s] += 1;
        for (const auto& [element, count] : wanted) {
            std::vector<std::size_t> candidates;
            for (std::size_t i = 0; i < structure.size(); ++i) {
                if (structure.sites[i].element == element) candidates.push_back(i);
            }
            if (candidates.empty()) {
                throw AmbiguousAdsorbateError("no candidate sites for adsorbate element " +
                                              element);
            }
            std::stable_sort(candidates.begin(), candidates.end(),
                             [&](std::size_t a, std::size_t b) {
                                 double ha = surface_height(structure, a);
                                 double hb = surface_height(structure, b);
                                 if (ha != hb) return ha > hb;
                                 return a < b;
                             });
            for (int k = 0; k < count && k < static_cast<int>(candidates.size()); ++k) {
                adsorbate.push_back(candidates[k]);
                is_adsorbate[candidates[k]] = true;
            }
        }
    }
    if (adsorbate.empty()) throw NoAdsorbateError();

    // Anchor: the adsorbate atom lowest above the top surface layer; ties by
    // lowest site index.
    std::size_t anchor = adsorbate[0];
    double anchor_height = surface_height(structure, anchor);
    for (std::size_t i : adsorbate) {
        double h = surface_height(structure, i);
        if (h < anchor_height - 1e-6 || (std::abs(h - anchor_height) <= 1e-6 && i < anchor)) {
            anchor = i;
            anchor_height = h;
        }
    }

    NeighborList nl = build_neighbor_list(structure, radii, kPermissiveScale);
    std::set<std::size_t> primary;
    for (const auto& [j, d] : nl.neighbors_of(anchor)) {
        (void)d;
        if (!is_adsorbate[j]) primary.insert(j);
    }
    std::set<std::size_t> secondary;
    for (std::size_t p : primary) {
        for (const auto& [j, d] : nl.neighbors_of(p)) {
            (void)d;
            if (!is_adsorbate[j] && primary.count(j) == 0) secondary.insert(j);
        }
    }

    std::string seg3 = render_config_segment(element_counts(structure, primary),
                                             element_counts(structure, secondary));
    return assemble(render_adsorbate_symbols(meta.adsorbate_symbols),
                    meta.catalyst_formula + " " + miller_text(meta.miller), seg3);
}

}  // namespace adsorbkit
