#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adsorbkit/neighbors.hpp"
#include "adsorbkit/structure.hpp"

namespace adsorbkit {

// System-level metadata: adsorbate atoms in order, catalyst composition, facet.
struct SystemMeta {
    std::vector<std::string> adsorbate_symbols;  // e.g. {C, C, H, H, H}
    std::string catalyst_formula;                // canonical, e.g. "Al12As12"
    std::array<int, 3> miller;                   // (h, k, l), not all zero

    void validate() const;
};

// Three-segment textual representation. Segment 3 may be empty (the two-part
// prompt case); the separator between segments is the literal "</s>".
struct ConfigString {
    std::string text;
    std::array<std::string, 3> segments;

    bool has_config_segment() const { return !segments[2].empty(); }
};

struct InteractingAtoms {
    std::set<std::size_t> primary;    // non-adsorbate sites adjacent to an adsorbate site
    std::set<std::size_t> secondary;  // non-adsorbate, non-primary sites adjacent to a primary
};

// Strict classification; nl must be built at scale 1.0 for the documented
// semantics. Throws NoAdsorbate when no site carries the Adsorbate tag.
InteractingAtoms interacting_atoms(const Structure& structure, const NeighborList& nl);

// Render the adsorbate symbol list: runs of length >= 3 are compressed to
// "El<n>", shorter runs are spelled out ({C,C,H,H,H} -> "CCH3").
std::string render_adsorbate_symbols(const std::vector<std::string>& symbols);

// Inverse of render_adsorbate_symbols.
std::vector<std::string> parse_adsorbate_symbols(const std::string& text);

ConfigString three_part_string(const Structure& structure, const SystemMeta& meta,
                               const NeighborList& nl_strict);

ConfigString two_part_prompt(const SystemMeta& meta);

// Build the config segment text from interacting-set element counts.
std::string render_config_segment(const std::map<std::string, int>& primary,
                                  const std::map<std::string, int>& secondary);

// Parse a config segment back into (primary, secondary) element counts.
void parse_config_segment(const std::string& segment, std::map<std::string, int>& primary,
                          std::map<std::string, int>& secondary);

// Split "data A</s>B (h k l)</s>C" into a ConfigString; throws
// InvalidArgumentError when the text does not match the grammar.
ConfigString parse_config_string(const std::string& text);

// Permissive back-conversion for indicative structures: anchors on the single
// adsorbate atom lowest above the surface and classifies neighbors at scale
// 4.0. Adsorbate sites come from tags, or from element matching against
// meta.adsorbate_symbols when tags are absent.
ConfigString permissive_config_string(const Structure& structure, const SystemMeta& meta,
                                      const RadiiTable& radii);

constexpr double kPermissiveScale = 4.0;

// Height of a site along the normal of the a-b plane, in Angstrom.
double surface_height(const Structure& structure, std::size_t site_index);

}  // namespace adsorbkit
