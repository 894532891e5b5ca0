#pragma once

#include <string>

#include "adsorbkit/structure.hpp"

namespace adsorbkit {

struct ParsedCif {
    Structure structure;
    std::string data_block_name;
    // True when the atom loop carried no tag column; every site was then
    // defaulted to Surface.
    bool tag_column_missing = false;
};

// Parse the fixed CIF subset documented in docs/cif-subset.md. Throws
// ParseError (with line number), UnknownElementError, or NonPositiveCellError.
ParsedCif parse_cif(const std::string& text, const RadiiTable& radii = RadiiTable::bundled());

// Emit the subset grammar; byte-for-byte deterministic for a given input.
std::string write_cif(const Structure& structure, const std::string& data_block_name);

// Prefix strictly before the first occurrence of two consecutive newline
// characters (CRLF input is normalized to LF first); the whole input if the
// terminator never occurs.
std::string truncate_at_double_newline(const std::string& text);

// Filter: true iff the text (truncated at the first blank line, so raw
// generated streams can be fed directly) parses and the parsed composition
// equals the canonical form of expected_formula. Parse failures yield false.
bool composition_matches(const std::string& cif_text, const std::string& expected_formula,
                         const RadiiTable& radii = RadiiTable::bundled());

}  // namespace adsorbkit
