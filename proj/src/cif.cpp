#include "adsorbkit/cif.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>
#include <vector>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

namespace {

std::string normalize_newlines(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
        out.push_back(text[i] == '\r' ? '\n' : text[i]);
    }
    return out;
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_number(const std::string& tok, std::size_t line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("expected a number, got '" + tok + "'", line);
    }
    if (pos != tok.size()) throw ParseError("expected a number, got '" + tok + "'", line);
    return v;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    // avoid the "-0.00000000" artifact
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

struct LoopColumns {
    int symbol = -1;
    int fx = -1;
    int fy = -1;
    int fz = -1;
    int tag = -1;
    int count = 0;
};

}  // namespace

ParsedCif parse_cif(const std::string& text, const RadiiTable& radii) {
    const std::string normalized = normalize_newlines(text);
    std::vector<std::string> lines;
    {
        std::istringstream in(normalized);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }

    std::optional<std::string> block_name;
    std::optional<double> a, b, c, alpha, beta, gamma;
    std::vector<Site> sites;
    bool saw_loop = false;
    bool tag_column_seen = false;

    std::size_t i = 0;
    auto line_no = [&](std::size_t idx) { return idx + 1; };

    while (i < lines.size()) {
        std::string line = strip(lines[i]);
        if (line.empty() || line[0] == '#') {
            ++i;
            continue;
        }
        if (line.rfind("data_", 0) == 0) {
            if (block_name) throw ParseError("multiple data blocks", line_no(i));
            block_name = line.substr(5);
            ++i;
            continue;
        }
        if (line[0] == '_') {
            auto toks = split_ws(line);
            if (toks.size() != 2) throw ParseError("expected '_tag value'", line_no(i));
            const std::string& key = toks[0];
            if (key == "_cell_length_a") a = parse_number(toks[1], line_no(i));
            else if (key == "_cell_length_b") b = parse_number(toks[1], line_no(i));
            else if (key == "_cell_length_c") c = parse_number(toks[1], line_no(i));
            else if (key == "_cell_angle_alpha") alpha = parse_number(toks[1], line_no(i));
            else if (key == "_cell_angle_beta") beta = parse_number(toks[1], line_no(i));
            else if (key == "_cell_angle_gamma") gamma = parse_number(toks[1], line_no(i));
            // unrecognized non-loop tags are ignored
            ++i;
            continue;
        }
        if (line == "loop_") {
            if (saw_loop) throw ParseError("multiple atom loops", line_no(i));
            saw_loop = true;
            ++i;
            LoopColumns cols;
            while (i < lines.size()) {
                std::string header = strip(lines[i]);
                if (header.empty() || header[0] != '_') break;
                if (header == "_atom_site_type_symbol") cols.symbol = cols.count;
                else if (header == "_atom_site_fract_x") cols.fx = cols.count;
                else if (header == "_atom_site_fract_y") cols.fy = cols.count;
                else if (header == "_atom_site_fract_z") cols.fz = cols.count;
                else if (header == "_atom_site_adsorbkit_tag") cols.tag = cols.count;
                // unknown loop columns are read and ignored
                ++cols.count;
                ++i;
            }
            if (cols.symbol < 0 || cols.fx < 0 || cols.fy < 0 || cols.fz < 0) {
                throw ParseError("atom loop is missing a required column", line_no(i - 1));
            }
            tag_column_seen = cols.tag >= 0;
            while (i < lines.size()) {
                std::string row = strip(lines[i]);
                if (row.empty()) break;
                if (row[0] == '_' || row.rfind("loop_", 0) == 0 || row.rfind("data_", 0) == 0) break;
                auto toks = split_ws(row);
                if (static_cast<int>(toks.size()) != cols.count) {
                    throw ParseError("atom row has " + std::to_string(toks.size()) +
                                         " fields, expected " + std::to_string(cols.count),
                                     line_no(i));
                }
                const std::string& element = toks[cols.symbol];
                if (!radii.contains(element)) throw UnknownElementError(element);
                Vec3 frac = {parse_number(toks[cols.fx], line_no(i)),
                             parse_number(toks[cols.fy], line_no(i)),
                             parse_number(toks[cols.fz], line_no(i))};
                Tag tag = Tag::Surface;
                if (cols.tag >= 0) {
                    const std::string& t = toks[cols.tag];
                    if (t == "0") tag = Tag::Subsurface;
                    else if (t == "1") tag = Tag::Surface;
                    else if (t == "2") tag = Tag::Adsorbate;
                    else throw ParseError("tag must be 0, 1 or 2, got '" + t + "'", line_no(i));
                }
                sites.emplace_back(element, frac, tag);
                ++i;
            }
            continue;
        }
        throw ParseError("unrecognized line '" + line + "'", line_no(i));
    }

    if (!block_name) throw ParseError("missing data_ block", 1);
    if (!a || !b || !c || !alpha || !beta || !gamma) {
        throw ParseError("missing cell parameters", lines.size());
    }
    if (!(*a > 0.0 && *b > 0.0 && *c > 0.0)) {
        throw NonPositiveCellError("cell lengths must be positive");
    }
    if (sites.empty()) throw ParseError("no atom sites", lines.size());

    Lattice lattice = Lattice::from_parameters(*a, *b, *c, *alpha, *beta, *gamma);
    return ParsedCif{Structure(lattice, std::move(sites)), *block_name, !tag_column_seen};
}

std::string write_cif(const Structure& structure, const std::string& data_block_name) {
    double a, b, c, alpha, beta, gamma;
    structure.lattice.cell_parameters(a, b, c, alpha, beta, gamma);

    std::ostringstream out;
    out << "data_" << data_block_name << "\n";
    out << "_cell_length_a " << format_fixed(a, 8) << "\n";
    out << "_cell_length_b " << format_fixed(b, 8) << "\n";
    out << "_cell_length_c " << format_fixed(c, 8) << "\n";
    out << "_cell_angle_alpha " << format_fixed(alpha, 8) << "\n";
    out << "_cell_angle_beta " << format_fixed(beta, 8) << "\n";
    out << "_cell_angle_gamma " << format_fixed(gamma, 8) << "\n";
    out << "loop_\n";
    out << "_atom_site_type_symbol\n";
    out << "_atom_site_fract_x\n";
    out << "_atom_site_fract_y\n";
    out << "_atom_site_fract_z\n";
    out << "_atom_site_adsorbkit_tag\n";
    for (const auto& site : structure.sites) {
        out << site.element << " " << format_fixed(site.frac[0], 8) << " "
            << format_fixed(site.frac[1], 8) << " " << format_fixed(site.frac[2], 8) << " "
            << static_cast<int>(site.tag) << "\n";
    }
    return out.str();
}

std::string truncate_at_double_newline(const std::string& text) {
    std::string normalized = normalize_newlines(text);
    std::size_t pos = normalized.find("\n\n");
    if (pos == std::string::npos) return normalized;
    return normalized.substr(0, pos);
}

bool composition_matches(const std::string& cif_text, const std::string& expected_formula,
                         const RadiiTable& radii) {
    const std::string canonical = composition_formula(parse_formula(expected_formula));
    try {
        // generated streams may carry continuation text after a blank line
        ParsedCif parsed = parse_cif(truncate_at_double_newline(cif_text), radii);
        return composition_formula(parsed.structure) == canonical;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace adsorbkit
