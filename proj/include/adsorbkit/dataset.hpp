#pragma once

#include <string>
#include <vector>

#include "adsorbkit/stringify.hpp"
#include "adsorbkit/structure.hpp"

namespace adsorbkit {

// One training record: geometry, metadata, text representation, target energy.
struct Sample {
    Structure structure;
    SystemMeta meta;
    ConfigString config_string;
    double energy_ev = 0.0;
};

// One JSON object per line with fields
// {cif, config_string, meta:{adsorbate, formula, miller}, energy_ev};
// see docs/dataset-schema.md.
std::string sample_to_json_line(const Sample& sample);
Sample sample_from_json_line(const std::string& line);

std::vector<Sample> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Sample>& samples);

}  // namespace adsorbkit
