#include "adsorbkit/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/errors.hpp"

namespace adsorbkit {

std::string sample_to_json_line(const Sample& sample) {
    nlohmann::json j;
    j["cif"] = write_cif(sample.structure, "sample");
    j["config_string"] = sample.config_string.text;
    j["meta"] = {
        {"adsorbate", render_adsorbate_symbols(sample.meta.adsorbate_symbols)},
        {"formula", sample.meta.catalyst_formula},
        {"miller", {sample.meta.miller[0], sample.meta.miller[1], sample.meta.miller[2]}},
    };
    j["energy_ev"] = sample.energy_ev;
    return j.dump();
}

Sample sample_from_json_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    ParsedCif parsed = parse_cif(j.at("cif").get<std::string>());

    SystemMeta meta;
    meta.adsorbate_symbols = parse_adsorbate_symbols(j.at("meta").at("adsorbate").get<std::string>());
    meta.catalyst_formula = j.at("meta").at("formula").get<std::string>();
    auto miller = j.at("meta").at("miller");
    meta.miller = {miller.at(0).get<int>(), miller.at(1).get<int>(), miller.at(2).get<int>()};

    return Sample{parsed.structure, meta,
                  parse_config_string(j.at("config_string").get<std::string>()),
                  j.at("energy_ev").get<double>()};
}

std::vector<Sample> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        samples.push_back(sample_from_json_line(line));
    }
    return samples;
}

void write_jsonl(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& sample : samples) {
        out << sample_to_json_line(sample) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace adsorbkit
