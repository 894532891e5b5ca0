#include "adsorbkit/eval.hpp"

#include <algorithm>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/errors.hpp"
#include "adsorbkit/stringify.hpp"

namespace adsorbkit {

EvalResult evaluate(const ModelState& state, const std::vector<Sample>& samples,
                    const RadiiTable& radii) {
    if (samples.empty()) throw EmptyInputError("evaluate: no samples");
    EvalResult out;
    out.targets.reserve(samples.size());
    for (const auto& sample : samples) {
        std::vector<double> text_emb = encode_text(state, sample.config_string);
        Prediction text_only = predict(state, std::nullopt, text_emb);

        NeighborList nl = build_neighbor_list(sample.structure, radii, 1.0);
        std::vector<double> geo_emb = encode_structure(state, sample.structure, nl);
        Prediction multimodal = predict(state, geo_emb, text_emb);

        out.preds_multimodal.push_back(multimodal.e_final);
        out.preds_text_only.push_back(text_only.e_final);
        out.targets.push_back(sample.energy_ev);
    }
    MaeR2 multi = mae_r2(out.preds_multimodal, out.targets);
    MaeR2 text = mae_r2(out.preds_text_only, out.targets);
    out.mae = multi.mae;
    out.r2 = multi.r2;
    out.mae_text = text.mae;
    out.r2_text = text.r2;
    return out;
}

PirResult pir_experiment(const ModelState& state, const GenSpec& spec, const OracleParams& params,
                         int n_pairs, int configs_per_pair, int cifs_per_pair, double delta) {
    if (n_pairs < 1 || configs_per_pair < 1 || cifs_per_pair < 1) {
        throw InvalidArgumentError("pir_experiment: counts must be positive");
    }
    const RadiiTable& radii = params.radii();

    std::vector<double> preds_with, preds_without;
    std::vector<EnergyRange> ranges;

    for (int p = 0; p < n_pairs; ++p) {
        SystemSpec sys = sample_system(spec, static_cast<std::uint64_t>(p));
        double min_energy = 0.0;
        SystemMeta meta;
        for (int k = 0; k < configs_per_pair; ++k) {
            Sample s = generate_sample(spec, sys, static_cast<std::uint64_t>(k), params);
            if (k == 0) {
                meta = s.meta;
                min_energy = s.energy_ev;
            } else {
                min_energy = std::min(min_energy, s.energy_ev);
            }
        }
        EnergyRange range{min_energy - delta, min_energy + delta};

        ConfigString prompt = two_part_prompt(meta);
        double pred_without =
            predict(state, std::nullopt, encode_text(state, prompt)).e_final;

        for (int j = 0; j < cifs_per_pair; ++j) {
            std::string raw =
                generate_indicative_cif(spec, meta, static_cast<std::uint64_t>(j), params);
            std::string cif = truncate_at_double_newline(raw);
            ParsedCif parsed = parse_cif(cif, radii);
            ConfigString with_config = permissive_config_string(parsed.structure, meta, radii);
            double pred_with =
                predict(state, std::nullopt, encode_text(state, with_config)).e_final;

            preds_with.push_back(pred_with);
            preds_without.push_back(pred_without);
            ranges.push_back(range);
        }
    }

    PirResult out;
    out.with_config = pir(preds_with, ranges);
    out.without_config = pir(preds_without, ranges);
    out.pairs = n_pairs;
    out.predictions = static_cast<int>(preds_with.size());
    return out;
}

void embedding_matrices(const ModelState& state, const std::vector<Sample>& samples,
                        std::size_t count, Matrix& geo, Matrix& text, const RadiiTable& radii) {
    const std::size_t n = std::min(count, samples.size());
    if (n == 0) throw EmptyInputError("embedding_matrices: no samples");
    const std::size_t d = static_cast<std::size_t>(state.config.embed_dim);
    geo = Matrix(n, d);
    text = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        NeighborList nl = build_neighbor_list(samples[i].structure, radii, 1.0);
        std::vector<double> g = encode_structure(state, samples[i].structure, nl);
        std::vector<double> t = encode_text(state, samples[i].config_string);
        for (std::size_t k = 0; k < d; ++k) {
            geo(i, k) = g[k];
            text(i, k) = t[k];
        }
    }
}

}  // namespace adsorbkit
