#pragma once

#include <string>
#include <vector>

#include "adsorbkit/dataset.hpp"
#include "adsorbkit/metrics.hpp"
#include "adsorbkit/model.hpp"
#include "adsorbkit/synth.hpp"

namespace adsorbkit {

struct EvalResult {
    double mae = 0.0;
    double r2 = 0.0;
    double mae_text = 0.0;
    double r2_text = 0.0;
    std::vector<double> preds_multimodal;
    std::vector<double> preds_text_only;
    std::vector<double> targets;
};

// Dual-head final predictions over a sample list, in multimodal and
// text-only modes. The text-only pass never touches the structures.
EvalResult evaluate(const ModelState& state, const std::vector<Sample>& samples,
                    const RadiiTable& radii = RadiiTable::bundled());

struct PirResult {
    double with_config = 0.0;     // permissive-derived third segment present
    double without_config = 0.0;  // two-part prompt only
    int pairs = 0;
    int predictions = 0;
};

// Structure-missing protocol: for each generated system, target range
// [min energy - delta, min + delta] over its sampled configurations;
// predictions are text-only, with the third segment either derived from an
// indicative CIF through the permissive path or absent.
PirResult pir_experiment(const ModelState& state, const GenSpec& spec, const OracleParams& params,
                         int n_pairs, int configs_per_pair, int cifs_per_pair, double delta);

// Embedding matrices for the first count samples (geo rows, text rows).
void embedding_matrices(const ModelState& state, const std::vector<Sample>& samples,
                        std::size_t count, Matrix& geo, Matrix& text,
                        const RadiiTable& radii = RadiiTable::bundled());

}  // namespace adsorbkit
