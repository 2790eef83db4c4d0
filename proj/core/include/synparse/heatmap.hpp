#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "synparse/deptree.hpp"
#include "synparse/model.hpp"
#include "synparse/sawr.hpp"

namespace synparse {

struct HeatmapExport {
  std::vector<std::string> files;  // names relative to the export dir
};

// Runs one forward pass over `s` and writes the encoder attention maps as
// JSON plus one PGM per head. Parent-proximity matrices (raw and symmetrized)
// are added for distance-scaling models, per-layer constituent priors for
// constituent-attention models. `index` is the sentence's position in its
// dataset, recorded in the JSON and used for file-backed vector lookup.
HeatmapExport export_heatmap(const Model& m, const Sentence& s,
                             const SawrProvider* sawr, std::size_t index,
                             const std::string& dir);

// Sample Pearson correlation; inputs must be same-length with nonzero
// variance (NumericError otherwise).
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Row-major n*n copy of d with every row rescaled to sum to one.
std::vector<double> row_normalized(const DistanceMatrix& d);

// Elementwise mean over one encoder layer's post-softmax head weights.
std::vector<double> mean_head_weights(const ForwardTrace& trace, std::size_t layer);

// Mean over sentences of pearson(mean head weights of `layer`, row-normalized
// parent-proximity matrix). The proximity matrix comes from each sentence's
// gold tree, whether or not the model consumes it, so baseline and
// distance-scaled models are comparable on the same footing.
double distance_alignment(const Model& m, const std::vector<Sentence>& sentences,
                          std::size_t layer, const SawrProvider* sawr = nullptr);

}  // namespace synparse
