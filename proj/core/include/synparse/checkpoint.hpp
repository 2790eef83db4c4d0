#pragma once

#include <memory>
#include <string>

#include "synparse/model.hpp"
#include "synparse/sawr.hpp"

namespace synparse {

struct LoadedCheckpoint {
  Model model;
  std::shared_ptr<TrainedSawrProvider> provider;  // null when none was embedded
};

// Binary container: magic + version + JSON header (config, vocabularies,
// parameter manifest, optional embedded provider) + raw parameter payload.
// Loading validates the manifest against the payload shape by shape.
void save_checkpoint(const std::string& path, const Model& m,
                     const TrainedSawrProvider* provider = nullptr);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace synparse
