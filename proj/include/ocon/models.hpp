#pragma once

#include <vector>

#include "ocon/eigenspace.hpp"
#include "ocon/mlp.hpp"

namespace ocon {

struct LabeledFeature {
  FeatureVector features;
  int class_id = 0;
};

// One OCON subnet: a single-output network dedicated to one class.
struct ClassModel {
  int class_id = 0;
  Topology topology;
  Weights weights;
  TrainingTrace trace;
};

struct OconEnsemble {
  std::vector<ClassModel> models;  // ascending class_id
  std::size_t feature_dim = 0;

  std::vector<int> class_ids() const;
  const ClassModel* find(int class_id) const;
};

// One network with an output per class, outputs ordered like class_ids.
struct AconModel {
  std::vector<int> class_ids;
  Topology topology;
  Weights weights;
  TrainingTrace trace;
};

}  // namespace ocon
