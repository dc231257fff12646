#pragma once

// Umbrella header: traffic synthesis, window aggregation, dataset pipeline,
// the two classifiers, evaluation, and experiment orchestration.

#include "procflow/common.hpp"
#include "procflow/dataset.hpp"
#include "procflow/events.hpp"
#include "procflow/experiment.hpp"
#include "procflow/features.hpp"
#include "procflow/forest.hpp"
#include "procflow/manifest.hpp"
#include "procflow/metrics.hpp"
#include "procflow/mlp.hpp"
#include "procflow/rng.hpp"
#include "procflow/synth.hpp"
