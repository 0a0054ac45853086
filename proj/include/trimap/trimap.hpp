#pragma once

// Umbrella header: triplet-based dimensionality reduction with a global-structure score.

#include "trimap/config.hpp"
#include "trimap/data_io.hpp"
#include "trimap/knn.hpp"
#include "trimap/linalg.hpp"
#include "trimap/metrics.hpp"
#include "trimap/optimizer.hpp"
#include "trimap/parallel.hpp"
#include "trimap/pipeline.hpp"
#include "trimap/rng.hpp"
#include "trimap/svg.hpp"
#include "trimap/triplets.hpp"
#include "trimap/types.hpp"
