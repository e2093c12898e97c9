#pragma once

// Diversified prototypical ensembles over frozen feature embeddings:
// balanced bootstrap subsets, sequentially trained distance classifiers
// with an inter-prototype similarity penalty, and worst-group evaluation.

#include "dpe/common.hpp"
#include "dpe/config.hpp"
#include "dpe/ensemble.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/linear_probe.hpp"
#include "dpe/metrics.hpp"
#include "dpe/model_io.hpp"
#include "dpe/optimizer.hpp"
#include "dpe/prototype.hpp"
#include "dpe/rng.hpp"
#include "dpe/sampling.hpp"
#include "dpe/store_io.hpp"
#include "dpe/sweeps.hpp"
#include "dpe/synthetic.hpp"
