#pragma once

#include "bigue/alignment.hpp"
#include "bigue/analysis.hpp"
#include "bigue/angles.hpp"
#include "bigue/automorphism.hpp"
#include "bigue/diagnostics.hpp"
#include "bigue/embedding.hpp"
#include "bigue/errors.hpp"
#include "bigue/gauge.hpp"
#include "bigue/graph.hpp"
#include "bigue/io.hpp"
#include "bigue/model.hpp"
#include "bigue/rng.hpp"
#include "bigue/sampler.hpp"
#include "bigue/synthetic.hpp"
