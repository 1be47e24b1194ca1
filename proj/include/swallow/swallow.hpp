#pragma once

#include "swallow/audio_io.hpp"
#include "swallow/dataset.hpp"
#include "swallow/dim_reduction.hpp"
#include "swallow/evaluation.hpp"
#include "swallow/features.hpp"
#include "swallow/pipeline.hpp"
#include "swallow/random_forest.hpp"
#include "swallow/stats.hpp"
#include "swallow/synth.hpp"
