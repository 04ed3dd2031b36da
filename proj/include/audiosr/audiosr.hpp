#pragma once

#include "audiosr/adam.hpp"
#include "audiosr/autodiff.hpp"
#include "audiosr/bench.hpp"
#include "audiosr/checkpoint.hpp"
#include "audiosr/config.hpp"
#include "audiosr/dataset.hpp"
#include "audiosr/dsp.hpp"
#include "audiosr/error.hpp"
#include "audiosr/inference.hpp"
#include "audiosr/layers.hpp"
#include "audiosr/metrics.hpp"
#include "audiosr/models.hpp"
#include "audiosr/objectives.hpp"
#include "audiosr/params.hpp"
#include "audiosr/spectrogram.hpp"
#include "audiosr/tensor.hpp"
#include "audiosr/training.hpp"
#include "audiosr/wav.hpp"
