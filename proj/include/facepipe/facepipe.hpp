#pragma once

// Face recognition pipeline: detection post-processing, five-point alignment,
// f32/int8 CNN micro-inference, embedding gallery, and the benchmarking
// harness that ties them together.

#include "facepipe/align.hpp"
#include "facepipe/config.hpp"
#include "facepipe/detect.hpp"
#include "facepipe/error.hpp"
#include "facepipe/ftm.hpp"
#include "facepipe/image.hpp"
#include "facepipe/image_io.hpp"
#include "facepipe/infer.hpp"
#include "facepipe/model.hpp"
#include "facepipe/perf.hpp"
#include "facepipe/recognize.hpp"
#include "facepipe/synthetic.hpp"
#include "facepipe/tensor.hpp"
