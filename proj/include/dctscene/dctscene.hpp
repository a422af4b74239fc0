#pragma once

// Everything except the libjpeg-backed encoder and synthetic generator
// (jpeg_encoder.hpp, synthetic.hpp), which need libjpeg at link time.

#include "dctscene/blobs.hpp"
#include "dctscene/classifier.hpp"
#include "dctscene/config.hpp"
#include "dctscene/corpus_io.hpp"
#include "dctscene/decision.hpp"
#include "dctscene/evaluation.hpp"
#include "dctscene/features.hpp"
#include "dctscene/grid.hpp"
#include "dctscene/jpeg_decoder.hpp"
#include "dctscene/mjpeg_stream.hpp"
#include "dctscene/pgm.hpp"
#include "dctscene/pipeline.hpp"
#include "dctscene/roc.hpp"
#include "dctscene/scene_model.hpp"
#include "dctscene/training.hpp"
