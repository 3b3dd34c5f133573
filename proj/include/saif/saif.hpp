#pragma once

#include "saif/box.hpp"
#include "saif/config.hpp"
#include "saif/edt.hpp"
#include "saif/errors.hpp"
#include "saif/fusion.hpp"
#include "saif/grid.hpp"
#include "saif/harness.hpp"
#include "saif/manifest.hpp"
#include "saif/map_io.hpp"
#include "saif/metrics.hpp"
#include "saif/pipeline.hpp"
#include "saif/prompt_family.hpp"
#include "saif/rng.hpp"
#include "saif/segmenter.hpp"
#include "saif/stability.hpp"
#include "saif/synthetic.hpp"
#include "saif/threshold.hpp"
