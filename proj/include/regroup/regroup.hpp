#pragma once

#include "regroup/dataset.hpp"
#include "regroup/error.hpp"
#include "regroup/experiment.hpp"
#include "regroup/io.hpp"
#include "regroup/kmeans.hpp"
#include "regroup/losses.hpp"
#include "regroup/metrics.hpp"
#include "regroup/numeric.hpp"
#include "regroup/random.hpp"
#include "regroup/regrouping.hpp"
#include "regroup/resampling.hpp"
#include "regroup/trainer.hpp"
