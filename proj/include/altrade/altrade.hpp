#pragma once

#include "altrade/acquisition.hpp"
#include "altrade/active_loop.hpp"
#include "altrade/benchmarks.hpp"
#include "altrade/data_io.hpp"
#include "altrade/dataset.hpp"
#include "altrade/errors.hpp"
#include "altrade/experiment.hpp"
#include "altrade/gpr.hpp"
#include "altrade/kernels.hpp"
#include "altrade/linalg.hpp"
#include "altrade/tradeoff.hpp"
#include "altrade/types.hpp"
