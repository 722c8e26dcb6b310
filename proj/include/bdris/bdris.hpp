#pragma once

#include "bdris/channel.hpp"
#include "bdris/designs.hpp"
#include "bdris/error.hpp"
#include "bdris/harness/config.hpp"
#include "bdris/harness/matrix_io.hpp"
#include "bdris/harness/records.hpp"
#include "bdris/harness/runner.hpp"
#include "bdris/linalg.hpp"
#include "bdris/metrics.hpp"
#include "bdris/qstem.hpp"
#include "bdris/rng.hpp"
