#pragma once

#include "fformpp/decompose.hpp"
#include "fformpp/diagnostics.hpp"
#include "fformpp/ebmsr.hpp"
#include "fformpp/error.hpp"
#include "fformpp/features.hpp"
#include "fformpp/gratis.hpp"
#include "fformpp/parallel.hpp"
#include "fformpp/pipeline.hpp"
#include "fformpp/pool.hpp"
#include "fformpp/rng.hpp"
#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"
#include "fformpp/stats.hpp"
