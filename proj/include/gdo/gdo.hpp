#pragma once

#include "gdo/builder.hpp"
#include "gdo/coverage.hpp"
#include "gdo/dedup.hpp"
#include "gdo/descriptors.hpp"
#include "gdo/efficiency.hpp"
#include "gdo/error.hpp"
#include "gdo/flow.hpp"
#include "gdo/hash.hpp"
#include "gdo/manifest.hpp"
#include "gdo/normalize.hpp"
#include "gdo/parallel.hpp"
#include "gdo/pipeline.hpp"
#include "gdo/pool_io.hpp"
#include "gdo/probe.hpp"
#include "gdo/profile.hpp"
#include "gdo/report.hpp"
#include "gdo/reservoir.hpp"
#include "gdo/sample.hpp"
#include "gdo/scorer.hpp"
#include "gdo/strata.hpp"
#include "gdo/text.hpp"
#include "gdo/verify.hpp"
