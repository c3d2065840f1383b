#pragma once

#include "mcse/core.hpp"
#include "mcse/batch.hpp"
#include "mcse/spectral.hpp"
#include "mcse/initseq.hpp"
#include "mcse/estimate.hpp"
#include "mcse/diagnostics.hpp"
#include "mcse/quantiles.hpp"
#include "mcse/experiments.hpp"
