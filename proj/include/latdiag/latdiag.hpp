#pragma once

// Umbrella header for the full toolkit.

#include "latdiag/disentangle.hpp"
#include "latdiag/error.hpp"
#include "latdiag/geometry.hpp"
#include "latdiag/io.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/mi.hpp"
#include "latdiag/mlp.hpp"
#include "latdiag/probes.hpp"
#include "latdiag/protocol.hpp"
#include "latdiag/report.hpp"
#include "latdiag/rng.hpp"
#include "latdiag/special.hpp"
#include "latdiag/stats.hpp"
#include "latdiag/synth.hpp"
#include "latdiag/version.hpp"
