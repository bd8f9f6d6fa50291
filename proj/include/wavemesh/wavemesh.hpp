#pragma once

// Umbrella header for the waveMesh estimator library.

#include "wavemesh/additive.hpp"
#include "wavemesh/csv.hpp"
#include "wavemesh/errors.hpp"
#include "wavemesh/interp.hpp"
#include "wavemesh/model_io.hpp"
#include "wavemesh/penalty.hpp"
#include "wavemesh/select.hpp"
#include "wavemesh/simbench.hpp"
#include "wavemesh/solver.hpp"
#include "wavemesh/wavelet.hpp"
