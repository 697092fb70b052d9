#pragma once

/// Umbrella header: the full pulsed-homodyne simulation, tomography, and
/// detector-metrology toolkit.

#include "homodyne/characterize.hpp"
#include "homodyne/cli.hpp"
#include "homodyne/ddreal.hpp"
#include "homodyne/detector.hpp"
#include "homodyne/errors.hpp"
#include "homodyne/fock.hpp"
#include "homodyne/io.hpp"
#include "homodyne/numerics.hpp"
#include "homodyne/rng.hpp"
#include "homodyne/sampler.hpp"
#include "homodyne/special.hpp"
#include "homodyne/tomography.hpp"
#include "homodyne/wigner.hpp"
