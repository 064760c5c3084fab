#pragma once

// Whole library in one include. The command-line front end lives in cli.hpp.

#include "qutrit/core.hpp"
#include "qutrit/crosstalk.hpp"
#include "qutrit/device_config.hpp"
#include "qutrit/noise.hpp"
#include "qutrit/readout.hpp"
#include "qutrit/rotations.hpp"
#include "qutrit/schedule.hpp"
#include "qutrit/scrambling.hpp"
#include "qutrit/serialization.hpp"
#include "qutrit/synthesis.hpp"
#include "qutrit/teleport.hpp"
#include "qutrit/tomography.hpp"
#include "qutrit/transmon.hpp"
