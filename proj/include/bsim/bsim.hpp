#pragma once

#include "bsim/anatomy.hpp"
#include "bsim/calibration.hpp"
#include "bsim/curvature.hpp"
#include "bsim/energy.hpp"
#include "bsim/error.hpp"
#include "bsim/geometry.hpp"
#include "bsim/io.hpp"
#include "bsim/maintenance.hpp"
#include "bsim/mesh.hpp"
#include "bsim/pipeline.hpp"
#include "bsim/primitives.hpp"
#include "bsim/section.hpp"
#include "bsim/solver.hpp"
#include "bsim/tmr.hpp"
