#pragma once

#include "coopsched/belief.hpp"
#include "coopsched/bounds.hpp"
#include "coopsched/config.hpp"
#include "coopsched/fusion.hpp"
#include "coopsched/harness.hpp"
#include "coopsched/kinematics.hpp"
#include "coopsched/linalg.hpp"
#include "coopsched/rng.hpp"
#include "coopsched/scheduling.hpp"
#include "coopsched/sensing.hpp"
#include "coopsched/trace_io.hpp"
#include "coopsched/utias.hpp"
