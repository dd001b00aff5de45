#pragma once

// Umbrella header for the compactification toolkit.

#include "ckcomp/bell.hpp"
#include "ckcomp/config.hpp"
#include "ckcomp/criteria.hpp"
#include "ckcomp/csvio.hpp"
#include "ckcomp/cycles.hpp"
#include "ckcomp/errors.hpp"
#include "ckcomp/expr.hpp"
#include "ckcomp/field.hpp"
#include "ckcomp/integrate.hpp"
#include "ckcomp/jet.hpp"
#include "ckcomp/linalg.hpp"
#include "ckcomp/probe.hpp"
#include "ckcomp/system.hpp"
#include "ckcomp/transform.hpp"
