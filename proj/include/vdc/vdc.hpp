#ifndef VDC_VDC_HPP
#define VDC_VDC_HPP

#include "analysis.hpp"
#include "asymptotics.hpp"
#include "common.hpp"
#include "counting.hpp"
#include "ffield.hpp"
#include "geometry.hpp"
#include "mpoly.hpp"
#include "pipeline.hpp"
#include "weight.hpp"

#endif
