#pragma once

#include "attack.hpp"
#include "background.hpp"
#include "challenge.hpp"
#include "curve.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "random.hpp"
#include "raster.hpp"
#include "render.hpp"
#include "service.hpp"
#include "stats.hpp"
#include "trace_io.hpp"
#include "verify.hpp"
