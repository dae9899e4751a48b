#pragma once

// Umbrella header.

#include "fracheat/errors.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/specfun.hpp"
#include "fracheat/core.hpp"
#include "fracheat/hankel.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/kernel.hpp"
#include "fracheat/fields.hpp"
#include "fracheat/asymptotics.hpp"
#include "fracheat/io.hpp"
