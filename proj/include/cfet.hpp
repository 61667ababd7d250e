#pragma once

#include "cfet/bessel.hpp"
#include "cfet/expm.hpp"
#include "cfet/generator.hpp"
#include "cfet/harmonic_balance.hpp"
#include "cfet/liouvillian.hpp"
#include "cfet/models.hpp"
#include "cfet/observables.hpp"
#include "cfet/operators.hpp"
#include "cfet/propagators.hpp"
#include "cfet/spectral.hpp"
#include "cfet/types.hpp"
