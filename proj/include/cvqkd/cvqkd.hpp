#pragma once

#include "cvqkd/asymptotics.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/fock.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/quadrature.hpp"
#include "cvqkd/sweep.hpp"
