#pragma once

#include "impacteq/config.hpp"
#include "impacteq/equilibrium.hpp"
#include "impacteq/errors.hpp"
#include "impacteq/exchange.hpp"
#include "impacteq/io.hpp"
#include "impacteq/model.hpp"
#include "impacteq/numerics.hpp"
#include "impacteq/oracle.hpp"
#include "impacteq/simulate.hpp"
