#pragma once

#include "itermean/axioms.hpp"
#include "itermean/domain.hpp"
#include "itermean/engine.hpp"
#include "itermean/errors.hpp"
#include "itermean/means.hpp"
#include "itermean/oracles.hpp"
#include "itermean/spd.hpp"
