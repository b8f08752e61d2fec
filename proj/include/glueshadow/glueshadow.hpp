#pragma once

#include "glueshadow/errors.hpp"
#include "glueshadow/core.hpp"
#include "glueshadow/maps.hpp"
#include "glueshadow/rng.hpp"
#include "glueshadow/perturbation.hpp"
#include "glueshadow/rate.hpp"
#include "glueshadow/gluing.hpp"
#include "glueshadow/shadowing.hpp"
#include "glueshadow/lemmas.hpp"
