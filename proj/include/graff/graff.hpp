#pragma once

#include "graff/config.hpp"
#include "graff/cost.hpp"
#include "graff/curve.hpp"
#include "graff/errors.hpp"
#include "graff/io.hpp"
#include "graff/manifold.hpp"
#include "graff/refine.hpp"
#include "graff/rotation_search.hpp"
#include "graff/solver.hpp"
#include "graff/synthetic.hpp"
#include "graff/translation_search.hpp"
