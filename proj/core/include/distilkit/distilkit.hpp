#pragma once

#include "distilkit/activation.hpp"
#include "distilkit/distillability.hpp"
#include "distilkit/errors.hpp"
#include "distilkit/io.hpp"
#include "distilkit/linalg.hpp"
#include "distilkit/parallel.hpp"
#include "distilkit/states.hpp"
#include "distilkit/symmetry.hpp"
#include "distilkit/tolerances.hpp"
#include "distilkit/tomography.hpp"
#include "distilkit/version.hpp"
