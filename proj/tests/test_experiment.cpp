#include <doctest.h>

#include "liftms/experiment.hpp"
#include "liftms/svg_plot.hpp"
