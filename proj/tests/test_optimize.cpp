#include <doctest.h>

#include "liftms/optimize.hpp"
