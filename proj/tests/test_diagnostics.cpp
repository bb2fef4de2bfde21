#include <doctest.h>

#include "liftms/diagnostics.hpp"
