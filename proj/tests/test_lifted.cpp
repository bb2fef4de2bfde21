#include <doctest.h>

#include "liftms/lifted.hpp"
