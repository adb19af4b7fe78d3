#pragma once

#include "tamsdld/error.hpp"
#include "tamsdld/models.hpp"
#include "tamsdld/toeplitz_eigen.hpp"
#include "tamsdld/special.hpp"
#include "tamsdld/gchi2.hpp"
#include "tamsdld/bounds.hpp"
#include "tamsdld/random.hpp"
#include "tamsdld/simulate.hpp"
#include "tamsdld/commands.hpp"
