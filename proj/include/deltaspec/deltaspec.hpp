#pragma once

#include "deltaspec/bounds.hpp"
#include "deltaspec/measures.hpp"
#include "deltaspec/pointsolver.hpp"
#include "deltaspec/version.hpp"
