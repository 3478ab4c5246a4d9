#pragma once

#include "rapid/audit.hpp"
#include "rapid/data_io.hpp"
#include "rapid/linalg.hpp"
#include "rapid/problems.hpp"
#include "rapid/prox.hpp"
#include "rapid/random.hpp"
#include "rapid/solver.hpp"
#include "rapid/svm.hpp"
