#pragma once

#include "levelcurv/errors.hpp"
#include "levelcurv/linalg.hpp"
#include "levelcurv/domain.hpp"
#include "levelcurv/grid.hpp"
#include "levelcurv/jets.hpp"
#include "levelcurv/field_io.hpp"
#include "levelcurv/symfun.hpp"
#include "levelcurv/geometry.hpp"
#include "levelcurv/operators.hpp"
#include "levelcurv/solver.hpp"
#include "levelcurv/structure.hpp"
#include "levelcurv/verify.hpp"
#include "levelcurv/config.hpp"
#include "levelcurv/report.hpp"
#include "levelcurv/cli.hpp"
