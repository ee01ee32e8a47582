#pragma once

#include "error.hpp"
#include "sym_matrix.hpp"
#include "operator.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "penalty.hpp"
#include "fd_solver.hpp"
#include "interp.hpp"
#include "nelder_mead.hpp"
#include "fb_geometry.hpp"
#include "stratify.hpp"
#include "cone_blowup.hpp"
#include "ufbg_io.hpp"
#include "json_io.hpp"
#include "commands.hpp"
