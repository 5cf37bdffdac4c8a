#pragma once

#include "errors.hpp"
#include "matrix_kernel.hpp"
#include "schmidt.hpp"
#include "mpdo.hpp"
#include "cone.hpp"
#include "separator.hpp"
#include "applications.hpp"
#include "state_file.hpp"
