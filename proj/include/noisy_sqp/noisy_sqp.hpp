#pragma once

#include "noisy_sqp/config.hpp"
#include "noisy_sqp/diagnostics.hpp"
#include "noisy_sqp/harness.hpp"
#include "noisy_sqp/linear_kernels.hpp"
#include "noisy_sqp/problem.hpp"
#include "noisy_sqp/report.hpp"
#include "noisy_sqp/solver.hpp"
#include "noisy_sqp/test_problems.hpp"
