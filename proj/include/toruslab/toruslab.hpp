#pragma once

#include "toruslab/config.hpp"
#include "toruslab/cutoff.hpp"
#include "toruslab/damped.hpp"
#include "toruslab/diagnostics.hpp"
#include "toruslab/error.hpp"
#include "toruslab/hum.hpp"
#include "toruslab/inequalities.hpp"
#include "toruslab/krylov.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/quadrature.hpp"
#include "toruslab/report.hpp"
#include "toruslab/scenario.hpp"
#include "toruslab/tcf1.hpp"
#include "toruslab/torus.hpp"
#include "toruslab/weights.hpp"
