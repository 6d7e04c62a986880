#pragma once

#include "cubic/errors.hpp"
#include "cubic/fock.hpp"
#include "cubic/states.hpp"
#include "cubic/gaussian.hpp"
#include "cubic/measurement.hpp"
#include "cubic/tomography.hpp"
#include "cubic/analysis.hpp"
#include "cubic/pipeline.hpp"
#include "cubic/io.hpp"
