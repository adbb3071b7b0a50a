#pragma once

// Everything at once.

#include "blowup/params.hpp"
#include "blowup/integrate.hpp"
#include "blowup/model.hpp"
#include "blowup/phase.hpp"
#include "blowup/shooting.hpp"
#include "blowup/analysis.hpp"
#include "blowup/io.hpp"
#include "blowup/verify.hpp"
