#pragma once

#include "weyl/asymptotics.hpp"
#include "weyl/common.hpp"
#include "weyl/dirac.hpp"
#include "weyl/errors.hpp"
#include "weyl/flow.hpp"
#include "weyl/frame.hpp"
#include "weyl/linalg.hpp"
#include "weyl/mollifier.hpp"
#include "weyl/operator_spec.hpp"
#include "weyl/parallel.hpp"
#include "weyl/quadrature.hpp"
#include "weyl/spectrum.hpp"
#include "weyl/symbol.hpp"
#include "weyl/trigpoly.hpp"
