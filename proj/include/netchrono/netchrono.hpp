#pragma once

#include "error.hpp"
#include "netio.hpp"
#include "features.hpp"
#include "cpnn.hpp"
#include "ordering.hpp"
#include "autodiff.hpp"
#include "topoevodiff.hpp"
#include "synthgen.hpp"
#include "experiments.hpp"
