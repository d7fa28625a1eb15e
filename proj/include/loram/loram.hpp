#pragma once

#include "loram/dense.hpp"
#include "loram/errors.hpp"
#include "loram/expm.hpp"
#include "loram/graphgen.hpp"
#include "loram/io.hpp"
#include "loram/kernel.hpp"
#include "loram/metrics.hpp"
#include "loram/solver.hpp"
#include "loram/sparse.hpp"
#include "loram/topo.hpp"
