#pragma once

#include "softdtw/backward.hpp"
#include "softdtw/barycenter.hpp"
#include "softdtw/bench.hpp"
#include "softdtw/cost.hpp"
#include "softdtw/datasets.hpp"
#include "softdtw/forward.hpp"
#include "softdtw/gradcheck.hpp"
#include "softdtw/io.hpp"
#include "softdtw/oracle.hpp"
#include "softdtw/softmin.hpp"
#include "softdtw/types.hpp"
#include "softdtw/wavefront.hpp"
