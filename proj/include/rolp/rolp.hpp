#pragma once

#include "rolp/errors.hpp"
#include "rolp/format.hpp"
#include "rolp/gap_online.hpp"
#include "rolp/generators.hpp"
#include "rolp/harness.hpp"
#include "rolp/instance.hpp"
#include "rolp/instance_io.hpp"
#include "rolp/matching.hpp"
#include "rolp/mechanism.hpp"
#include "rolp/online_primal.hpp"
#include "rolp/rng.hpp"
#include "rolp/simplex.hpp"
