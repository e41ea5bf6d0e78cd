#pragma once

#include "kmdp/core.hpp"
#include "kmdp/measure.hpp"
#include "kmdp/model_io.hpp"
#include "kmdp/policy.hpp"
#include "kmdp/policy_io.hpp"
#include "kmdp/random.hpp"
#include "kmdp/reduction.hpp"
#include "kmdp/sim.hpp"
#include "kmdp/solver.hpp"
#include "kmdp/verify.hpp"

namespace kmdp {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace kmdp
