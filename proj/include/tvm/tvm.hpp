#pragma once

#include "model.hpp"
#include "algebra.hpp"
#include "dense.hpp"
#include "krylov.hpp"
#include "chain.hpp"
#include "bethe.hpp"
#include "match.hpp"
#include "continuum.hpp"
#include "toda.hpp"
#include "io.hpp"

namespace tvm {
inline constexpr const char* version = "0.1.0";
}
