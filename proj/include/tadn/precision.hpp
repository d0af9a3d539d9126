#pragma once

// The network scalar is a build option. Each precision lives in its own
// inline namespace so that both builds can be linked into one program.
#if defined(TADN_DOUBLE_PRECISION)
#define TADN_PRECISION_NS f64
#else
#define TADN_PRECISION_NS f32
#endif

#define TADN_NAMESPACE_BEGIN \
  namespace tadn {           \
  inline namespace TADN_PRECISION_NS {
#define TADN_NAMESPACE_END \
  }                        \
  }

TADN_NAMESPACE_BEGIN

#if defined(TADN_DOUBLE_PRECISION)
using Real = double;
#else
using Real = float;
#endif

TADN_NAMESPACE_END
