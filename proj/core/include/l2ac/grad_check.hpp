#pragma once

#include <functional>

#include "l2ac/param_store.hpp"

namespace l2ac {

// Compares the analytic gradient against central finite differences,
// coordinate by coordinate, over every parameter in the store.
//
// `f` must be deterministic; it evaluates the scalar loss AND populates the
// analytic gradients of `store` as a side effect (the finite-difference
// probes reuse it and simply ignore the gradients it writes).
//
// Returns max over coordinates of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double grad_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h);

} // namespace l2ac
