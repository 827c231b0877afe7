#include "l2ac/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "l2ac/errors.hpp"

namespace l2ac {

double grad_check(const std::function<double(ParamStore&)>& f, ParamStore& store, double h) {
    if (h <= 0.0) throw Error("grad_check: h must be positive");

    store.zero_grads();
    const double base_loss = f(store);
    if (!std::isfinite(base_loss)) {
        throw NumericError("grad_check: loss is not finite");
    }

    // Snapshot the analytic gradients before the probes overwrite them.
    std::map<std::string, Vec> analytic;
    for (const auto& name : store.names()) {
        analytic[name] = store.at(name).grad;
    }

    double max_rel = 0.0;
    for (const auto& name : store.names()) {
        Tensor& t = store.at(name);
        for (size_t i = 0; i < t.data.size(); ++i) {
            const double saved = t.data[i];

            t.data[i] = saved + h;
            store.zero_grads();
            const double loss_plus = f(store);

            t.data[i] = saved - h;
            store.zero_grads();
            const double loss_minus = f(store);

            t.data[i] = saved;

            if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
                throw NumericError("grad_check: perturbed loss is not finite at '" + name + "'");
            }

            const double numeric = (loss_plus - loss_minus) / (2.0 * h);
            const double a = analytic.at(name)[i];
            const double denom = std::max(1e-8, std::abs(a) + std::abs(numeric));
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }

    // Leave the store how a single analytic evaluation would.
    store.zero_grads();
    f(store);
    return max_rel;
}

} // namespace l2ac
