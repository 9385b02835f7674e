#include "optochaos/model.hpp"

#include <cmath>

namespace optochaos {

ModelParams validate_params(const ModelParams& params) {
    if (!(params.kappa > 0.0))
        throw InvalidParams("kappa must be positive");
    if (!(params.gamma > 0.0))
        throw InvalidParams("gamma must be positive");
    if (!(params.pump >= 0.0))
        throw InvalidParams("pump must be nonnegative");
    if (!(params.sigma >= 0.0))
        throw InvalidParams("sigma must be nonnegative");
    if (!std::isfinite(params.detuning))
        throw InvalidParams("detuning must be finite");
    return params;
}

DerivedCouplings derive_couplings(const ModelParams& params) {
    validate_params(params);
    if (params.sigma == 0.0) {
        if (params.pump > 0.0)
            throw InvalidParams(
                "sigma = 0 with pump > 0: couplings are undefined in the "
                "classical limit");
        return DerivedCouplings{0.0, 0.0};
    }
    const double g0 = params.sigma * params.kappa;
    const double alphaL = std::sqrt(params.pump / 8.0) / g0;
    return DerivedCouplings{g0, alphaL};
}

CanonicalCoords canonical_coords(Complex beta) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const Complex bc = std::conj(beta);
    const double x = ((beta + bc) * inv_sqrt2).real();
    const double p = (Complex(0.0, -1.0) * (bc - beta) * inv_sqrt2).real();
    return CanonicalCoords{x, p};
}

}  // namespace optochaos
