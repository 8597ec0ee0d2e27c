#pragma once

#include "hnn/panel.hpp"

namespace hnn {

/// Deterministic synthetic quarterly panel in the FRED-QD layout, used for
/// smoke tests and the bundled example data. A latent activity cycle with a
/// slowly declining pass-through, an expectations process and a commodity
/// process drive a price index (CPI_SYN); observables load on the latents
/// with idiosyncratic noise and carry a mix of transform codes.
RawPanel make_synthetic_panel(std::uint64_t seed, int quarters = 252,
                              Quarter first = Quarter(1959, 1));

}  // namespace hnn
