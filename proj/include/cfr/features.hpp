#pragma once

#include "cfr/dtmc.hpp"
#include "cfr/grid.hpp"

namespace cfr {

/// The three real-valued input channels per grid node: real and imaginary
/// parts of the masked CFR plus the binary mask. Masked cells carry
/// Re = Im = 0 and M = 1.
struct FeatureGrid {
    RealGrid re;    // Re(H_m)
    RealGrid im;    // Im(H_m)
    RealGrid mask;  // M

    int rows() const { return re.rows; }
    int cols() const { return re.cols; }
};

inline FeatureGrid make_features(const ComplexGrid& masked_cfr, const InterferenceMask& mask) {
    require(masked_cfr.rows == mask.rows && masked_cfr.cols == mask.cols,
            "make_features: grid/mask shape mismatch");
    FeatureGrid f;
    f.re = RealGrid(masked_cfr.rows, masked_cfr.cols);
    f.im = RealGrid(masked_cfr.rows, masked_cfr.cols);
    f.mask = RealGrid(masked_cfr.rows, masked_cfr.cols);
    for (std::size_t i = 0; i < masked_cfr.data.size(); ++i) {
        if (mask.grid[i]) {
            f.mask.data[i] = 1.0;
        } else {
            f.re.data[i] = masked_cfr.data[i].real();
            f.im.data[i] = masked_cfr.data[i].imag();
        }
    }
    return f;
}

}  // namespace cfr
