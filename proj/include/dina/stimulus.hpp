#pragma once

#include "dina/types.hpp"

// Set-level stimulus manipulations on S x P image matrices (one image per row).

namespace dina {

/// Affine map of the whole set onto [0, 1]: (x - min) / (max - min) with
/// min and max taken over all images together. A constant set maps to 0.5.
MatrixRf renormalize_set(const MatrixRd& images);

/// PCA whitening across the set: every component with nonzero variance is
/// rescaled to unit variance, then the set is reconstructed and renormalized.
/// Throws DataError when all images are identical.
MatrixRf whiten_images(const MatrixRf& images);

/// Reconstruction from the top-d principal components plus the mean image,
/// renormalized. d beyond the available components keeps them all.
MatrixRf lowdim_images(const MatrixRf& images, int d = 8);

}  // namespace dina
