"""Lossy compressor for N-dimensional float arrays with compressed-space ops.

The pipeline converts element precision, blocks the array, applies an
orthonormal transform per block, quantizes coefficients to integer bin
indices against each block's largest coefficient, and prunes unwanted
coefficient positions. A dozen operations (negation, addition, scalar
arithmetic, dot product, mean, covariance, variance, L2 norm, cosine and
structural similarity, approximate Wasserstein distance) run directly on
the compressed form.
"""

from .arrays import (
    BlockedArray,
    DenseArray,
    block,
    convert_precision,
    gradient_array,
    unblock,
)
from .codec import (
    CodecSettings,
    CompressedArray,
    PruningMask,
    bin_coefficients,
    compress,
    decompress,
    prune_and_flatten,
    specified_coefficients,
    unflatten,
)
from .errors import BzcError
from .format import bitstream_layout, deserialize, serialize
from .kinds import FloatKind, IndexKind
from .metrics import (
    compare_against_oracle,
    compression_ratio,
    measure_roundtrip,
    measured_ratio,
    predict_error_bounds,
)
from .ops import (
    SsimParams,
    WassersteinParams,
    add,
    add_scalar,
    approx_wasserstein,
    cosine_similarity,
    covariance,
    dot,
    l2_norm,
    mean,
    mul_scalar,
    negate,
    ssim,
    variance,
)
from .transforms import (
    TransformFamily,
    TransformMatrix,
    forward_transform,
    inverse_transform,
    make_transform,
)

__version__ = "0.1.0"
