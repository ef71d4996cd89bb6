"""Log-polar vote-field voting engine.

Builds vote fields, aggregates evidence tensors into object presence maps
through interchangeable backends, decodes presence peaks into detections,
and inverts the voting to attribute detections back to their voters.
"""

__version__ = "0.1.0"

from .attribution import (
    VoteRecord,
    attribute,
    class_interactions,
    render_heatmap,
    vote_map,
)
from .decode import AuxMaps, Detection, decode_all, decode_detections, extract_peaks
from .errors import (
    BadMagic,
    EmptySelection,
    ImageSizeMismatch,
    InvalidSpec,
    NotAPermutation,
    OutOfBounds,
    ShapeMismatch,
    TensorFormatError,
    TruncatedFile,
    UnknownBackend,
    UnsupportedDtype,
)
from .fields import (
    KernelBank,
    VoteField,
    VoteFieldSpec,
    build_temporal_field,
    build_vote_field,
    mask_regions,
    materialize_kernels,
    remap_field,
)
from .tensorio import load_labels, read_tensor, remap_regions, write_tensor
from .voting import (
    BACKENDS,
    ScalableMixWeights,
    feature_diff,
    vote,
    vote_all_classes,
    vote_gather,
    vote_kernelbank,
    vote_scalable,
    vote_scatter,
    vote_sparse,
    vote_spatiotemporal,
)

__all__ = [
    "__version__",
    "AuxMaps",
    "BACKENDS",
    "BadMagic",
    "Detection",
    "EmptySelection",
    "ImageSizeMismatch",
    "InvalidSpec",
    "KernelBank",
    "NotAPermutation",
    "OutOfBounds",
    "ScalableMixWeights",
    "ShapeMismatch",
    "TensorFormatError",
    "TruncatedFile",
    "UnknownBackend",
    "UnsupportedDtype",
    "VoteField",
    "VoteFieldSpec",
    "VoteRecord",
    "attribute",
    "build_temporal_field",
    "build_vote_field",
    "class_interactions",
    "decode_all",
    "decode_detections",
    "extract_peaks",
    "feature_diff",
    "load_labels",
    "mask_regions",
    "materialize_kernels",
    "read_tensor",
    "remap_field",
    "remap_regions",
    "render_heatmap",
    "vote",
    "vote_all_classes",
    "vote_gather",
    "vote_kernelbank",
    "vote_map",
    "vote_scalable",
    "vote_scatter",
    "vote_sparse",
    "vote_spatiotemporal",
    "write_tensor",
]
