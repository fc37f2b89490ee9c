"""Semi-supervised binary segmentation: numeric primitives and corpus tools.

The heavy lifting (training, inference) lives in the `semigda` CLI; this
package exposes the building blocks for analysis and plotting.
"""

from ._semigda import (
    __version__,
    convert_mask,
    dice_loss,
    dice_score,
    generate_corpus,
    hd95,
    iou_score,
    lambda_schedule,
    revert_mask,
    soft_foreground,
)

__all__ = [
    "__version__",
    "convert_mask",
    "revert_mask",
    "soft_foreground",
    "dice_score",
    "iou_score",
    "hd95",
    "dice_loss",
    "lambda_schedule",
    "generate_corpus",
]
