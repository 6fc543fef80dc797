"""Mesh-based rectangling of stitched images with irregular boundaries.

Images are float64 arrays of shape (H, W) or (H, W, C) with values in
[0, 1]; masks are (H, W); meshes and motions are (rows, cols, 2) arrays of
(x, y) pixel coordinates.
"""

from ._core import (
    InvalidArgument,
    IoError,
    NumericalError,
    energy,
    load_mask_png,
    load_png,
    procedural_image,
    psnr,
    rectangle,
    rigid_mesh,
    save_png,
    ssim,
    synthesize,
    warp_mask_to_rigid,
    warp_to_rigid,
)

__all__ = [
    "InvalidArgument",
    "IoError",
    "NumericalError",
    "energy",
    "load_mask_png",
    "load_png",
    "procedural_image",
    "psnr",
    "rectangle",
    "rigid_mesh",
    "save_png",
    "ssim",
    "synthesize",
    "warp_mask_to_rigid",
    "warp_to_rigid",
]
