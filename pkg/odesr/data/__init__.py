"""Data pipeline: PNG I/O, bicubic degradation, patches, PSNR, datasets."""

from .dataset import Batch, Manifest, ManifestEntry, PatchDataset, load_pairs, manifest_for, ordered_map, stack_batch
from .fixtures import make_fixture_images, write_fixture_set
from .image_io import list_pngs, load_png, save_png
from .metrics import PSNR_CAP, mean_std, psnr
from .patches import ImagePair, crop_to_multiple, extract_patches, make_pair, patch_count, paste_patches
from .resize import bicubic_downsample, bicubic_upsample, cubic_kernel, resize, resize_weights

__all__ = [
    "PSNR_CAP",
    "Batch",
    "ImagePair",
    "Manifest",
    "ManifestEntry",
    "PatchDataset",
    "bicubic_downsample",
    "bicubic_upsample",
    "crop_to_multiple",
    "cubic_kernel",
    "extract_patches",
    "list_pngs",
    "load_pairs",
    "load_png",
    "make_fixture_images",
    "make_pair",
    "manifest_for",
    "mean_std",
    "ordered_map",
    "patch_count",
    "paste_patches",
    "psnr",
    "resize",
    "resize_weights",
    "save_png",
    "stack_batch",
    "write_fixture_set",
]
