"""Grayscale image corpora and 2-D patch handling."""

import os
from collections import namedtuple
from typing import List, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from dictionary.coupling import TrainingSet
from metrics.quality import psnr
from recovery.omp import sparse_code_stack
from recovery.operator import KronOperator
from tensor.ops import multi_mode_product
from util.detail import LOGGER
from util.errors import InvalidArgument, require

PGM_EXTENSIONS = ('.pgm',)
PIXEL_MAX = 255.0

ImageReconstruction = namedtuple('ImageReconstruction', ('image', 'reference', 'psnr'))


def read_pgm(path: str) -> np.ndarray:
    """
    Reads an 8-bit grayscale PGM (Netpbm) image and scales it to [0, 1].

    :raises InvalidArgument: unreadable file, another file format, or any mode other than 8-bit grayscale
    """
    try:
        with Image.open(path) as img:
            if img.format != 'PPM':
                raise InvalidArgument(f"{path}: expected a PGM file, got format {img.format}")
            img.load()
            if img.mode != 'L':
                raise InvalidArgument(f"{path}: expected 8-bit grayscale, got mode {img.mode}")
            return np.asarray(img, dtype=np.float64) / PIXEL_MAX
    except (OSError, UnidentifiedImageError) as e:
        raise InvalidArgument(f"{path}: cannot read image ({e})") from e


def write_pgm(path: str, image) -> None:
    """Writes a [0, 1] image as binary PGM, values outside the range are clipped."""
    image = np.asarray(image, dtype=np.float64)
    require(image.ndim == 2, f"Image must be 2-D, got shape {image.shape}")
    pixels = np.round(np.clip(image, 0, 1) * PIXEL_MAX).astype(np.uint8)
    Image.fromarray(pixels, mode='L').save(path, format='PPM')


def load_images(path: str) -> List[np.ndarray]:
    """
    Loads a single PGM file or every PGM file of a directory (sorted by name). Files that cannot be used are skipped
    with a warning.

    :raises InvalidArgument: no usable image
    """
    if os.path.isdir(path):
        files = sorted(os.path.join(path, f) for f in os.listdir(path) if f.lower().endswith(PGM_EXTENSIONS))
    else:
        files = [path]

    images = []
    for file in files:
        try:
            images.append(read_pgm(file))
        except InvalidArgument as e:
            LOGGER.warning(f"Skipping image: {e}")

    if not images:
        raise InvalidArgument(f"No usable 8-bit grayscale PGM images in {path}")
    LOGGER.info(f"Loaded {len(images)} of {len(files)} images from {path}")
    return images


def synthetic_images(count: int, size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Piecewise-smooth test images in [0, 1]: a few low-frequency cosines plus two sharp straight edges."""
    require(count >= 1 and size >= 1, f"Need count >= 1 and size >= 1, got {count}, {size}")
    grid = np.arange(size) / size
    rows, cols = np.meshgrid(grid, grid, indexing='ij')

    images = []
    for _ in range(count):
        image = np.zeros((size, size))
        for _ in range(3):
            fy, fx = rng.uniform(0, 3, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            image += rng.uniform(0.2, 1) * np.cos(2 * np.pi * (fy * rows + fx * cols) + phase)
        for _ in range(2):
            angle = rng.uniform(0, np.pi)
            offset = rng.uniform(-0.3, 0.3)
            side = np.cos(angle) * (rows - 0.5) + np.sin(angle) * (cols - 0.5) > offset
            image += rng.uniform(-1.5, 1.5) * side

        span = image.max() - image.min()
        images.append((image - image.min()) / span if span > 0 else np.full_like(image, 0.5))
    return images


def extract_patches(images: Sequence[np.ndarray], patch: int, count: int, rng: np.random.Generator) -> TrainingSet:
    """
    Training set of count randomly placed patch x patch blocks per image. Images smaller than a patch are skipped.

    :return: TrainingSet with signals of shape (patch, patch, count * usable images)
    """
    require(patch >= 1 and count >= 1, f"Need patch >= 1 and count >= 1, got {patch}, {count}")
    blocks = []
    for image in images:
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 2 or min(image.shape) < patch:
            LOGGER.warning(f"Skipping image of shape {image.shape} for {patch}x{patch} patches")
            continue
        tops = rng.integers(0, image.shape[0] - patch + 1, size=count)
        lefts = rng.integers(0, image.shape[1] - patch + 1, size=count)
        blocks.extend(image[top:top + patch, left:left + patch] for top, left in zip(tops, lefts))

    if not blocks:
        raise InvalidArgument(f"No image is large enough for {patch}x{patch} patches")
    return TrainingSet(np.stack(blocks, axis=-1))


def tile_image(image, patch: int) -> np.ndarray:
    """
    Non-overlapping tiling, partial border tiles are discarded. Tiles are ordered down the rows first.

    :return: Stack of shape (patch, patch, tiles)
    """
    image = np.asarray(image, dtype=np.float64)
    require(image.ndim == 2, f"Image must be 2-D, got shape {image.shape}")
    rows, cols = image.shape[0] // patch, image.shape[1] // patch
    if rows == 0 or cols == 0:
        raise InvalidArgument(f"Image of shape {image.shape} is smaller than a {patch}x{patch} patch")

    cropped = image[:rows * patch, :cols * patch]
    blocks = cropped.reshape(rows, patch, cols, patch).transpose(1, 3, 0, 2)
    return np.reshape(blocks, (patch, patch, rows * cols), order='F')


def assemble_patches(stack, shape: Tuple[int, int]) -> np.ndarray:
    """Inverse of tile_image, shape is the original image shape. Returns the cropped image."""
    stack = np.asarray(stack, dtype=np.float64)
    require(stack.ndim == 3 and stack.shape[0] == stack.shape[1], f"Expected a square patch stack, got {stack.shape}")
    patch = stack.shape[0]
    rows, cols = shape[0] // patch, shape[1] // patch
    require(rows * cols == stack.shape[2], f"{stack.shape[2]} patches do not tile an image of shape {shape}")

    blocks = np.reshape(stack, (patch, patch, rows, cols), order='F').transpose(2, 0, 3, 1)
    return blocks.reshape(rows * patch, cols * patch)


def overcomplete_dct(n: int, nhat: int) -> np.ndarray:
    """
    N x N^ overcomplete DCT: atom j samples cos(pi (i + 1/2) j / N^), every atom but the constant one has its mean
    removed, and all columns have unit norm.
    """
    require(1 <= n <= nhat, f"Need 1 <= N <= N^, got N={n}, N^={nhat}")
    if n == 1:
        return np.ones((1, nhat))
    d = np.cos(np.pi * np.outer(np.arange(n) + 0.5, np.arange(nhat)) / nhat)
    d[:, 1:] -= d[:, 1:].mean(axis=0)
    return d / np.linalg.norm(d, axis=0)


def reconstruct_patches(stack, phis: Sequence[np.ndarray], psis: Sequence[np.ndarray], k: int,
                        noise_var: float = 0.0, rng: np.random.Generator = None) -> np.ndarray:
    """Measures every patch with the phis, codes it by Kronecker-OMP against Phi_i Psi_i and maps back through psis."""
    y = multi_mode_product(stack, phis)
    if noise_var > 0:
        require(rng is not None, "A random generator is needed for noisy measurements")
        y = y + np.sqrt(noise_var) * rng.standard_normal(y.shape)
    op = KronOperator([phi @ psi for phi, psi in zip(phis, psis)])
    codes = sparse_code_stack(op, y, k).codes
    return multi_mode_product(codes, psis)


def reconstruct_image(image, phis: Sequence[np.ndarray], psis: Sequence[np.ndarray], k: int,
                      noise_var: float = 0.0, rng: np.random.Generator = None) -> ImageReconstruction:
    """Tiles, measures, recovers and reassembles an image. PSNR is against the cropped original."""
    require(len(phis) == 2 and len(psis) == 2, "Images need exactly two sensing matrices and dictionaries")
    patch = psis[0].shape[0]
    require(psis[1].shape[0] == patch, f"Dictionaries {psis[0].shape}, {psis[1].shape} are not for square patches")

    image = np.asarray(image, dtype=np.float64)
    stack = tile_image(image, patch)
    recon = assemble_patches(reconstruct_patches(stack, phis, psis, k, noise_var, rng), image.shape)
    reference = assemble_patches(stack, image.shape)
    return ImageReconstruction(recon, reference, psnr(reference, recon))
