"""Exports for inspection: weight mosaics, grayscale images, history files.

Images are 8-bit grayscale written as binary PGM (P5), chosen over
compressed formats so identical inputs always produce identical bytes.
Training histories export as CSV; ``plot_history`` additionally renders
the metric curves to an image file via matplotlib for quick visual review.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError
from .math import scale_unitary
from .persistence import atomic_write_bytes


@dataclass
class GrayImage:
    """Row-major 8-bit grayscale raster."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"{len(self.pixels)} pixels for {self.width}x{self.height} image"
            )


def _quantize(t) -> np.ndarray:
    # Min-max scale then round to 8 bits; constant input comes out black.
    return np.rint(255.0 * scale_unitary(t)).astype(np.uint8)


def weight_mosaic(W, tile_shape, grid, pad: int = 1) -> GrayImage:
    """Tile each hidden unit's incoming weights into one image.

    Column j of W is reshaped to ``tile_shape``, min-max scaled on its own
    (so each filter shows its full contrast), quantized, and placed
    left-to-right, top-to-bottom on a ``grid`` = (grid_rows, grid_cols)
    canvas with ``pad`` black pixels around and between tiles. Grid cells
    beyond the number of hidden units stay black.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError("W must be a matrix")
    m, n = W.shape
    rows, cols = (int(x) for x in tile_shape)
    grid_rows, grid_cols = (int(x) for x in grid)
    if rows * cols != m:
        raise ValueError(f"tile shape {tile_shape} does not cover {m} weights")
    if grid_rows * grid_cols < n:
        raise ValueError(f"grid {grid} cannot hold {n} tiles")
    if pad < 0:
        raise ValueError("pad must be >= 0")
    height = grid_rows * rows + (grid_rows + 1) * pad
    width = grid_cols * cols + (grid_cols + 1) * pad
    canvas = np.zeros((height, width), dtype=np.uint8)
    for j in range(n):
        tile = _quantize(W[:, j].reshape(rows, cols))
        top = pad + (j // grid_cols) * (rows + pad)
        left = pad + (j % grid_cols) * (cols + pad)
        canvas[top:top + rows, left:left + cols] = tile
    return GrayImage(width, height, canvas.tobytes())


def tensor_to_image(t, shape) -> GrayImage:
    """Min-max scale and quantize any tensor into a grayscale image."""
    t = np.asarray(t, dtype=np.float64)
    rows, cols = (int(x) for x in shape)
    if t.size != rows * cols:
        raise ValueError(f"{t.size} values do not fill a {rows}x{cols} image")
    return GrayImage(cols, rows, _quantize(t.reshape(rows, cols)).tobytes())


def write_pgm(img: GrayImage, path) -> None:
    """Write binary PGM (P5), maxval 255; byte-deterministic."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + img.pixels)


def read_pgm(path) -> GrayImage:
    """Read back a binary PGM written by write_pgm."""
    with open(path, "rb") as f:
        data = f.read()
    fields = data.split(b"\n", 3)
    if len(fields) != 4 or fields[0] != b"P5" or fields[2] != b"255":
        raise ValueError(f"{path}: not a P5/255 PGM")
    width, height = (int(x) for x in fields[1].split())
    return GrayImage(width, height, fields[3])


def export_history_csv(history, path) -> None:
    """Write per-epoch records as CSV: epoch,mse,pl,wall_time_ms.

    Floats carry 9 significant digits; lines end with LF.
    """
    if not history.epochs:
        raise InvalidStateError("history has no epochs to export")
    lines = ["epoch,mse,pl,wall_time_ms"]
    for r in history.epochs:
        lines.append(f"{r.epoch_index},{r.mse:.9g},{r.pl:.9g},{r.wall_time_ms}")
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def plot_history(history, path, title: str = "training history") -> None:
    """Render metric curves (and fine-tune curves if present) to a file."""
    if not history.epochs and not history.fine_tune_epochs:
        raise InvalidStateError("history has no records to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = (1 if history.epochs else 0) + (1 if history.fine_tune_epochs else 0)
    fig, axes = plt.subplots(1, panels, figsize=(6.0 * panels, 4.0), squeeze=False)
    col = 0
    if history.epochs:
        ax = axes[0][col]
        epochs = [r.epoch_index for r in history.epochs]
        ax.plot(epochs, [r.mse for r in history.epochs], marker="o", label="mse")
        ax.set_xlabel("epoch")
        ax.set_ylabel("reconstruction mse")
        pls = [r.pl for r in history.epochs]
        if not all(np.isnan(pls)):
            twin = ax.twinx()
            twin.plot(epochs, pls, marker="s", color="tab:orange",
                      label="pseudo-likelihood")
            twin.set_ylabel("pseudo-likelihood")
        ax.set_title(title)
        col += 1
    if history.fine_tune_epochs:
        ax = axes[0][col]
        epochs = [r.epoch_index for r in history.fine_tune_epochs]
        ax.plot(epochs, [r.cross_entropy for r in history.fine_tune_epochs],
                marker="o", label="cross-entropy")
        ax.plot(epochs, [r.accuracy for r in history.fine_tune_epochs],
                marker="s", label="accuracy")
        ax.set_xlabel("epoch")
        ax.legend()
        ax.set_title("fine-tuning")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
