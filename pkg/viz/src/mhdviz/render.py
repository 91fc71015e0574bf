"""Contour and schlieren rendering of snapshot fields.

Schlieren images show exp(-alpha |grad f| / max |grad f|) in grayscale,
with the gradient taken by central differences (one-sided at boundaries),
the conventional shock-visualization transform.  Output is deterministic
for fixed inputs (fixed figure geometry, no timestamps in metadata).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import Snapshot

__all__ = ["gradient_magnitude", "render_contour", "render_schlieren"]

_SAVEFIG_KW = dict(dpi=150, metadata={"Software": "mhdviz"})


def _scalar_field(snapshot: Snapshot, name: str) -> np.ndarray:
    data = snapshot.get(name)
    if data.ndim != 2:
        raise ValueError(f"field {name!r} is not a 2D scalar field")
    return data


def gradient_magnitude(f: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """|grad f| via central differences, one-sided at the boundary rows."""
    gx = np.empty_like(f)
    gy = np.empty_like(f)
    gx[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2.0 * dx)
    gx[0, :] = (f[1, :] - f[0, :]) / dx
    gx[-1, :] = (f[-1, :] - f[-2, :]) / dx
    gy[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * dy)
    gy[:, 0] = (f[:, 1] - f[:, 0]) / dy
    gy[:, -1] = (f[:, -1] - f[:, -2]) / dy
    return np.sqrt(gx**2 + gy**2)


def render_contour(snapshot: Snapshot, field: str, out_path, levels: int = 30,
                   cmap: str = "viridis") -> None:
    """Filled contour plot of one scalar field."""
    data = _scalar_field(snapshot, field)
    x0, x1, y0, y1 = snapshot.extent
    nx, ny = snapshot.shape
    xc = np.linspace(x0 + snapshot.spacing[0] / 2, x1 - snapshot.spacing[0] / 2, nx)
    yc = np.linspace(y0 + snapshot.spacing[1] / 2, y1 - snapshot.spacing[1] / 2, ny)
    fig, ax = plt.subplots(figsize=(6.4, 6.4 * (y1 - y0) / (x1 - x0)))
    if np.ptp(data) == 0.0:
        # Degenerate constant field: a flat image instead of contour levels.
        ax.imshow(data.T, origin="lower", extent=(x0, x1, y0, y1), cmap=cmap)
    else:
        ax.contourf(xc, yc, data.T, levels=levels, cmap=cmap)
        ax.contour(xc, yc, data.T, levels=levels, colors="k", linewidths=0.3)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(field)
    ax.set_aspect("equal")
    fig.savefig(out_path, **_SAVEFIG_KW)
    plt.close(fig)


def render_schlieren(snapshot: Snapshot, field: str, out_path,
                     alpha: float = 10.0, log_scale: bool = False) -> None:
    """Grayscale schlieren image of one scalar field.

    With log_scale the gradient is taken of log10 of the (positive) field,
    matching the usual density-logarithm presentation of jet flows.
    """
    if snapshot.dim != 2:
        raise ValueError("schlieren rendering needs a 2D snapshot")
    data = _scalar_field(snapshot, field)
    if log_scale:
        if np.any(data <= 0.0):
            raise ValueError("log-scale schlieren needs a positive field")
        data = np.log10(data)
    grad = gradient_magnitude(data, *snapshot.spacing)
    gmax = float(np.max(grad))
    shade = np.exp(-alpha * grad / gmax) if gmax > 0.0 else np.ones_like(grad)
    x0, x1, y0, y1 = snapshot.extent
    fig, ax = plt.subplots(figsize=(6.4, 6.4 * (y1 - y0) / (x1 - x0)))
    ax.imshow(shade.T, origin="lower", extent=(x0, x1, y0, y1),
              cmap="gray", vmin=0.0, vmax=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"schlieren {field}" + (" (log)" if log_scale else ""))
    fig.savefig(out_path, **_SAVEFIG_KW)
    plt.close(fig)
