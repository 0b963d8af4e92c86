"""Schmidt decomposition of a discretized joint spectral amplitude.

The continuum decomposition F(omega_s, omega_i) = sum_n sqrt(c_n)
S_n(omega_s) I_n(omega_i) is approximated by an SVD of the grid matrix
weighted by sqrt(cell area), which makes the coefficients converge with
grid refinement.  The Schmidt number K = 1 / sum c_n^2 counts effective
modes: K = 1 for a factorable state, K > 1 for a correlated one; its
inverse is the heralded-photon purity.

Two variants matter in practice and are never interchanged silently:
the complex-JSA decomposition uses the full amplitude including phase,
while the flat-phase variant decomposes sqrt(JSI) = |F|, which is what a
phase-insensitive intensity measurement constrains.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .jsa import JsaGrid

TRUNCATION_RELATIVE = 1e-12


@dataclass(frozen=True)
class SchmidtResult:
    """Coefficients, mode count, and Schmidt modes of one decomposition.

    coefficients are descending and sum to 1; signal_modes[:, n] and
    idler_modes[:, n] are the discrete orthonormal mode vectors on the
    grid axes, with weighted_grid = sum_n s_n S_n outer I_n.
    """

    coefficients: np.ndarray
    K: float
    purity: float
    flat_phase: bool
    signal_modes: np.ndarray
    idler_modes: np.ndarray

    @property
    def n_modes(self) -> int:
        return int(self.coefficients.size)


def schmidt_number(coefficients) -> float:
    """K = 1 / sum c_n^2 for normalized coefficients.

    Exactly 1 when a single coefficient is nonzero; rejects unnormalized
    or negative input rather than guessing a rescale.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValidationError("coefficients must be a non-empty 1-D sequence")
    if np.any(c < 0.0) or not np.all(np.isfinite(c)):
        raise ValidationError("coefficients must be finite and >= 0")
    total = float(np.sum(c))
    if abs(total - 1.0) > 1e-8:
        raise ValidationError(
            f"coefficients must be normalized: sum = {total!r}, expected 1"
        )
    return float(1.0 / np.sum(c**2))


def schmidt_decompose(
    grid,
    flat_phase: bool = False,
    cell_area: float | None = None,
) -> SchmidtResult:
    """SVD-based Schmidt decomposition of a JsaGrid or a raw grid array.

    A JsaGrid brings its own cell area; flat_phase=True decomposes the
    magnitude |F| instead of F.  A raw real array is interpreted as a JSI
    (decomposed as sqrt(JSI), necessarily flat-phase); a raw complex array
    as a JSA.  Coefficients below 1e-12 of the leading one are truncated
    as SVD noise, then renormalized.
    """
    if isinstance(grid, JsaGrid):
        matrix = np.abs(grid.values) if flat_phase else grid.values
        area = grid.cell_area
    else:
        arr = np.asarray(grid)
        if arr.ndim != 2 or min(arr.shape) < 2:
            raise ValidationError("grid must be a 2-D array, at least 2x2")
        if np.iscomplexobj(arr):
            if flat_phase:
                matrix = np.abs(arr)
            else:
                matrix = arr
        else:
            # a real grid is a JSI: amplitude is its square root
            if np.any(arr < 0.0):
                raise ValidationError("a JSI grid must be non-negative")
            matrix = np.sqrt(arr)
            flat_phase = True
        area = 1.0 if cell_area is None else float(cell_area)
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("grid contains non-finite values")
    if not np.any(matrix):
        raise ValidationError("degenerate input: grid is identically zero")
    if area <= 0.0:
        raise ValidationError("cell_area must be > 0")

    weighted = np.asarray(matrix) * np.sqrt(area)
    u, s, vh = np.linalg.svd(weighted, full_matrices=False)

    c = s**2
    c = c / np.sum(c)
    keep = c >= TRUNCATION_RELATIVE * c[0]
    c = c[keep]
    c = c / np.sum(c)
    rank = int(np.count_nonzero(keep))

    return SchmidtResult(
        coefficients=c,
        K=float(1.0 / np.sum(c**2)),
        purity=float(np.sum(c**2)),
        flat_phase=bool(flat_phase),
        signal_modes=u[:, :rank],
        idler_modes=vh[:rank, :].T,
    )


def schmidt_to_json(result: SchmidtResult, path: str | None = None) -> str:
    obj = {
        "c": result.coefficients.tolist(),
        "K": result.K,
        "purity": result.purity,
        "flat_phase": result.flat_phase,
    }
    text = json.dumps(obj, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def schmidt_modes_to_csv(
    result: SchmidtResult, n_modes: int = 8, path: str | None = None
) -> str:
    """Leading Schmidt mode vectors as CSV columns (real part, then imag
    when any mode is complex)."""
    n = min(int(n_modes), result.n_modes)
    sig = result.signal_modes[:, :n]
    idl = result.idler_modes[:, :n]
    complex_modes = np.iscomplexobj(sig) or np.iscomplexobj(idl)
    header = []
    cols = []
    for m in range(n):
        if complex_modes:
            header += [f"S{m}_re", f"S{m}_im", f"I{m}_re", f"I{m}_im"]
            cols += [sig[:, m].real, np.imag(sig[:, m]), idl[:, m].real, np.imag(idl[:, m])]
        else:
            header += [f"S{m}", f"I{m}"]
            cols += [sig[:, m].real, idl[:, m].real]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in np.column_stack(cols):
        writer.writerow([f"{v:.9g}" for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
