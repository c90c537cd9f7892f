"""Dipole mutual impedance and the array mutual-coupling matrix.

The mutual impedance between two parallel dipoles at spacing d is the
classical sine/cosine-integral expression; the coupling matrix follows from
the load/self/mutual impedances as C = (Z0 + ZL) (ZL I + Z_C)^(-1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_geometry import AntennaLayout, distance_matrix
from .constants import FREE_SPACE_IMPEDANCE
from .errors import DegenerateLayoutError, InvalidArgumentError, SingularMatrixError
from .special_functions import cosine_integral_Ci, sine_integral

MIN_SPACING_WAVELENGTHS = 1e-4
"""Antenna pairs closer than this (in wavelengths) make a layout degenerate."""

CONDITION_WARN_THRESHOLD = 1e12


@dataclass(frozen=True)
class CouplingParams:
    """Dipole geometry and impedances governing the coupling model.

    ``dipole_length_l`` defaults to a half-wave dipole.  The self-impedance
    default of 50 ohms matches the usual measurement convention; the
    analytical half-wave value (73 + 42.5j ohms) can be passed instead.
    """

    wavelength_lambda: float
    dipole_length_l: float | None = None
    free_space_impedance_eps: float = FREE_SPACE_IMPEDANCE
    self_impedance_Z0: complex = 50.0 + 0.0j
    load_impedance_ZL: complex = 50.0 + 0.0j

    def __post_init__(self):
        if self.wavelength_lambda <= 0:
            raise InvalidArgumentError(
                f"wavelength must be > 0, got {self.wavelength_lambda}"
            )
        if self.dipole_length_l is None:
            object.__setattr__(self, "dipole_length_l", self.wavelength_lambda / 2.0)
        if self.dipole_length_l <= 0:
            raise InvalidArgumentError(
                f"dipole length must be > 0, got {self.dipole_length_l}"
            )


@dataclass(frozen=True)
class CouplingMatrices:
    """Mutual impedance matrix and the coupling matrix derived from it."""

    Z_C: np.ndarray
    C: np.ndarray
    condition_estimate: float = field(default=float("nan"))


def mutual_impedance(d_ij: float, params: CouplingParams) -> complex:
    """Mutual impedance (ohms) of two parallel dipoles at spacing ``d_ij``.

    With k = 2*pi/lambda and arguments
    varsigma = k*d, mu = k*(sqrt(d^2+l^2)+l), rho = k*(sqrt(d^2+l^2)-l):

        Z = eps/(4*pi) * [2 Ci(varsigma) - Ci(mu) - Ci(rho)
                          - j (2 Si(varsigma) - Si(mu) - Si(rho))]

    Valid for d_ij > 0; the self term is the configured Z0, not this formula.
    """
    if d_ij <= 0:
        raise InvalidArgumentError(f"mutual impedance needs d_ij > 0, got {d_ij}")
    lam = params.wavelength_lambda
    ell = params.dipole_length_l
    k = 2.0 * math.pi / lam
    hyp = math.hypot(d_ij, ell)
    varsigma = k * d_ij
    mu = k * (hyp + ell)
    rho = k * (hyp - ell)
    real = (
        2.0 * cosine_integral_Ci(varsigma)
        - cosine_integral_Ci(mu)
        - cosine_integral_Ci(rho)
    )
    imag = -(2.0 * sine_integral(varsigma) - sine_integral(mu) - sine_integral(rho))
    return params.free_space_impedance_eps / (4.0 * math.pi) * complex(real, imag)


def impedance_matrix(layout: AntennaLayout, params: CouplingParams) -> np.ndarray:
    """Mutual impedance matrix: Z0 on the diagonal, pairwise terms elsewhere."""
    M = layout.M
    dm = distance_matrix(layout)
    iu = np.triu_indices(M, k=1)
    min_d = float(np.min(dm[iu])) if iu[0].size else math.inf
    if min_d < MIN_SPACING_WAVELENGTHS * params.wavelength_lambda:
        raise DegenerateLayoutError(
            f"antenna spacing {min_d:.3e} m is below "
            f"{MIN_SPACING_WAVELENGTHS} wavelengths; coupling model invalid"
        )
    Z = np.full((M, M), complex(params.self_impedance_Z0), dtype=complex)
    vals = [mutual_impedance(float(d), params) for d in dm[iu]]
    Z[iu] = vals
    Z[(iu[1], iu[0])] = vals
    return Z


def coupling_matrix(Z_C: np.ndarray, params: CouplingParams) -> np.ndarray:
    """Coupling matrix C = (Z0 + ZL) (ZL I + Z_C)^(-1)."""
    Z_C = np.asarray(Z_C, dtype=complex)
    M = Z_C.shape[0]
    if Z_C.shape != (M, M):
        raise InvalidArgumentError(f"Z_C must be square, got shape {Z_C.shape}")
    A = params.load_impedance_ZL * np.eye(M) + Z_C
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularMatrixError(
            f"ZL*I + Z_C is numerically singular (cond ~ {cond:.3e})",
            condition_estimate=cond,
        )
    if cond > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"ZL*I + Z_C is badly conditioned (cond ~ {cond:.3e}); "
            "coupling matrix may be inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    scale = complex(params.self_impedance_Z0) + complex(params.load_impedance_ZL)
    return np.linalg.solve(A, scale * np.eye(M))


def coupling_for_layout(layout: AntennaLayout, params: CouplingParams) -> CouplingMatrices:
    """Convenience: impedance matrix and coupling matrix for one layout."""
    Z = impedance_matrix(layout, params)
    A = params.load_impedance_ZL * np.eye(layout.M) + Z
    return CouplingMatrices(Z_C=Z, C=coupling_matrix(Z, params), condition_estimate=float(np.linalg.cond(A)))


def write_impedance_csv(Z_C: np.ndarray, path) -> None:
    """Dump Z_C as CSV of interleaved real/imag entries, row-major."""
    Z_C = np.asarray(Z_C)
    M = Z_C.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# Z_C M={M}\n")
        for row in Z_C:
            cells = []
            for z in row:
                cells.append(repr(float(z.real)))
                cells.append(repr(float(z.imag)))
            fh.write(",".join(cells) + "\n")
