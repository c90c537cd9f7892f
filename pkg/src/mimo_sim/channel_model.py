"""Steering, fading, channel composition, and the correlation spectrum.

The composite uplink channel is G = C A H D^(1/2): coupling matrix C,
steering matrix A over P incident directions, small-scale fading H, and the
diagonal large-scale fading D.  The correlation matrix Psi = C A A^H C^H and
its eigenvalue spectrum drive every closed-form result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_geometry import AntennaLayout
from .errors import InvalidArgumentError, NumericFailureError
from .special_functions import sample_lognormal_shadowing

_TWO_PI = 2.0 * math.pi

EIGENVALUE_CLAMP_REL = 1e-12
"""Eigenvalues below this fraction of the largest are clamped to zero."""


@dataclass(frozen=True)
class IncidentDirections:
    """Azimuth/elevation angles of the P independent incident directions."""

    phi: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        if phi.ndim != 1 or phi.shape != theta.shape or phi.size < 1:
            raise InvalidArgumentError("phi and theta must be equal-length 1-D arrays")
        if np.any((phi < 0) | (phi >= _TWO_PI)):
            raise InvalidArgumentError("azimuths must lie in [0, 2*pi)")
        if np.any(np.abs(theta) > math.pi / 2):
            raise InvalidArgumentError("elevations must lie in [-pi/2, pi/2]")

    @property
    def P(self) -> int:
        return self.phi.size


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the matrices making up G = C A H D^(1/2)."""

    C: np.ndarray
    A: np.ndarray
    H: np.ndarray
    D: np.ndarray
    G: np.ndarray


@dataclass(frozen=True)
class CorrelationSpectrum:
    """Correlation matrix, its ascending eigenvalues, and the off-diagonal score."""

    Psi: np.ndarray
    eigenvalues_tau: np.ndarray
    eta: float
    effective_rank: int
    clamped: int


def draw_directions(P: int, seed, elevation: str = "uniform") -> IncidentDirections:
    """Draw P incident directions; azimuth uniform on [0, 2*pi).

    ``elevation`` selects the elevation density: "uniform" on
    [-pi/2, pi/2], or "cosine" (cosine-weighted, i.e. sin(theta) uniform).
    Directions model static scatterer geometry: fixed per seed, reused
    across the fading trials of an experiment.
    """
    if P < 1:
        raise InvalidArgumentError(f"need P >= 1 directions, got {P}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    phi = rng.uniform(0.0, _TWO_PI, size=P)
    if elevation == "uniform":
        theta = rng.uniform(-math.pi / 2, math.pi / 2, size=P)
    elif elevation == "cosine":
        theta = np.arcsin(rng.uniform(-1.0, 1.0, size=P))
    else:
        raise InvalidArgumentError(f"unknown elevation density {elevation!r}")
    return IncidentDirections(phi=phi, theta=theta)


def steering_element(
    d: float, psi: float, phi_q: float, theta_q: float, lam: float
) -> complex:
    """Phase response of an antenna at polar position (d, psi).

    exp(-j * 2*pi*d/lambda * sin(theta_q) * cos(phi_q - psi)); the disk
    center is the zero-phase reference.
    """
    if lam <= 0:
        raise InvalidArgumentError(f"wavelength must be > 0, got {lam}")
    phase = -_TWO_PI * d / lam * math.sin(theta_q) * math.cos(phi_q - psi)
    return complex(math.cos(phase), math.sin(phase))


def steering_matrix(
    layout: AntennaLayout, dirs: IncidentDirections, lam: float
) -> np.ndarray:
    """M x P steering matrix; column q is the response to direction q."""
    if lam <= 0:
        raise InvalidArgumentError(f"wavelength must be > 0, got {lam}")
    # phase[m, q] = -2*pi*d_m/lam * sin(theta_q) * cos(phi_q - psi_m)
    s = np.sin(dirs.theta)[None, :]
    c = np.cos(dirs.phi[None, :] - layout.psi[:, None])
    phase = (-_TWO_PI / lam) * layout.d[:, None] * s * c
    return np.exp(1j * phase)


def draw_small_scale(P: int, K: int, seed) -> np.ndarray:
    """P x K i.i.d. circularly-symmetric complex Gaussian, unit variance."""
    if P < 1 or K < 1:
        raise InvalidArgumentError(f"need P, K >= 1, got P={P}, K={K}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    re = rng.normal(scale=math.sqrt(0.5), size=(P, K))
    im = rng.normal(scale=math.sqrt(0.5), size=(P, K))
    return re + 1j * im


def draw_large_scale(
    K: int,
    l_resist: float,
    l_range: tuple[float, float],
    v: float,
    sigma_dB: float,
    seed,
) -> np.ndarray:
    """Large-scale fading factors beta_k = z_k / (l_k / l_resist)^v.

    l_k is uniform on ``l_range`` and z_k is log-normal shadowing with the
    given dB standard deviation.
    """
    lo, hi = l_range
    if not (0 < l_resist <= lo <= hi):
        raise InvalidArgumentError(
            f"need 0 < l_resist <= l_min <= l_max, got l_resist={l_resist}, range={l_range}"
        )
    if v <= 0:
        raise InvalidArgumentError(f"path loss exponent must be > 0, got {v}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    l_k = rng.uniform(lo, hi, size=K)
    z = sample_lognormal_shadowing(sigma_dB, rng, size=K)
    return z / (l_k / l_resist) ** v


def compose_channel(C, A, H, D) -> ChannelSet:
    """Assemble G = C A H D^(1/2) after validating conformability."""
    C = np.asarray(C, dtype=complex)
    A = np.asarray(A, dtype=complex)
    H = np.asarray(H, dtype=complex)
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = np.diag(D)
    M = C.shape[0]
    P = A.shape[1]
    K = H.shape[1]
    if C.shape != (M, M) or A.shape != (M, P) or H.shape != (P, K) or D.shape != (K, K):
        raise InvalidArgumentError(
            f"non-conformable shapes C{C.shape} A{A.shape} H{H.shape} D{D.shape}"
        )
    beta = np.diag(D)
    if np.any(beta <= 0):
        raise InvalidArgumentError("large-scale factors must be strictly positive")
    G = C @ A @ H @ np.diag(np.sqrt(beta))
    return ChannelSet(C=C, A=A, H=H, D=D, G=G)


def matrix_correlation_coefficient(Psi: np.ndarray) -> float:
    """Off-diagonal correlation score: Tr[Psi Psi^H] / Tr[Psi o Psi] - 1.

    The Hadamard-product trace sums the squared diagonal entries, so the
    score is the ratio of total squared mass to diagonal squared mass,
    minus one; zero iff Psi is diagonal.
    """
    Psi = np.asarray(Psi)
    if Psi.ndim != 2 or Psi.shape[0] != Psi.shape[1]:
        raise InvalidArgumentError(f"Psi must be square, got shape {Psi.shape}")
    diag_sq = float(np.sum(np.abs(np.diag(Psi)) ** 2))
    if diag_sq == 0.0:
        raise InvalidArgumentError("Psi has zero diagonal; coefficient undefined")
    total_sq = float(np.sum(np.abs(Psi) ** 2))
    return total_sq / diag_sq - 1.0


def correlation(C: np.ndarray, A: np.ndarray) -> CorrelationSpectrum:
    """Correlation matrix Psi = C A A^H C^H with spectrum and eta.

    Eigenvalues are returned ascending; entries below EIGENVALUE_CLAMP_REL
    of the largest are clamped to zero (rank deficiency when M > P) and
    counted in ``clamped``.
    """
    C = np.asarray(C, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if C.shape[0] != C.shape[1] or C.shape[1] != A.shape[0]:
        raise InvalidArgumentError(f"non-conformable C{C.shape}, A{A.shape}")
    CA = C @ A
    Psi = CA @ CA.conj().T
    Psi = 0.5 * (Psi + Psi.conj().T)  # scrub floating-point asymmetry
    try:
        tau = np.linalg.eigvalsh(Psi)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            f"eigendecomposition failed for M={Psi.shape[0]} "
            f"(|Psi|_F={np.linalg.norm(Psi):.3e})"
        ) from exc
    tau = np.sort(tau)
    top = tau[-1]
    if top <= 0:
        raise NumericFailureError("correlation matrix has no positive eigenvalues")
    clamp = tau < EIGENVALUE_CLAMP_REL * top
    clamped = int(np.count_nonzero(clamp))
    tau = np.where(clamp, 0.0, tau)
    return CorrelationSpectrum(
        Psi=Psi,
        eigenvalues_tau=tau,
        eta=matrix_correlation_coefficient(Psi),
        effective_rank=int(tau.size - clamped),
        clamped=clamped,
    )


def write_spectrum_csv(spectrum: CorrelationSpectrum, path, M=None, R=None, zeta=None) -> None:
    """Dump eigenvalues as CSV with a correlation summary comment line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# summary M={M} R={R} zeta={zeta} eta={float(spectrum.eta)!r}\n")
        fh.write("tau_index,tau_value\n")
        for idx, t in enumerate(spectrum.eigenvalues_tau, start=1):
            fh.write(f"{idx},{float(t)!r}\n")
