"""Experiment configuration: defaults, INI-style files, and CLI overrides.

The file format is flat ``key = value`` text (a section header is optional).
Lengths may be given in meters or in wavelength units with a ``lam`` or
unicode lambda suffix, e.g. ``R = 3lam``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, fields, replace

from .constants import SPEED_OF_LIGHT
from .em_coupling import CouplingParams
from .errors import InvalidArgumentError

_LAMBDA_SUFFIXES = ("lam", "λ")


@dataclass(frozen=True)
class ExperimentConfig:
    """All experiment knobs; defaults are the reference operating point."""

    carrier_frequency: float = 2.5e9
    P: int = 100
    K: int = 10
    snr_ut_db: float = 15.0
    z0: complex = 50.0 + 0.0j
    zl: complex = 50.0 + 0.0j
    dipole_l: float | None = None  # None -> half wavelength
    sigma_shadow_db: float = 8.0
    l_resist: float = 10.0
    l_min: float = 10.0
    l_max: float = 150.0
    pathloss_v: float = 3.8
    snr_th_db: float = -3.0
    M: int = 100
    R: float | None = None  # None -> one wavelength
    M_min: int = 2
    R_min: float | None = None  # None -> one wavelength
    seed: int = 12345
    trials: int = 2000
    elevation: str = "uniform"
    zeta: float | None = None  # None -> plain BPP layouts

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def snr_ut(self) -> float:
        return 10.0 ** (self.snr_ut_db / 10.0)

    @property
    def snr_th(self) -> float:
        return 10.0 ** (self.snr_th_db / 10.0)

    def radius(self) -> float:
        return self.wavelength if self.R is None else self.R

    def radius_min(self) -> float:
        return self.wavelength if self.R_min is None else self.R_min

    def coupling_params(self) -> CouplingParams:
        return CouplingParams(
            wavelength_lambda=self.wavelength,
            dipole_length_l=self.dipole_l,
            self_impedance_Z0=self.z0,
            load_impedance_ZL=self.zl,
        )

    def canonical_lines(self) -> list[str]:
        out = []
        for f in sorted(fields(self), key=lambda f: f.name):
            out.append(f"{f.name}={getattr(self, f.name)!r}")
        return out

    def digest(self) -> str:
        payload = "\n".join(self.canonical_lines()).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


def parse_length(text: str, wavelength: float) -> float:
    """Parse a length in meters, or in wavelengths with a 'lam'/lambda suffix."""
    s = text.strip()
    for suf in _LAMBDA_SUFFIXES:
        if s.endswith(suf):
            return float(s[: -len(suf)]) * wavelength
    return float(s)


_INT_KEYS = {"P", "K", "M", "M_min", "seed", "trials"}
_FLOAT_KEYS = {
    "carrier_frequency",
    "snr_ut_db",
    "sigma_shadow_db",
    "l_resist",
    "l_min",
    "l_max",
    "pathloss_v",
    "snr_th_db",
}
_COMPLEX_KEYS = {"z0", "zl"}
_LENGTH_KEYS = {"R", "R_min", "dipole_l"}
_OPTIONAL_NONE = {"R", "R_min", "dipole_l", "zeta"}


def _coerce(key: str, value: str, wavelength: float):
    v = value.strip()
    if key in _OPTIONAL_NONE and v.lower() in ("none", "default", "bpp", ""):
        return None
    if key in _INT_KEYS:
        return int(v)
    if key in _FLOAT_KEYS:
        return float(v)
    if key in _COMPLEX_KEYS:
        return complex(v.replace(" ", ""))
    if key in _LENGTH_KEYS:
        return parse_length(v, wavelength)
    if key == "zeta":
        return float(v)
    if key == "elevation":
        if v not in ("uniform", "cosine"):
            raise InvalidArgumentError(f"elevation must be uniform or cosine, got {v!r}")
        return v
    raise InvalidArgumentError(f"unknown config key {key!r}")


def apply_overrides(config: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    """Apply string key=value overrides (CLI flags or file entries)."""
    # carrier frequency first: wavelength-suffixed lengths depend on it
    if "carrier_frequency" in overrides:
        config = replace(config, carrier_frequency=float(overrides["carrier_frequency"]))
    lam = config.wavelength
    updates = {}
    for key, val in overrides.items():
        if key == "carrier_frequency":
            continue
        updates[key] = _coerce(key, val, lam)
    try:
        return replace(config, **updates)
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from None


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Build a config from defaults, an optional INI file, and overrides."""
    config = ExperimentConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        if not text.lstrip().startswith("["):
            text = "[config]\n" + text
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from None
        entries = {}
        for section in parser.sections():
            entries.update(dict(parser.items(section)))
        # configparser lowercases keys; restore the canonical field names
        canon = {f.name.lower(): f.name for f in fields(ExperimentConfig)}
        mapped = {}
        for k, v in entries.items():
            if k not in canon:
                raise InvalidArgumentError(f"{path}: unknown config key {k!r}")
            mapped[canon[k]] = v
        config = apply_overrides(config, mapped)
    if overrides:
        config = apply_overrides(config, overrides)
    _validate(config)
    return config


def _validate(config: ExperimentConfig) -> None:
    if config.carrier_frequency <= 0:
        raise InvalidArgumentError("carrier_frequency must be > 0")
    if config.P < 1 or config.K < 1 or config.M < 2 or config.M_min < 2:
        raise InvalidArgumentError("P, K >= 1 and M, M_min >= 2 required")
    if config.trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    if not (0 < config.l_resist <= config.l_min <= config.l_max):
        raise InvalidArgumentError("need 0 < l_resist <= l_min <= l_max")
    if config.zeta is not None and config.zeta < 0:
        raise InvalidArgumentError("zeta must be >= 0")


def write_config(config: ExperimentConfig, fh: io.TextIOBase) -> None:
    """Write the flat key=value form (readable by load_config)."""
    for f in sorted(fields(ExperimentConfig), key=lambda f: f.name):
        val = getattr(config, f.name)
        if val is None:
            val = "none"
        elif isinstance(val, complex):
            val = f"{val.real:+g}{val.imag:+g}j".lstrip("+")
        fh.write(f"{f.name} = {val}\n")
