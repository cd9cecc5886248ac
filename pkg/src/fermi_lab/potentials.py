"""Bounded external potentials V(x) on [0, L] and their sup-norms.

Energies are dimensionless in units where hbar = 2m = 1, so the one-particle
Hamiltonian is -d^2/dx^2 + V(x) with Dirichlet conditions at 0 and L.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

KINDS = ("Zero", "Constant", "Cosine", "SquareWell", "Tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """One member of the built-in potential family.

    kind        one of KINDS
    amplitude   overall energy scale
    period      absolute period of the Cosine lattice (not rescaled with L)
    well_bounds support of the SquareWell, as fractions of L in [0, 1]
    samples     (position, value) nodes of a Tabulated potential; positions
                are fractions of L, interpolation is piecewise linear
    """

    kind: str
    amplitude: float = 0.0
    period: float = 0.0
    well_bounds: tuple[float, float] | None = None
    samples: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.kind == "Cosine" and not self.period > 0.0:
            raise ValueError("Cosine potential needs period > 0")
        if self.kind == "SquareWell":
            if self.well_bounds is None:
                raise ValueError("SquareWell potential needs well_bounds")
            lo, hi = self.well_bounds
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError("well_bounds must satisfy 0 <= lo < hi <= 1")
        if self.kind == "Tabulated":
            if not self.samples or len(self.samples) < 2:
                raise ValueError("Tabulated potential needs at least 2 samples")
            pos = [p for p, _ in self.samples]
            val = [v for _, v in self.samples]
            if any(not math.isfinite(p) or not math.isfinite(v) for p, v in self.samples):
                raise ValueError("Tabulated samples must be finite")
            if any(b <= a for a, b in zip(pos, pos[1:])):
                raise ValueError("Tabulated positions must be strictly increasing")
            if pos[0] != 0.0 or pos[-1] != 1.0:
                raise ValueError("Tabulated positions must cover [0, 1]")
            del val


def zero() -> PotentialSpec:
    return PotentialSpec("Zero")


def constant(amplitude: float) -> PotentialSpec:
    return PotentialSpec("Constant", amplitude=amplitude)


def cosine(amplitude: float, period: float) -> PotentialSpec:
    return PotentialSpec("Cosine", amplitude=amplitude, period=period)


def square_well(amplitude: float, lo: float, hi: float) -> PotentialSpec:
    return PotentialSpec("SquareWell", amplitude=amplitude, well_bounds=(lo, hi))


def tabulated(samples) -> PotentialSpec:
    return PotentialSpec("Tabulated", samples=tuple((float(p), float(v)) for p, v in samples))


def evaluate(spec: PotentialSpec, x: float, lam: float) -> float:
    """Evaluate V(x) for 0 <= x <= lam.  Raises ValueError outside the box."""
    if not 0.0 <= x <= lam:
        raise ValueError(f"x={x} outside [0, {lam}]")
    if spec.kind == "Zero":
        return 0.0
    if spec.kind == "Constant":
        return spec.amplitude
    if spec.kind == "Cosine":
        return spec.amplitude * math.cos(2.0 * math.pi * x / spec.period)
    if spec.kind == "SquareWell":
        lo, hi = spec.well_bounds
        return spec.amplitude if lo * lam <= x <= hi * lam else 0.0
    # Tabulated: piecewise linear in the relative coordinate x / lam
    pos = np.array([p for p, _ in spec.samples])
    val = np.array([v for _, v in spec.samples])
    return float(np.interp(x / lam, pos, val))


def evaluate_on_grid(spec: PotentialSpec, xs: np.ndarray, lam: float) -> np.ndarray:
    """Vectorized evaluate; same values as the scalar form at every node."""
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < 0.0 or xs.max() > lam):
        raise ValueError("grid points outside [0, lam]")
    if spec.kind == "Zero":
        return np.zeros_like(xs)
    if spec.kind == "Constant":
        return np.full_like(xs, spec.amplitude)
    if spec.kind == "Cosine":
        return spec.amplitude * np.cos(2.0 * math.pi * xs / spec.period)
    if spec.kind == "SquareWell":
        lo, hi = spec.well_bounds
        inside = (xs >= lo * lam) & (xs <= hi * lam)
        return np.where(inside, spec.amplitude, 0.0)
    pos = np.array([p for p, _ in spec.samples])
    val = np.array([v for _, v in spec.samples])
    return np.interp(xs / lam, pos, val)


def sup_norm(spec: PotentialSpec) -> float:
    """sup over [0, L] of |V|; exact for every built-in family."""
    if spec.kind == "Zero":
        return 0.0
    if spec.kind in ("Constant", "Cosine", "SquareWell"):
        # |cos| <= 1 is attained on any interval longer than one period; the
        # square well attains its amplitude on its support
        return abs(spec.amplitude)
    # piecewise linear attains its extrema at the nodes
    return max(abs(v) for _, v in spec.samples)


def load_tabulated(path) -> PotentialSpec:
    """Parse a tabulated-potential file: one "position value" pair per line,
    '#' starts a comment, positions strictly increasing and covering [0, 1]."""
    samples: list[tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'position value', got {raw!r}")
            try:
                p, v = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not numeric: {raw!r}") from exc
            if not (math.isfinite(p) and math.isfinite(v)):
                raise ValueError(f"{path}:{lineno}: non-finite entry")
            samples.append((p, v))
    return tabulated(samples)


def content_hash(spec: PotentialSpec) -> str:
    """Deterministic id of a spec, stable across processes."""
    parts = [spec.kind, float(spec.amplitude).hex(), float(spec.period).hex()]
    if spec.well_bounds is not None:
        parts += [float(b).hex() for b in spec.well_bounds]
    if spec.samples is not None:
        for p, v in spec.samples:
            parts += [float(p).hex(), float(v).hex()]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]
