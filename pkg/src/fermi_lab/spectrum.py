"""Lowest Dirichlet eigenvalues of -d^2/dx^2 + V on [0, L].

Second-order central differences on a uniform grid give a symmetric
tridiagonal matrix whose free (V = 0) eigenvalues are known in closed form,
so the bisection solver can be validated to near machine precision
independently of the discretization error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import potentials as pot
from ._io import atomic_write_text, fmt
from ._sturm import _EPS, _PLAIN_SLOP, _SKIP_DD, solve_batch

TOL_EIG_DEFAULT = 1e-10
# target relative discretization error of the highest requested level;
# the second-order scheme satisfies 0 <= eps_exact - eps_disc <= eps^2 h^2 / 12
DISC_REL_ERR = 1e-4


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid for the Dirichlet problem on [0, lam]."""

    lam: float
    n: int
    h: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise ValueError("lam must be positive")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "h", self.lam / (self.n + 1))

    @property
    def points(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class Spectrum:
    """Lowest M eigenvalues of the discretized operator plus provenance."""

    eigenvalues: np.ndarray
    lam: float
    grid: Grid
    potential_id: str
    sup_norm_C: float
    tol_eig: float = TOL_EIG_DEFAULT
    # kept so ensemble truncation targets can request more levels; not part
    # of the value identity (artificial spectra leave it None)
    potential: pot.PotentialSpec | None = None

    def __post_init__(self) -> None:
        ev = np.asarray(self.eigenvalues, dtype=float)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        if ev.ndim != 1 or ev.size < 1:
            raise ValueError("eigenvalues must be a nonempty 1d array")
        if not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite")
        if np.any(np.diff(ev) <= 0.0):
            raise ValueError("eigenvalues must be strictly increasing")
        if ev.size > self.grid.n:
            raise ValueError("more eigenvalues than grid dimensions")

    @property
    def M(self) -> int:
        return int(self.eigenvalues.size)


def free_eigenvalue(k: int, lam: float) -> float:
    """Exact k-th Dirichlet eigenvalue of the free operator: (pi k / lam)^2."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not lam > 0.0:
        raise ValueError("lam must be positive")
    return (math.pi * k / lam) ** 2


def discrete_free_eigenvalue(k: int, grid: Grid) -> float:
    """Exact k-th eigenvalue of the free finite-difference matrix:
    (4/h^2) sin^2(k pi h / (2 lam))."""
    if not 1 <= k <= grid.n:
        raise ValueError(f"k must be in [1, {grid.n}]")
    w = 1.0 / (grid.h * grid.h)
    return 4.0 * w * math.sin(0.5 * math.pi * k / (grid.n + 1)) ** 2


def suggest_grid_size(lam: float, M: int, sup_norm_C: float, rel_err: float = DISC_REL_ERR) -> int:
    """Interior point count keeping the discretization error of level M below
    rel_err * max(1, eps_M), using the exact bound eps^2 h^2 / 12."""
    if M < 1 or not lam > 0.0:
        raise ValueError("need M >= 1 and lam > 0")
    e_top = free_eigenvalue(M, lam) + abs(sup_norm_C)
    h = math.sqrt(12.0 * rel_err * max(1.0, e_top)) / e_top
    n = int(math.ceil(lam / h)) - 1
    return max(n, 2 * M, 16)


def compute_spectrum(
    spec: pot.PotentialSpec,
    lam: float,
    n: int,
    M: int,
    tol_eig: float = TOL_EIG_DEFAULT,
    rel_tol: float | None = None,
) -> Spectrum:
    """Lowest M eigenvalues by Sturm bisection, to absolute tolerance tol_eig
    (and additionally to relative tolerance rel_tol when given)."""
    if M < 1:
        raise ValueError("M must be at least 1")
    if M > n:
        raise ValueError(f"M={M} exceeds matrix dimension n={n}")
    if not tol_eig > 0.0:
        raise ValueError("tol_eig must be positive")
    grid = Grid(lam, n)
    v = pot.evaluate_on_grid(spec, grid.points, lam)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential is not finite on the grid")
    w = 1.0 / (grid.h * grid.h)
    kvec = np.arange(1, M + 1, dtype=np.int64)
    centers = 4.0 * w * np.sin(0.5 * math.pi * kvec / (n + 1)) ** 2
    ev = solve_batch(w, v, kvec, centers, tol_eig, 0.0 if rel_tol is None else rel_tol)
    if np.any(np.diff(ev) <= 0.0):
        raise RuntimeError("bisection produced a non-increasing eigenvalue list")
    return Spectrum(
        eigenvalues=ev,
        lam=lam,
        grid=grid,
        potential_id=pot.content_hash(spec),
        sup_norm_C=pot.sup_norm(spec),
        tol_eig=tol_eig,
        potential=spec,
    )


def solver_error_bound(spectrum: Spectrum) -> float:
    """Per-eigenvalue absolute error guarantee of the bisection that produced
    this spectrum.  Equals tol_eig when the compensated final phase ran; in
    the plain-only regime (tolerance far above the roundoff floor) it carries
    the componentwise floor of the fast count as an extra term."""
    norm = 4.0 / spectrum.grid.h**2 + abs(spectrum.sup_norm_C)
    if spectrum.tol_eig >= _SKIP_DD * _EPS * norm:
        return spectrum.tol_eig + _PLAIN_SLOP * _EPS * norm
    return spectrum.tol_eig


def counting_function(spectrum: Spectrum, t: float) -> int:
    """Number of computed eigenvalues <= t.  Only trustworthy below the top
    of the computed range, so t >= eps_M raises."""
    ev = spectrum.eigenvalues
    if t >= ev[-1]:
        raise ValueError(f"t={t} is not below the top computed eigenvalue {ev[-1]}")
    return int(np.searchsorted(ev, t, side="right"))


def perturbation_gap(
    spec: pot.PotentialSpec,
    lam: float,
    n: int,
    M: int,
    tol_eig: float = TOL_EIG_DEFAULT,
) -> float:
    """max_k |eps_k(V) - eps_k(0)| over the same grid; bounded by
    sup|V| + 2 tol_eig for symmetric matrices differing by a diagonal."""
    with_v = compute_spectrum(spec, lam, n, M, tol_eig=tol_eig)
    free = compute_spectrum(pot.zero(), lam, n, M, tol_eig=tol_eig)
    return float(np.max(np.abs(with_v.eigenvalues - free.eigenvalues)))


def spectrum_to_csv(spectrum: Spectrum, path) -> None:
    """Write "k,epsilon" rows plus a metadata JSON sidecar next to the CSV."""
    lines = ["k,epsilon"]
    for k, e in enumerate(spectrum.eigenvalues, start=1):
        lines.append(f"{k},{fmt(e)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = {
        "lambda": spectrum.lam,
        "n": spectrum.grid.n,
        "M": spectrum.M,
        "potential_id": spectrum.potential_id,
        "sup_norm": spectrum.sup_norm_C,
        "tol_eig": spectrum.tol_eig,
    }
    atomic_write_text(str(path) + ".json", json.dumps(meta, indent=2) + "\n")
