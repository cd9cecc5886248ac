"""Convergence experiments: parameter sweeps with proof-derived bound columns.

Each sweep emits a table of (control, ratio, bound, flag, aux).  The bound
columns are computed, not asymptotic: they come from the same-grid sandwich
inequalities (every eigenvalue moves by at most the measured perturbation gap
when V is added), so they dominate |ratio - 1| row by row whenever the
underlying arithmetic honors its tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import potentials as pot
from .ensembles import (
    ThermoParams,
    canonical_log_z,
    free_grand_log_xi_limit,
    grand_log_xi,
    plan_canonical_M,
    plan_grand_M,
    TRUNC_TARGET,
)
from .spectrum import (
    Spectrum,
    TOL_EIG_DEFAULT,
    compute_spectrum,
    counting_function,
    solver_error_bound,
    suggest_grid_size,
)

# default experiment schedules; the density schedule keeps N/L = m integral
THEOREM1_SCHEDULE = tuple((m * m, float(m)) for m in range(4, 13))
THEOREM2_LAM = 5.0
THEOREM2_MU_LIST = (25.0, 50.0, 100.0, 200.0, 400.0)
THEOREM3_MU_LIST = (50.0, 100.0, 200.0)
THEOREM3_LAM_LIST = (100.0, 200.0, 400.0)
STABILITY_TOL = 1e-3
# grand sweeps tolerate a coarser absolute eigenvalue tolerance (the grand
# sums only need levels to a small fraction of 1/beta); the sandwich constant
# C' carries twice the solver error bound, so the emitted bounds stay rigorous
GRAND_TOL_EIG = 1e-6


@dataclass(frozen=True)
class SweepRow:
    control: float
    ratio: float
    bound: float
    flag: str = ""
    aux: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ctl = [r.control for r in self.rows]
        if any(b <= a for a, b in zip(ctl, ctl[1:])):
            raise ValueError("control column must be strictly increasing")
        for r in self.rows:
            vals = [r.control, r.ratio, r.bound, *r.aux.values()]
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"non-finite entry in row control={r.control}")

    @property
    def flagged(self) -> bool:
        return any(r.flag for r in self.rows)


def _require_increasing(seq, name: str) -> None:
    vals = list(seq)
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} must be strictly increasing")


def _spectrum_pair(
    spec: pot.PotentialSpec, lam: float, n: int, M: int, tol_eig: float
) -> tuple[Spectrum, Spectrum]:
    """V and free spectra on the identical grid (required for the sandwich)."""
    sp0 = compute_spectrum(pot.zero(), lam, n, M, tol_eig=tol_eig)
    if spec.kind == "Zero":
        return sp0, sp0
    return compute_spectrum(spec, lam, n, M, tol_eig=tol_eig), sp0


def theorem1_sweep(spec: pot.PotentialSpec, beta: float, schedule) -> SweepTable:
    """Canonical ratio ln Z^V / ln Z^0 along a schedule of (N, L) with rising
    density N/L.  bound = (beta (gap + 4 tol) N + truncations) / |ln Z^0|,
    which dominates |ratio - 1| because every N-subset weight shifts by at
    most beta N gap between the two same-grid spectra."""
    schedule = [(int(N), float(lam)) for N, lam in schedule]
    if any(N <= lam for N, lam in schedule):
        raise ValueError("schedule requires N > lam in every entry")
    _require_increasing([N / lam for N, lam in schedule], "schedule density N/lam")
    C_sup = pot.sup_norm(spec)
    params = ThermoParams(beta=beta)
    rows = []
    for N, lam in schedule:
        M = plan_canonical_M(lam, beta, N, C_sup)
        while True:
            n = suggest_grid_size(lam, M, C_sup)
            sp_v, sp_0 = _spectrum_pair(spec, lam, n, M, TOL_EIG_DEFAULT)
            rv = canonical_log_z(sp_v, N, params, grow=False)
            r0 = canonical_log_z(sp_0, N, params, grow=False)
            if max(rv.truncation_bound, r0.truncation_bound) <= TRUNC_TARGET:
                break
            M = int(math.ceil(1.5 * M))
        gap = float(np.max(np.abs(sp_v.eigenvalues - sp_0.eigenvalues)))
        ratio = rv.log_z / r0.log_z
        err = 2.0 * (solver_error_bound(sp_v) + solver_error_bound(sp_0))
        bound = (
            beta * (gap + err) * N + rv.truncation_bound + r0.truncation_bound
        ) / abs(r0.log_z)
        rows.append(
            SweepRow(
                control=N / lam,
                ratio=ratio,
                bound=bound,
                aux={"log_z0_over_N": r0.log_z / N, "gap": gap, "lam": lam, "N": float(N)},
            )
        )
    meta = {"experiment": "theorem1", "beta": beta, "schedule": schedule}
    return SweepTable(rows=tuple(rows), meta=meta)


def _grand_pair_tables(
    spec: pot.PotentialSpec,
    lam: float,
    beta: float,
    mu_values,
    tol_eig: float,
):
    """Same-grid grand sums for V and free spectra at several mu, plus the
    free sums at mu +- C' needed for sandwich bounds."""
    C_sup = pot.sup_norm(spec)
    mu_top = max(mu_values) + C_sup + 1.0
    M = plan_grand_M(lam, beta, mu_top, C_sup)
    while True:
        n = suggest_grid_size(lam, M, C_sup)
        sp_v, sp_0 = _spectrum_pair(spec, lam, n, M, tol_eig)
        probe = grand_log_xi(sp_0, ThermoParams(beta=beta, mu=mu_top), grow=False)
        if probe.tail_bound <= TRUNC_TARGET:
            break
        M = int(math.ceil(1.5 * M))
    gap = float(np.max(np.abs(sp_v.eigenvalues - sp_0.eigenvalues)))
    c_prime = gap + solver_error_bound(sp_v) + solver_error_bound(sp_0)
    return sp_v, sp_0, gap, c_prime


def _grand_sum(sp: Spectrum, beta: float, mu: float) -> tuple[float, float]:
    res = grand_log_xi(sp, ThermoParams(beta=beta, mu=mu), grow=False)
    return res.log_xi, res.tail_bound


def theorem2_sweep(spec: pot.PotentialSpec, lam: float, beta: float, mu_list) -> SweepTable:
    """Grand ratio ln Xi^V / ln Xi^0 at fixed L for rising mu.  The bound is
    the exact same-grid sandwich ln Xi^0(mu - C') <= ln Xi^V(mu) <=
    ln Xi^0(mu + C') divided through by ln Xi^0(mu)."""
    mu_list = [float(m) for m in mu_list]
    _require_increasing(mu_list, "mu_list")
    C_sup = pot.sup_norm(spec)
    if mu_list[0] <= C_sup:
        raise ValueError("every mu must exceed sup|V|")
    sp_v, sp_0, gap, c_prime = _grand_pair_tables(spec, lam, beta, mu_list, GRAND_TOL_EIG)
    rows = []
    for mu in mu_list:
        xi_v, tv = _grand_sum(sp_v, beta, mu)
        xi_0, t0 = _grand_sum(sp_0, beta, mu)
        xi_up, tu = _grand_sum(sp_0, beta, mu + c_prime)
        xi_dn, td = _grand_sum(sp_0, beta, mu - c_prime)
        ratio = xi_v / xi_0
        slop = (tv + t0 + tu + td + 1e-12) / xi_0
        bound = max(xi_up / xi_0 - 1.0, 1.0 - xi_dn / xi_0) + slop
        rows.append(
            SweepRow(
                control=mu,
                ratio=ratio,
                bound=bound,
                aux={"lnxi_over_mu32": xi_v / mu**1.5, "gap": gap},
            )
        )
    meta = {"experiment": "theorem2", "beta": beta, "lam": lam, "mu_list": mu_list}
    return SweepTable(rows=tuple(rows), meta=meta)


def theorem3_sweep(spec: pot.PotentialSpec, beta: float, mu_list, lam_list) -> SweepTable:
    """Volume-normalized grand potential against the infinite-volume free
    integral.  Omega^V is taken at the largest L with a stability diagnostic
    from the previous L; unstable rows are flagged, never dropped."""
    mu_list = [float(m) for m in mu_list]
    lam_list = [float(x) for x in lam_list]
    _require_increasing(mu_list, "mu_list")
    _require_increasing(lam_list, "lam_list")
    if len(lam_list) < 2:
        raise ValueError("lam_list needs at least two volumes for the diagnostic")
    C_sup = pot.sup_norm(spec)
    if mu_list[0] <= C_sup:
        raise ValueError("every mu must exceed sup|V|")
    per_lam = {}
    for lam in lam_list:
        per_lam[lam] = _grand_pair_tables(spec, lam, beta, mu_list, GRAND_TOL_EIG)
    lam_top, lam_prev = lam_list[-1], lam_list[-2]
    rows = []
    for mu in mu_list:
        sp_v, sp_0, gap, c_prime = per_lam[lam_top]
        xi_v, tv = _grand_sum(sp_v, beta, mu)
        omega_v = xi_v / lam_top
        xi_vp, _ = _grand_sum(per_lam[lam_prev][0], beta, mu)
        omega_prev = xi_vp / lam_prev
        stability = abs(omega_v - omega_prev) / max(abs(omega_v), 1e-300)
        omega_0 = free_grand_log_xi_limit(ThermoParams(beta=beta, mu=mu))
        ratio = omega_v / omega_0
        xi_up, tu = _grand_sum(sp_0, beta, mu + c_prime)
        xi_dn, td = _grand_sum(sp_0, beta, mu - c_prime)
        denom = lam_top * omega_0
        slop = (tv + tu + td + 1e-12) / denom
        bound = max(xi_up / denom - 1.0, 1.0 - xi_dn / denom) + slop
        rows.append(
            SweepRow(
                control=mu,
                ratio=ratio,
                bound=bound,
                flag="unstable" if stability > STABILITY_TOL else "",
                aux={
                    "omega_v": omega_v,
                    "omega0_int": omega_0,
                    "stability": stability,
                    "gap": gap,
                },
            )
        )
    meta = {
        "experiment": "theorem3",
        "beta": beta,
        "mu_list": mu_list,
        "lam_list": lam_list,
    }
    return SweepTable(rows=tuple(rows), meta=meta)


def weyl_table(spectrum: Spectrum, t_grid) -> SweepTable:
    """Deviation of the eigenvalue count from L sqrt(t) / pi, with the proof
    bound 1 + L C / (2 pi sqrt(t)).  Rows below t = 4 C^2 are flagged as
    pre-asymptotic rather than dropped."""
    t_grid = [float(t) for t in t_grid]
    _require_increasing(t_grid, "t_grid")
    if t_grid[0] <= 0.0:
        raise ValueError("t_grid must be positive")
    lam, C = spectrum.lam, spectrum.sup_norm_C
    rows = []
    for t in t_grid:
        F = counting_function(spectrum, t)
        dev = F - lam * math.sqrt(t) / math.pi
        bound = 1.0 + lam * C / (2.0 * math.pi * math.sqrt(t))
        rows.append(
            SweepRow(
                control=t,
                ratio=dev,
                bound=bound,
                flag="pre_asymptotic" if t < 4.0 * C * C else "",
                aux={"count": float(F)},
            )
        )
    meta = {"experiment": "weyl", "lam": lam, "sup_norm": C}
    return SweepTable(rows=tuple(rows), meta=meta)


def est1_check(lam: float, N: int, beta: float, tol_eig: float = TOL_EIG_DEFAULT):
    """Free-gas upper bound at supercritical density N > L: returns
    (lhs, rhs) with the contract lhs <= rhs, where
    rhs = -ln N! + N ln(L/beta) + L ln(1 + e^beta beta N / L).
    lhs is the computed ln Z with eigenvalues lowered by 2 tol (conservative)
    plus its truncation bound."""
    if not N > lam:
        raise ValueError("est1 requires N > lam")
    params = ThermoParams(beta=beta)
    M = plan_canonical_M(lam, beta, N, 0.0)
    while True:
        n = suggest_grid_size(lam, M, 0.0)
        sp = compute_spectrum(pot.zero(), lam, n, M, tol_eig=tol_eig)
        # 4 tol covers the 2 tol lowering plus the bisection error either way
        lowered = Spectrum(
            eigenvalues=sp.eigenvalues - 2.0 * tol_eig,
            lam=lam,
            grid=sp.grid,
            potential_id=sp.potential_id,
            sup_norm_C=4.0 * tol_eig,
            tol_eig=tol_eig,
            potential=sp.potential,
        )
        res = canonical_log_z(lowered, N, params, grow=False)
        if res.truncation_bound <= TRUNC_TARGET:
            break
        M = int(math.ceil(1.5 * M))
    lhs = res.log_z + res.truncation_bound
    rhs = (
        -float(gammaln(N + 1))
        + N * math.log(lam / beta)
        + lam * float(np.logaddexp(0.0, beta + math.log(beta * N / lam)))
    )
    return lhs, rhs


def table_to_csv(table: SweepTable, path) -> None:
    """CSV with header control,ratio,bound,flag,aux_*; deterministic order."""
    from ._io import atomic_write_text, fmt

    aux_keys = list(table.rows[0].aux.keys()) if table.rows else []
    header = ["control", "ratio", "bound", "flag"] + [f"aux_{k}" for k in aux_keys]
    lines = [",".join(header)]
    for r in table.rows:
        cells = [fmt(r.control), fmt(r.ratio), fmt(r.bound), r.flag]
        cells += [fmt(r.aux[k]) for k in aux_keys]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def table_to_json(table: SweepTable, path, extra_meta: dict | None = None) -> None:
    """Full-metadata mirror of the CSV."""
    from ._io import build_describe, write_json

    meta = dict(table.meta)
    meta["build"] = build_describe()
    if extra_meta:
        meta.update(extra_meta)
    payload = {
        "meta": meta,
        "rows": [
            {
                "control": r.control,
                "ratio": r.ratio,
                "bound": r.bound,
                "flag": r.flag,
                "aux": dict(r.aux),
            }
            for r in table.rows
        ],
    }
    write_json(path, payload)
