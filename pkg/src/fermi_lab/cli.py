"""Command-line front end: config parsing, experiment dispatch, artifacts.

Exit codes: 0 success, 2 malformed config, 3 capacity exceeded, 4 a table
carried flagged rows (artifacts are still written in that case).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from configparser import ConfigParser
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, asymptotics, ensembles
from . import potentials as pot
from . import spectrum as spm
from ._io import atomic_write_text, build_describe, fmt, write_json
from .errors import CapacityError, ConfigError

EXPERIMENTS = (
    "spectrum",
    "canonical",
    "grand",
    "weyl",
    "theorem1",
    "theorem2",
    "theorem3",
    "est1",
    "consistency",
)
# subcommand spellings for the theorem sweeps
_SUBCOMMAND_TO_EXPERIMENT = {"thm1": "theorem1", "thm2": "theorem2", "thm3": "theorem3"}

_CONFIG_SCHEMA = {
    "experiment": {"name"},
    "potential": {"kind", "amplitude", "period", "well_lo", "well_hi", "file"},
    "params": {
        "beta",
        "lambda",
        "n",
        "m",
        "n_particles",
        "mu",
        "mu_list",
        "lambda_list",
        "t_min",
        "t_max",
        "t_points",
        "m_min",
        "m_max",
        "seed",
        "threads",
    },
    "output": {"dir"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one run."""

    experiment: str
    potential: pot.PotentialSpec
    beta: float = 1.0
    lam: float | None = None
    n: int | None = None
    M: int | None = None
    N: int | None = None
    mu: float | None = None
    mu_list: tuple[float, ...] | None = None
    lam_list: tuple[float, ...] | None = None
    t_min: float = 10.0
    t_max: float = 500.0
    t_points: int = 1000
    m_min: int = 4
    m_max: int = 12
    out_dir: str = field(default_factory=lambda: os.environ.get("FERMI_LAB_OUT", "out"))
    seed: int = 0
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ConfigError("beta must be positive")
        for name in ("lam", "mu"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
        if self.lam is not None and self.lam <= 0.0:
            raise ConfigError("lambda must be positive")
        for name in ("n", "M", "N"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")
        if self.t_points < 2 or not 0.0 < self.t_min < self.t_max:
            raise ConfigError("bad t grid")
        if not 1 <= self.m_min <= self.m_max:
            raise ConfigError("bad schedule range")


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _build_potential(kind, amplitude, period, well_lo, well_hi, table_file):
    try:
        if kind == "Zero":
            return pot.zero()
        if kind == "Constant":
            return pot.constant(amplitude)
        if kind == "Cosine":
            return pot.cosine(amplitude, period)
        if kind == "SquareWell":
            return pot.square_well(amplitude, well_lo, well_hi)
        if kind == "Tabulated":
            if not table_file:
                raise ConfigError("Tabulated potential needs a file")
            return pot.load_tabulated(table_file)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad potential: {exc}") from exc
    raise ConfigError(f"unknown potential kind {kind!r}")


def load_config_file(path) -> dict:
    """Flat sectioned key-value file -> plain dict; unknown keys rejected."""
    cp = ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    out: dict = {}
    for section in cp.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, val in cp.items(section):
            if key not in _CONFIG_SCHEMA[section]:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            out[f"{section}.{key}"] = val.strip()
    return out


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    """defaults < config file < command-line flags."""
    experiment = _SUBCOMMAND_TO_EXPERIMENT.get(args.subcommand, args.subcommand)
    file_kv = load_config_file(args.config) if args.config else {}
    if "experiment.name" in file_kv:
        exp = file_kv["experiment.name"]
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r} in config")
        if args.subcommand not in ("run",) and exp != experiment:
            raise ConfigError(
                f"config names experiment {exp!r} but subcommand is {experiment!r}"
            )
        experiment = exp

    def pick(flag_val, file_key, cast, default):
        if flag_val is not None:
            return flag_val
        if file_key in file_kv:
            try:
                return cast(file_kv[file_key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {file_key}: {file_kv[file_key]!r}") from exc
        return default

    default_kind = "Cosine" if experiment in ("weyl", "theorem1", "theorem2", "theorem3") else "Zero"
    kind = pick(args.potential, "potential.kind", str, default_kind)
    amplitude = pick(args.amplitude, "potential.amplitude", float, 1.0)
    period = pick(args.period, "potential.period", float, 1.0)
    well_lo = pick(args.well_lo, "potential.well_lo", float, 0.25)
    well_hi = pick(args.well_hi, "potential.well_hi", float, 0.75)
    table_file = pick(args.table_file, "potential.file", str, None)
    potential = _build_potential(kind, amplitude, period, well_lo, well_hi, table_file)

    mu_list = pick(args.mu_list, "params.mu_list", _parse_floats, None)
    if isinstance(mu_list, str):
        mu_list = _parse_floats(mu_list)
    lam_list = pick(args.lam_list, "params.lambda_list", _parse_floats, None)
    if isinstance(lam_list, str):
        lam_list = _parse_floats(lam_list)

    try:
        return ExperimentConfig(
            experiment=experiment,
            potential=potential,
            beta=pick(args.beta, "params.beta", float, 1.0),
            lam=pick(args.lam, "params.lambda", float, None),
            n=pick(args.n, "params.n", int, None),
            M=pick(args.M, "params.m", int, None),
            N=pick(args.N, "params.n_particles", int, None),
            mu=pick(args.mu, "params.mu", float, None),
            mu_list=mu_list,
            lam_list=lam_list,
            t_min=pick(args.t_min, "params.t_min", float, 10.0),
            t_max=pick(args.t_max, "params.t_max", float, 500.0),
            t_points=pick(args.t_points, "params.t_points", int, 1000),
            m_min=pick(None, "params.m_min", int, 4),
            m_max=pick(None, "params.m_max", int, 12),
            out_dir=pick(
                args.out, "output.dir", str, os.environ.get("FERMI_LAB_OUT", "out")
            ),
            seed=pick(args.seed, "params.seed", int, 0),
            threads=pick(args.threads, "params.threads", int, None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_table(config: ExperimentConfig, name: str, table: asymptotics.SweepTable) -> str:
    csv_path = os.path.join(config.out_dir, f"{name}.csv")
    asymptotics.table_to_csv(table, csv_path)
    asymptotics.table_to_json(
        table,
        os.path.join(config.out_dir, f"{name}.json"),
        extra_meta={
            "potential_id": pot.content_hash(config.potential),
            "potential_kind": config.potential.kind,
            "sup_norm": pot.sup_norm(config.potential),
            "seed": config.seed,
            "version": __version__,
        },
    )
    return csv_path


def _summarize(name: str, table: asymptotics.SweepTable, path: str) -> None:
    worst = max((abs(r.ratio - 1.0) for r in table.rows), default=0.0)
    nflag = sum(1 for r in table.rows if r.flag)
    print(f"{name}: {len(table.rows)} rows, max|ratio-1|={worst:.3e}, flagged={nflag} -> {path}")


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; writes artifacts atomically; returns exit code."""
    if config.threads is not None:
        import numba

        numba.set_num_threads(max(1, config.threads))
    os.makedirs(config.out_dir, exist_ok=True)
    exp = config.experiment
    beta = config.beta
    spec = config.potential

    if exp == "spectrum":
        lam = config.lam if config.lam is not None else math.pi
        M = config.M if config.M is not None else 50
        n = config.n if config.n is not None else spm.suggest_grid_size(lam, M, pot.sup_norm(spec))
        sp = spm.compute_spectrum(spec, lam, n, M)
        path = os.path.join(config.out_dir, "spectrum.csv")
        spm.spectrum_to_csv(sp, path)
        print(f"spectrum: {M} levels on n={n} grid, lam={lam} -> {path}")
        return 0

    if exp == "canonical":
        lam = config.lam if config.lam is not None else 8.0
        N = config.N if config.N is not None else 32
        M0 = ensembles.plan_canonical_M(lam, beta, N, pot.sup_norm(spec))
        n = spm.suggest_grid_size(lam, M0, pot.sup_norm(spec))
        sp = spm.compute_spectrum(spec, lam, n, M0)
        res = ensembles.canonical_log_z(sp, N, ensembles.ThermoParams(beta=beta))
        path = os.path.join(config.out_dir, "canonical.csv")
        atomic_write_text(
            path,
            "N,beta,log_z,trunc_bound\n"
            f"{N},{fmt(beta)},{fmt(res.log_z)},{fmt(res.truncation_bound)}\n",
        )
        print(f"canonical: ln Z_{N} = {res.log_z:.12g} (M={res.M_used}) -> {path}")
        return 0

    if exp == "grand":
        lam = config.lam if config.lam is not None else 10.0
        mus = config.mu_list or ((config.mu,) if config.mu is not None else (5.0,))
        lines = ["mu,beta,log_xi,tail_bound"]
        M_used = 0
        for mu in mus:
            M0 = ensembles.plan_grand_M(lam, beta, mu, pot.sup_norm(spec))
            n = spm.suggest_grid_size(lam, M0, pot.sup_norm(spec))
            sp = spm.compute_spectrum(spec, lam, n, M0)
            res = ensembles.grand_log_xi(sp, ensembles.ThermoParams(beta=beta, mu=mu))
            M_used = max(M_used, res.M_used)
            lines.append(f"{fmt(mu)},{fmt(beta)},{fmt(res.log_xi)},{fmt(res.tail_bound)}")
        path = os.path.join(config.out_dir, "grand.csv")
        atomic_write_text(path, "\n".join(lines) + "\n")
        print(f"grand: {len(mus)} mu values, M<={M_used} -> {path}")
        return 0

    if exp == "weyl":
        lam = config.lam if config.lam is not None else 10.0
        C = pot.sup_norm(spec)
        M = config.M
        if M is None:
            M = int(math.ceil(lam * math.sqrt(config.t_max + C + 1.0) / math.pi * 1.2)) + 5
        n = config.n if config.n is not None else spm.suggest_grid_size(lam, M, C)
        sp = spm.compute_spectrum(spec, lam, n, M)
        t_grid = np.linspace(config.t_min, config.t_max, config.t_points)
        table = asymptotics.weyl_table(sp, t_grid)
        path = _write_table(config, "weyl", table)
        dev = max(abs(r.ratio) for r in table.rows)
        print(f"weyl: {len(table.rows)} rows, max|dev|={dev:.4f} -> {path}")
        return 4 if table.flagged else 0

    if exp == "theorem1":
        schedule = [(m * m, float(m)) for m in range(config.m_min, config.m_max + 1)]
        table = asymptotics.theorem1_sweep(spec, beta, schedule)
        path = _write_table(config, "theorem1", table)
        _summarize("theorem1", table, path)
        return 4 if table.flagged else 0

    if exp == "theorem2":
        lam = config.lam if config.lam is not None else asymptotics.THEOREM2_LAM
        mus = config.mu_list or asymptotics.THEOREM2_MU_LIST
        table = asymptotics.theorem2_sweep(spec, lam, beta, mus)
        path = _write_table(config, "theorem2", table)
        _summarize("theorem2", table, path)
        return 4 if table.flagged else 0

    if exp == "theorem3":
        mus = config.mu_list or asymptotics.THEOREM3_MU_LIST
        lams = config.lam_list or asymptotics.THEOREM3_LAM_LIST
        table = asymptotics.theorem3_sweep(spec, beta, mus, lams)
        path = _write_table(config, "theorem3", table)
        _summarize("theorem3", table, path)
        return 4 if table.flagged else 0

    if exp == "est1":
        lam = config.lam if config.lam is not None else 8.0
        N = config.N if config.N is not None else 8 * int(lam)
        lhs, rhs = asymptotics.est1_check(lam, N, beta)
        path = os.path.join(config.out_dir, "est1.csv")
        atomic_write_text(
            path,
            "lam,N,beta,lhs,rhs\n"
            f"{fmt(lam)},{N},{fmt(beta)},{fmt(lhs)},{fmt(rhs)}\n",
        )
        ok = lhs <= rhs
        print(f"est1: lhs={lhs:.6f} rhs={rhs:.6f} bound_holds={ok} -> {path}")
        return 0 if ok else 4

    if exp == "consistency":
        rng = np.random.default_rng(config.seed)
        lines = ["trial,M,beta,mu,discrepancy"]
        worst = 0.0
        for trial in range(50):
            M = 20
            evs = np.cumsum(rng.uniform(0.05, 1.0, size=M))
            sp = ensembles.spectrum_from_eigenvalues(evs)
            b = float(rng.choice([0.5, 1.0, 2.0]))
            mu = float(rng.uniform(-2.0, 5.0))
            d = ensembles.grand_canonical_consistency_check(sp, b, mu, M)
            worst = max(worst, d)
            lines.append(f"{trial},{M},{fmt(b)},{fmt(mu)},{fmt(d)}")
        path = os.path.join(config.out_dir, "consistency.csv")
        atomic_write_text(path, "\n".join(lines) + "\n")
        print(f"consistency: 50 trials, worst discrepancy {worst:.3e} -> {path}")
        return 0 if worst < 1e-10 else 4

    raise ConfigError(f"unknown experiment {exp!r}")


def _selftest(threads: int | None) -> int:
    """Reduced-scale oracle and invariant suite; prints one line per check."""
    import time

    if threads is not None:
        import numba

        numba.set_num_threads(max(1, threads))
    t_start = time.perf_counter()
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}{(' ' + detail) if detail else ''}")

    rng = np.random.default_rng(20260823)

    specs = [
        pot.zero(),
        pot.constant(-1.7),
        pot.cosine(1.3, 0.7),
        pot.square_well(2.0, 0.2, 0.6),
        pot.tabulated([(0.0, -2.0), (0.5, 3.0), (1.0, 0.0)]),
    ]
    ok = True
    for sp in specs:
        xs = rng.uniform(0.0, 10.0, size=2000)
        vals = pot.evaluate_on_grid(sp, xs, 10.0)
        ok &= bool(np.all(np.abs(vals) <= pot.sup_norm(sp) + 1e-15))
    check("potential sup-norm dominates samples", ok)

    grid_ok = True
    sp = spm.compute_spectrum(pot.zero(), math.pi, 1000, 50, rel_tol=1e-13)
    for k in range(1, 51):
        ref = spm.discrete_free_eigenvalue(k, sp.grid)
        grid_ok &= abs(sp.eigenvalues[k - 1] - ref) <= 1e-12 * ref
    check("solver matches closed-form discrete eigenvalues", grid_ok)

    e1 = spm.compute_spectrum(pot.zero(), math.pi, 500, 10).eigenvalues
    e2 = spm.compute_spectrum(pot.zero(), math.pi, 1000, 10).eigenvalues
    exact = np.array([spm.free_eigenvalue(k, math.pi) for k in range(1, 11)])
    factors = (exact - e1) / (exact - e2)
    check(
        "discretization error is second order",
        bool(np.all((factors > 3.6) & (factors < 4.4))),
    )

    dp_ok = True
    for _ in range(40):
        M = int(rng.integers(3, 13))
        N = int(rng.integers(1, min(M, 6) + 1))
        evs = np.cumsum(rng.uniform(0.05, 1.5, size=M))
        b = float(rng.choice([0.5, 1.0, 2.0]))
        asp = ensembles.spectrum_from_eigenvalues(evs)
        got = ensembles.canonical_log_z(asp, N, ensembles.ThermoParams(beta=b)).log_z
        ref = ensembles.canonical_log_z_bruteforce(evs, N, b)
        dp_ok &= abs(got - ref) <= 1e-12 * max(1.0, abs(ref))
    check("canonical recursion matches subset-sum oracle", dp_ok)

    cons_ok = True
    for _ in range(10):
        evs = np.cumsum(rng.uniform(0.05, 1.0, size=20))
        asp = ensembles.spectrum_from_eigenvalues(evs)
        d = ensembles.grand_canonical_consistency_check(
            asp, 1.0, float(rng.uniform(-1.0, 3.0)), 20
        )
        cons_ok &= d < 1e-10
    check("grand sum equals fugacity series", cons_ok)

    lhs, rhs = asymptotics.est1_check(4.0, 16, 1.0)
    check("supercritical upper bound holds", lhs <= rhs, f"lhs={lhs:.3f} rhs={rhs:.3f}")

    # exact box eigenvalues k^2: the counting deviation F(t) - sqrt(t) lies in (-1, 0]
    wsp = ensembles.spectrum_from_eigenvalues(
        np.array([float(k * k) for k in range(1, 42)]), lam=math.pi
    )
    table = asymptotics.weyl_table(wsp, np.linspace(2.0, 900.0, 200))
    devs = [r.ratio for r in table.rows]
    # 1e-12 covers roundoff of lam sqrt(t) / pi at square t
    check("free counting stays within (-1, 0]", all(-1.0 < d <= 1e-12 for d in devs))

    t1 = asymptotics.theorem1_sweep(pot.cosine(1.0, 1.0), 1.0, [(m * m, float(m)) for m in (4, 5, 6)])
    check(
        "canonical ratio bound dominates",
        all(abs(r.ratio - 1.0) <= r.bound for r in t1.rows),
    )

    import tempfile

    with tempfile.TemporaryDirectory() as td:
        cfg = ExperimentConfig(
            experiment="theorem2",
            potential=pot.cosine(1.0, 1.0),
            beta=1.0,
            lam=3.0,
            mu_list=(25.0, 50.0),
            out_dir=os.path.join(td, "a"),
        )
        run(cfg)
        run(replace(cfg, out_dir=os.path.join(td, "b")))
        with open(os.path.join(td, "a", "theorem2.csv"), "rb") as fh:
            blob_a = fh.read()
        with open(os.path.join(td, "b", "theorem2.csv"), "rb") as fh:
            blob_b = fh.read()
        check("repeated runs are byte-identical", blob_a == blob_b)

    n_pass = sum(1 for _, ok, _ in results if ok)
    dt = time.perf_counter() - t_start
    print(f"selftest: {n_pass}/{len(results)} passed in {dt:.1f}s")
    return 0 if n_pass == len(results) else 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file path")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--beta", type=float, help="inverse temperature")
    p.add_argument("--potential", help="potential kind", choices=pot.KINDS)
    p.add_argument("--amplitude", type=float, help="potential amplitude")
    p.add_argument("--period", type=float, help="Cosine period")
    p.add_argument("--well-lo", dest="well_lo", type=float, help="SquareWell lower edge")
    p.add_argument("--well-hi", dest="well_hi", type=float, help="SquareWell upper edge")
    p.add_argument("--table-file", dest="table_file", help="Tabulated potential file")
    p.add_argument("--lambda", dest="lam", type=float, help="box length")
    p.add_argument("--grid", dest="n", type=int, help="interior grid points")
    p.add_argument("--levels", dest="M", type=int, help="eigenvalue count")
    p.add_argument("--n-particles", dest="N", type=int, help="particle number")
    p.add_argument("--mu", type=float, help="chemical potential")
    p.add_argument("--mu-list", dest="mu_list", type=_parse_floats, help="comma-separated mu values")
    p.add_argument(
        "--lambda-list", dest="lam_list", type=_parse_floats, help="comma-separated box lengths"
    )
    p.add_argument("--t-min", dest="t_min", type=float, help="counting grid start")
    p.add_argument("--t-max", dest="t_max", type=float, help="counting grid end")
    p.add_argument("--t-points", dest="t_points", type=int, help="counting grid size")
    p.add_argument("--seed", type=int, help="seed for randomized suites")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fermi-lab",
        description="Spectra and Fermi partition functions of -d2/dx2 + V on [0, L]",
    )
    parser.add_argument("--version", action="version", version=f"fermi-lab {__version__} ({build_describe()})")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("spectrum", "canonical", "grand", "weyl", "thm1", "thm2", "thm3", "est1", "consistency"):
        _add_common(sub.add_parser(name, help=f"run the {name} experiment"))
    st = sub.add_parser("selftest", help="reduced-scale oracle and invariant suite")
    st.add_argument("--threads", type=int, help="worker threads")

    args = parser.parse_args(argv)
    if args.subcommand == "selftest":
        return _selftest(args.threads)
    try:
        config = _resolve(args)
        return run(config)
    except ConfigError as exc:
        print(f"ERROR code=2 kind=config msg={exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"ERROR code=3 kind=capacity msg={exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
