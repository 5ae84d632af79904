"""Batch command-line front end.

    weylab constants   [--units cgs|natural] [--mass M]
    weylab ab          [--flux F] [--charge E] [--mass M] [--eI-override X] [--t T] [--y Y]
                       [--x-range LO HI] [--samples N] [--p-A P]
    weylab trajectories [same physics flags] [--n N] [--steps K] [--seed S]
    weylab oscillator  [--lambdas LX LY LZ] [--charge E] [--mass M] [--eI-override X] [--nmax N]
    weylab spectrum    [--n NX NY NZ] [--p PX PY PZ] [--omega-range LO HI] [--samples N] [--t T]
                       [--ratio-imag R] [--history-scale S] [--long-time | --small-t]
                       [--elements unit|computed] [--vbar RE IM] [--v RE IM]

Every subcommand writes one CSV (header row, UTF-8, LF, 17 significant
digits) to ``--out`` or stdout. Exit codes: 0 success, 1 numerical failure,
2 usage error. Failures print ``ERROR <code> <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import abdensity, bohmian, oscillator, spectroscopy
from .constants import Particle, constants_table, units
from .errors import DomainError, WeylabError
from .wavepacket import double_slit_state

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    units: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0


# ------------------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(name):
    def conv(s):
        v = float(s)
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive and finite, got {s}")
        return v

    return conv


def _finite(s):
    v = float(s)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {s}")
    return v


def _count(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _level(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"quantum numbers are non-negative, got {s}")
    return v


def _common(p):
    p.add_argument("--units", choices=("cgs", "natural"), default="cgs", help="unit system for all inputs and outputs")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def _slit_physics(p):
    p.add_argument("--flux", type=_finite, default=math.pi / 4, help="loop flux Phi_L")
    p.add_argument("--charge", type=_finite, default=0.0, help="real charge e")
    p.add_argument("--mass", type=_positive("mass"), help="particle mass (default: electron mass, or 1 in natural units)")
    p.add_argument("--eI-override", dest="eI_override", type=_finite, help="use this imaginary coupling instead of m sqrt(G)")
    p.add_argument("--t", type=_positive("t"), default=0.7, help="time after the slits (dimensionless)")
    p.add_argument("--tol", type=_positive("tol"), default=1e-6, help="trajectory integration tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weylab", description="Scale-coupled pilot-wave simulations (CSV output).")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="coupling constants and flux estimates")
    _common(p)
    p.add_argument("--mass", type=_positive("mass"), help="mass for e_I and the 10%% flux (default: electron mass)")

    p = sub.add_parser("ab", help="double-slit densities along a screen line")
    _common(p)
    _slit_physics(p)
    p.add_argument("--y", type=_finite, default=3.5, help="screen line y")
    p.add_argument("--x-range", dest="x_range", type=_finite, nargs=2, default=(-6.0, 6.0), metavar=("LO", "HI"))
    p.add_argument("--samples", type=_count, default=241)
    p.add_argument("--p-A", dest="p_A", type=_finite, default=0.5, help="slit-A weight in the averaged density")

    p = sub.add_parser("trajectories", help="pilot-wave trajectories from |psi(.,0)|^2")
    _common(p)
    _slit_physics(p)
    p.add_argument("--n", type=_count, default=100, help="number of trajectories")
    p.add_argument("--steps", type=_count, default=8, help="number of time samples on [0, t]")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oscillator", help="complex oscillator levels")
    _common(p)
    p.add_argument("--lambdas", type=_positive("lambda"), nargs=3, default=(1.0, 1.0, 1.0))
    p.add_argument("--charge", type=_positive("charge"), help="real charge (default: e)")
    p.add_argument("--mass", type=_positive("mass"))
    p.add_argument("--eI-override", dest="eI_override", type=_finite)
    p.add_argument("--nmax", type=_level, default=2, help="list levels with every n_j <= nmax")

    p = sub.add_parser("spectrum", help="first-order resonance scan")
    _common(p)
    p.add_argument("--n", type=_level, nargs=3, default=(1, 0, 0), metavar=("NX", "NY", "NZ"))
    p.add_argument("--p", type=_level, nargs=3, default=(0, 0, 0), metavar=("PX", "PY", "PZ"))
    p.add_argument("--lambdas", type=_positive("lambda"), nargs=3, default=(1.0, 1.0, 1.0))
    p.add_argument("--charge", type=_positive("charge"))
    p.add_argument("--mass", type=_positive("mass"))
    p.add_argument("--ratio-imag", dest="ratio_imag", type=_finite, help="set omega^I/omega^R of every oscillator frequency")
    p.add_argument("--omega-range", dest="omega_range", type=_positive("omega"), nargs=2, metavar=("LO", "HI"))
    p.add_argument("--samples", type=_count, default=401)
    p.add_argument("--t", type=_positive("t"), default=10.0, help="half-length of the interaction window")
    p.add_argument("--amplitude", type=_positive("amplitude"), default=1e-3, help="vector-potential amplitude A0")
    p.add_argument("--history-scale", dest="history_scale", type=_positive("history-scale"), default=1.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--long-time", dest="long_time", action="store_true", help="use the long-time Lorentzian form")
    g.add_argument("--small-t", dest="small_t", action="store_true", help="use the small-t form")
    p.add_argument("--elements", choices=("unit", "computed"), default="unit", help="unit: Vbar=1, V=0; computed: quadrature")
    p.add_argument("--vbar", type=_finite, nargs=2, metavar=("RE", "IM"), help="override Vbar")
    p.add_argument("--v", type=_finite, nargs=2, metavar=("RE", "IM"), help="override V")
    p.add_argument("--k-hat", dest="k_hat", type=_finite, nargs=3, default=(0.0, 0.0, 1.0))
    p.add_argument("--eps-hat", dest="eps_hat", type=_finite, nargs=3, default=(1.0, 0.0, 0.0))
    return parser


def parse_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "units", "out", "seed")}
    cfg = RunConfig(ns.subcommand, ns.units, params, ns.out, getattr(ns, "seed", 0))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    p = cfg.params
    if cfg.subcommand == "ab":
        lo, hi = p["x_range"]
        if not lo < hi:
            raise UsageError("--x-range needs LO < HI")
        if not 0 <= p["p_A"] <= 1:
            raise UsageError("--p-A must lie in [0, 1]")
    if cfg.subcommand == "spectrum":
        if p["omega_range"] and not p["omega_range"][0] < p["omega_range"][1]:
            raise UsageError("--omega-range needs LO < HI")
        if tuple(p["n"]) == tuple(p["p"]):
            raise UsageError("--n and --p must differ")
        if p["ratio_imag"] is not None and abs(p["ratio_imag"]) >= 1:
            raise UsageError("--ratio-imag must have magnitude below 1")
        try:
            spectroscopy.DriveField(1.0, 1.0, tuple(p["k_hat"]), tuple(p["eps_hat"]))
        except DomainError as exc:
            raise UsageError(str(exc)) from None


# ------------------------------------------------------------------------- running


def _workers() -> int:
    raw = os.environ.get("WEYLAB_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"WEYLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"WEYLAB_THREADS must be a positive integer, got {raw!r}")
    return n


def _chunked(fn, n_items: int, workers: int):
    """Apply fn(slice) over contiguous chunks, results in order."""
    bounds = np.linspace(0, n_items, min(workers, max(n_items, 1)) + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(len(slices)) as ex:
        return list(ex.map(fn, slices))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else format(v, ".17g")


def _render(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".weylab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _particle(cfg: RunConfig) -> Particle:
    c = units(cfg.units)
    p = cfg.params
    mass = p.get("mass") or c.m_e
    if p.get("eI_override") is not None:
        # Particle derives e_I = m sqrt(G); pick the mass that gives the override
        mass = abs(p["eI_override"]) / math.sqrt(c.G)
        if p["eI_override"] < 0:
            raise UsageError("--eI-override must be non-negative")
    return Particle(mass, p.get("charge") or 0.0, c)


def _run_constants(cfg):
    c = units(cfg.units)
    rows = constants_table(c, cfg.params.get("mass"))
    return _render(["name", "value", "unit"], rows)


def _run_ab(cfg):
    p = cfg.params
    particle = _particle(cfg)
    flux = abdensity.FluxConfig(p["flux"])
    state = double_slit_state()
    xs = np.linspace(p["x_range"][0], p["x_range"][1], p["samples"])
    ys = np.full(xs.shape, p["y"])
    t = p["t"]
    parts = _chunked(
        lambda s: abdensity.labels(xs[s], ys[s], t, state, particle, flux, p["tol"]), xs.size, _workers()
    )
    which = np.concatenate(parts)
    via_a, via_b = abdensity.branch_densities(xs, ys, t, state, particle, flux)
    pilot = np.where(which == "A", via_a, via_b).astype(float)
    pilot[which == bohmian.UNDECIDED] = np.nan
    ortho = abdensity.density_orthodox(xs, ys, t, state, particle, flux)
    avg = abdensity.density_averaged(xs, ys, t, state, particle, flux, p["p_A"])
    rows = zip(xs, ortho, pilot, which, avg)
    return _render(["x", "density_orthodox", "density_pilot", "which_way", "density_averaged"], rows)


def _run_trajectories(cfg):
    p = cfg.params
    particle = _particle(cfg)
    flux = abdensity.FluxConfig(p["flux"])
    guide = flux.guiding_state(double_slit_state(), particle)
    rng = np.random.default_rng(cfg.seed)
    x0, y0 = bohmian.sample_positions(guide, p["n"], rng, 0.0)
    times = np.linspace(0.0, p["t"], p["steps"] + 1) if p["steps"] > 1 else np.array([0.0, p["t"]])
    parts = _chunked(lambda s: bohmian.flow(guide, x0[s], y0[s], 0.0, times, tol=p["tol"]), x0.size, _workers())
    X = np.vstack([e.x for e in parts])
    Y = np.vstack([e.y for e in parts])
    failed = np.concatenate([e.failed for e in parts])
    lab = bohmian._labels(X[:, 0], 0.0)
    if failed.any():
        print(f"WARNING node {int(failed.sum())} trajectories stopped at a node and are truncated", file=sys.stderr)
    rows = []
    for i in range(X.shape[0]):
        for j, tj in enumerate(times):
            if np.isnan(X[i, j]):
                break
            rows.append((i, tj, X[i, j], Y[i, j], lab[i]))
    return _render(["trajectory_id", "t", "x", "y", "which_way"], rows)


def _osc_coupling(cfg):
    c = units(cfg.units)
    p = cfg.params
    charge = p.get("charge") or c.e
    mass = p.get("mass") or c.m_e
    e_imag = math.sqrt(c.G) * mass
    if p.get("eI_override") is not None:
        e_imag = p["eI_override"]
    r = p.get("ratio_imag")
    if r is not None:
        # omega = sqrt(e_C lambda^2 / m) has Im/Re = tan(arg(e_C) / 2)
        e_imag = charge * math.tan(2 * math.atan(r))
    return complex(charge, e_imag), mass, c


def _run_oscillator(cfg):
    p = cfg.params
    e_c, mass, c = _osc_coupling(cfg)
    omega = oscillator.frequencies(p["lambdas"], e_c, mass)
    rows = []
    for n in spectroscopy.box_basis((p["nmax"],) * 3):
        E = oscillator.eigenvalue(n, omega, c.hbar)
        rows.append((*n, E.real, E.imag))
    return _render(["nx", "ny", "nz", "re_E", "im_E"], rows)


def _run_spectrum(cfg):
    p = cfg.params
    e_c, mass, c = _osc_coupling(cfg)
    omega_osc = oscillator.frequencies(p["lambdas"], e_c, mass)
    n, lvl_p = tuple(p["n"]), tuple(p["p"])
    En = oscillator.eigenvalue(n, omega_osc, c.hbar)
    Ep = oscillator.eigenvalue(lvl_p, omega_osc, c.hbar)
    wR = (En.real - Ep.real) / c.hbar
    wI = (En.imag - Ep.imag) / c.hbar
    if wR <= 0:
        raise UsageError("the scan needs an upward transition (E^R_n > E^R_p)")
    t = p["t"]
    N = p["samples"]
    if p["omega_range"]:
        omegas = np.linspace(*p["omega_range"], N)
    else:
        half = 10 * abs(wI) if p["long_time"] else 4 * math.pi / t
        half = min(half, 0.99 * wR)
        k = np.arange(N) - (N - 1) // 2
        omegas = wR + (half / max((N - 1) // 2, 1)) * k
    drive = spectroscopy.DriveField(p["amplitude"], wR, tuple(p["k_hat"]), tuple(p["eps_hat"]))
    if p["elements"] == "computed":
        pair = spectroscopy.TransitionPair.from_levels(n, lvl_p, omega_osc, drive, mass, c.hbar, c.c)
    else:
        pair = spectroscopy.TransitionPair(
            lvl_p, n, wR, wI, 0j, 1 + 0j, En.imag, spectroscopy.level_norm(n, omega_osc, mass, c.hbar)
        )
    if p["vbar"] is not None or p["v"] is not None:
        V = complex(*p["v"]) if p["v"] is not None else pair.V
        Vb = complex(*p["vbar"]) if p["vbar"] is not None else pair.V_bar
        pair = spectroscopy.TransitionPair(pair.p, pair.n, wR, wI, V, Vb, pair.energy_imag_n, pair.norm_n)
    formula = "long_t" if p["long_time"] else "small_t" if p["small_t"] else "exact"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spectroscopy.RegimeWarning)
        kw = dict(e_complex=e_c, mass=mass, c=c.c, omega=omegas)
        if formula == "exact":
            c1sq = np.abs(spectroscopy.c1(t, pair, drive, **kw)) ** 2
        elif formula == "long_t":
            c1sq = spectroscopy.c1_squared_long_t(t, pair, drive, **kw)
        else:
            c1sq = spectroscopy.c1_squared_small_t(t, pair, drive, **kw)
        prob = spectroscopy.transition_probability(
            t, pair, drive, p["history_scale"], hbar=c.hbar, formula=formula, **kw
        )
    ok = formula == "exact" or spectroscopy.regime_ok(t, pair, formula == "long_t")
    flag = "ok" if ok else "outside-regime"
    rows = ((w, a, b, flag) for w, a, b in zip(omegas, c1sq, prob))
    return _render(["omega", "c1sq", "probability", "regime_flag"], rows)


_RUNNERS = {
    "constants": _run_constants,
    "ab": _run_ab,
    "trajectories": _run_trajectories,
    "oscillator": _run_oscillator,
    "spectrum": _run_spectrum,
}


def run(cfg: RunConfig) -> int:
    try:
        text = _RUNNERS[cfg.subcommand](cfg)
        _emit(text, cfg.out)
    except UsageError as exc:
        print(f"ERROR usage {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"ERROR {exc.code} {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WeylabError as exc:
        print(f"ERROR {exc.code} {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ERROR numeric {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"ERROR usage {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
