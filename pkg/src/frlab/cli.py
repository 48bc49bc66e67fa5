"""frlab command line: dispersion, cfl-scan, error-map, advect, order-study, filter-re.

Parameters come from an optional JSON file (--config) overridden by flags.
Summary JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import advect as ad
from . import error as ea
from . import io
from . import vonneumann as vn
from .core import CorrectionScheme, assemble_operators, gauss_points, iota_huynh
from .filtering import FilterMode, FilterSpec, filter_reynolds, filtered_operators


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    p: int = 4
    scheme: str = "huynh"
    iota: float | None = None
    alpha: float = 1.0
    sigma: float = 0.0
    filter_mode: str = "full"
    rk: int = 33
    tau: float | None = None
    cfl: float | None = None
    out: str = "."
    svg: bool = False
    # dispersion / error-map
    nk: int = 400
    nt: int = 200
    tmin: float = 1e-2
    tmax: float = 1e3
    # cfl-scan
    iotas: list | None = None
    sigmas: list | None = None
    n_iota: int = 41
    iota_span: float = 4.0
    sigma_step: float = 0.025
    sigma_max: float = 1.0
    # advect / order-study
    case: str = "bump"
    n_elements: int = 20
    cycles: float = 10.0
    t_end: float | None = None
    width: float = 0.2
    wave_k: float = 1.0
    amplitude: float = 1.0
    sigma_factor: float | None = None  # bump only: sigma = factor * stability edge at the run's tau
    grids: list | None = None
    steps: int = 1000
    # filter-re
    rho: float = 1.0
    u: float = 1.0
    h: float | None = None

    @property
    def rk_order(self):
        return {33: 3, 44: 4, 3: 3, 4: 4}[int(self.rk)]


_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(path):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(repr(k) for k in unknown)}")
    return raw


def build_config(args) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(isinstance(cfg.p, int) and 0 <= cfg.p <= 10, f"p: expected integer in [0, 10], got {cfg.p!r}")
    need(cfg.scheme in ("dg", "huynh", "iota-plus", "custom"), f"scheme: unknown value {cfg.scheme!r}")
    need(0.0 <= cfg.alpha <= 1.0, f"alpha: must lie in [0, 1], got {cfg.alpha}")
    need(cfg.sigma >= 0, f"sigma: must be >= 0, got {cfg.sigma}")
    try:
        FilterMode.parse(cfg.filter_mode)
    except ValueError as exc:
        raise ConfigError(f"filter_mode: {exc}") from None
    need(int(cfg.rk) in (3, 4, 33, 44), f"rk: expected 33 or 44, got {cfg.rk!r}")
    need(cfg.tau is None or cfg.tau > 0, f"tau: must be positive, got {cfg.tau}")
    need(cfg.cfl is None or cfg.cfl > 0, f"cfl: must be positive, got {cfg.cfl}")
    need(cfg.tau is None or cfg.cfl is None, "tau/cfl: give at most one")
    need(cfg.nk >= 2 and cfg.nt >= 1, "nk/nt: grid sizes too small")
    need(cfg.case in ("bump", "wave"), f"case: expected 'bump' or 'wave', got {cfg.case!r}")
    need(cfg.n_elements >= 2, f"n_elements: need at least 2, got {cfg.n_elements}")
    need(cfg.sigma_factor is None or cfg.sigma_factor > 0, f"sigma_factor: must be positive, got {cfg.sigma_factor}")


# --- shared builders ------------------------------------------------------------


def resolve_iota(cfg: RunConfig):
    if cfg.iota is not None:
        return float(cfg.iota), "Custom"
    if cfg.scheme == "dg":
        return 0.0, "DG"
    if cfg.scheme == "huynh":
        return iota_huynh(cfg.p), "Huynh"
    if cfg.scheme == "iota-plus":
        return vn.locate_iota_plus(cfg.p, cfg.rk_order, cfg.alpha)[0], "IotaPlus"
    raise ConfigError("scheme 'custom' needs --iota")


def build_ops(cfg: RunConfig):
    iota, name = resolve_iota(cfg)
    ops = assemble_operators(gauss_points(cfg.p), CorrectionScheme(iota, name), cfg.alpha)
    return filtered_operators(ops, FilterSpec(cfg.sigma, cfg.filter_mode)), iota


def _step(cfg, default):
    """Time step on unit elements; tau and CFL coincide there."""
    return cfg.tau if cfg.tau is not None else (cfg.cfl if cfg.cfl is not None else default)


def _out(cfg):
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- subcommands ----------------------------------------------------------------


def cmd_dispersion(cfg: RunConfig):
    ops, iota = build_ops(cfg)
    tau = _step(cfg, 0.1)
    sc = vn.SpectralConfig(ops, tau=tau, rk_order=cfg.rk_order, khat=vn.default_khat(cfg.nk))
    res = vn.dispersion(sc)
    rep = vn.is_stable(sc)
    out = _out(cfg)
    n = ops.n
    io.write_csv(out / "modes.csv", io.MODES_HEADER, res.rows())
    io.write_csv(out / "dispersion.csv", ("khat", "mode", "value"),
                 ((kh, m, kh * res.c[i, m].real) for i, kh in enumerate(res.khat) for m in range(n)))
    io.write_csv(out / "dissipation.csv", ("khat", "mode", "value"),
                 ((kh, m, kh * res.c[i, m].imag) for i, kh in enumerate(res.khat) for m in range(n)))
    if cfg.svg:
        io.svg_lines(out / "dispersion.svg", [(res.khat, res.khat * res.c[:, m].real, f"mode {m}") for m in range(n)],
                     "Dispersion", "khat", "khat Re(c)")
        io.svg_lines(out / "dissipation.svg", [(res.khat, res.khat * res.c[:, m].imag, f"mode {m}") for m in range(n)],
                     "Dissipation", "khat", "khat Im(c)")
    summary = {
        "p": cfg.p, "iota": iota, "alpha": cfg.alpha, "tau": tau, "rk": cfg.rk,
        "sigma": cfg.sigma, "filter_mode": FilterMode.parse(cfg.filter_mode).value if cfg.sigma > 0 else "none",
        "stable": rep.stable, "worst_khat": rep.worst_khat, "worst_abs_mu": rep.worst_abs_mu,
        "max_abs_mu": float(np.abs(res.mu).max()), "defective_points": int(res.defective.sum()),
    }
    if not rep.stable:
        print(f"unstable: |mu| = {rep.worst_abs_mu:.6f} at khat = {rep.worst_khat:.6f}", file=sys.stderr)
    return summary


def cmd_cfl_scan(cfg: RunConfig):
    iotas = np.asarray(cfg.iotas, float) if cfg.iotas is not None else vn.default_iota_grid(cfg.p, cfg.n_iota, cfg.iota_span)
    sigmas = np.asarray(cfg.sigmas, float) if cfg.sigmas is not None else vn.default_sigma_grid(cfg.sigma_step, cfg.sigma_max)
    m = vn.cfl_scan(cfg.p, cfg.rk_order, cfg.alpha, iotas, sigmas, cfg.filter_mode)
    out = _out(cfg)
    io.write_csv(out / "cflmap.csv", io.CFL_HEADER, m.rows())
    a_iota, a_sigma, a_cfl = m.argmax
    summary = {
        "p": cfg.p, "rk": cfg.rk, "alpha": cfg.alpha, "mode": m.meta["mode"],
        "argmax": {"iota": a_iota, "sigma": a_sigma, "cfl": a_cfl},
        "invalid_cells": int((~m.valid).sum()),
    }
    if np.any(sigmas == 0):
        summary["baseline"] = m.baseline
        summary["boost_percent"] = 100.0 * m.boost
    io.write_json(out / "summary.json", summary)
    if cfg.svg:
        io.svg_heatmap(out / "cflmap.svg", m.sigma, m.iota, m.cfl, "CFL limit", "sigma", "iota")
    return summary


def _oracle_spot_check(ops, khat, times):
    """Worst relative mismatch of the modal error against exp(tQ) on a few samples."""
    worst = 0.0
    for kh in khat[:: max(1, len(khat) // 4)]:
        d = ea.modal_setup(ops, kh)
        b = d.W @ d.beta
        for t in times[:: max(1, len(times) // 4)]:
            e = ea.semi_discrete_error(d, [t])[0]
            ref = expm(t * d.Q) @ b - np.exp(-1j * d.k * t) * b
            worst = max(worst, np.linalg.norm(e - ref) / max(np.linalg.norm(ref), 1e-300))
    return float(worst)


def cmd_error_map(cfg: RunConfig):
    ops, iota = build_ops(cfg)
    khat = vn.default_khat(cfg.nk)
    times = np.logspace(np.log10(cfg.tmin), np.log10(cfg.tmax), cfg.nt)
    tau = _step(cfg, None)
    em = ea.error_map(ops, khat, times, tau=tau, rk_order=cfg.rk_order if tau else None)
    out = _out(cfg)
    io.write_csv(out / "errormap.csv", io.ERROR_HEADER, em.rows())
    io.write_csv(out / "halflife.csv", io.HALF_LIFE_HEADER, em.half_life_rows())
    if cfg.svg:
        io.svg_heatmap(out / "errormap.svg", khat, em.times, em.error.T, "Error", "khat", "t or n", log=True)
    summary = {
        "p": cfg.p, "iota": iota, "kind": em.kind, "convention": em.meta["convention"],
        "max_error": float(np.nanmax(em.error)), "saturated_cells": int(em.saturated.sum()),
        "flagged_khat": em.meta["flagged_khat"],
    }
    if tau is None:
        summary["oracle_max_rel_err"] = _oracle_spot_check(ops, khat, times)
    return summary


def _sim_template(cfg, ops, default_cfl):
    return ad.SimConfig(ops, n_elements=cfg.n_elements, cfl=_step(cfg, default_cfl), rk_order=cfg.rk_order)


def cmd_advect(cfg: RunConfig):
    extra = {}
    if cfg.sigma_factor is not None:
        tau = _step(cfg, 0.16)
        unfiltered, _ = build_ops(replace(cfg, sigma=0.0))
        edge = vn.sigma_edge(unfiltered, tau, cfg.rk_order, cfg.filter_mode)
        if edge <= 0:
            raise ArithmeticError(f"unfiltered scheme is unstable at tau = {tau}; no stable sigma to scale")
        cfg.sigma = cfg.sigma_factor * edge
        extra = {"sigma_edge": edge, "sigma": cfg.sigma, "sigma_factor": cfg.sigma_factor}
    ops, iota = build_ops(cfg)
    out = _out(cfg)
    base = _sim_template(cfg, ops, 0.16)
    if cfg.case == "bump":
        sim = ad.SimConfig(ops, n_elements=cfg.n_elements, ic=ad.GaussianBump(0.5, cfg.width),
                           cfl=base.cfl, t_end=cfg.t_end if cfg.t_end is not None else cfg.cycles,
                           rk_order=cfg.rk_order)
        r = ad.run_bump_case(sim)
        io.write_csv(out / "field.csv", ("x", "u"), zip(sim.nodes().ravel(), r.state.u.real.ravel()))
        if cfg.svg:
            io.svg_lines(out / "field.svg", [(r.x_fine, r.u_fine, "u")], "Bump", "x", "u")
        return {
            "case": "bump", "diverged": r.diverged, "t": r.state.t, "steps": r.state.step_count,
            "l2": r.l2, "linf": r.linf, "umin": r.umin, "peak_x": r.peak_x,
            "peak_value": r.peak_value, "exact_peak_x": r.exact_peak_x, "lag": r.lag,
            "x_umin": float(r.x_fine[np.argmin(r.u_fine)]), **extra,
        }
    sim = ad.SimConfig(ops, n_elements=cfg.n_elements, bc=ad.InflowOutflow(cfg.amplitude, cfg.wave_k),
                       ic=ad.Constant(0.0), cfl=base.cfl, t_end=cfg.t_end if cfg.t_end is not None else 3.0,
                       rk_order=cfg.rk_order)
    w = ad.run_wave_case(sim)
    io.write_csv(out / "probe.csv", ("t", "u"), zip(w.t, w.probe))
    if cfg.svg:
        io.svg_lines(out / "probe.svg", [(w.t, w.probe, "u(x=1)")], "Probe", "t", "u")
    return {"case": "wave", "diverged": w.diverged, "growth": w.growth,
            "max_abs_probe": float(np.nanmax(np.abs(w.probe)))}


def cmd_order_study(cfg: RunConfig):
    ops, iota = build_ops(cfg)
    default = {3: 0.167, 4: 0.189}[cfg.rk_order]
    tmpl = ad.SimConfig(ops, ic=ad.GaussianBump(0.5, cfg.width), cfl=_step(cfg, default), rk_order=cfg.rk_order)
    grids = cfg.grids if cfg.grids is not None else [8, 16, 32, 64]
    st = ad.order_study(tmpl, grids, cfg.steps)
    out = _out(cfg)
    io.write_csv(out / "order.csv", io.ORDER_HEADER, st.rows())
    if cfg.svg:
        io.svg_lines(out / "order.svg", [(st.dx, st.l2, "L2 error")], "Order study", "dx", "error",
                     logx=True, logy=True)
    return {"slope": st.slope, "cfl": tmpl.cfl, "rk": cfg.rk, "diverged": st.diverged.tolist(),
            "l2": st.l2.tolist()}


def cmd_filter_re(cfg: RunConfig):
    tau = _step(cfg, None)
    if tau is None or cfg.h is None:
        raise ConfigError("filter-re needs --tau and --h")
    return filter_reynolds(cfg.rho, cfg.u, tau, cfg.sigma, cfg.h)


COMMANDS = {
    "dispersion": cmd_dispersion,
    "cfl-scan": cmd_cfl_scan,
    "error-map": cmd_error_map,
    "advect": cmd_advect,
    "order-study": cmd_order_study,
    "filter-re": cmd_filter_re,
}


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def make_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of parameters; flags override it")
    common.add_argument("--p", type=int)
    g = common.add_mutually_exclusive_group()
    g.add_argument("--iota", type=float)
    g.add_argument("--scheme", choices=["dg", "huynh", "iota-plus"])
    common.add_argument("--alpha", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--filter-mode", dest="filter_mode", choices=["none", "full", "diff", "correction"])
    common.add_argument("--rk", type=int, choices=[33, 44])
    t = common.add_mutually_exclusive_group()
    t.add_argument("--tau", type=float)
    t.add_argument("--cfl", type=float)
    common.add_argument("--out")
    common.add_argument("--svg", action="store_true", default=None)

    parser = _Parser(prog="frlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dispersion", parents=[common], help="fully discrete dispersion/dissipation")
    d.add_argument("--nk", type=int)

    c = sub.add_parser("cfl-scan", parents=[common], help="CFL limit over (iota, sigma)")
    c.add_argument("--iotas", type=_floats)
    c.add_argument("--sigmas", type=_floats)
    c.add_argument("--n-iota", dest="n_iota", type=int)
    c.add_argument("--iota-span", dest="iota_span", type=float)
    c.add_argument("--sigma-step", dest="sigma_step", type=float)
    c.add_argument("--sigma-max", dest="sigma_max", type=float)

    e = sub.add_parser("error-map", parents=[common], help="analytic error against time and wavenumber")
    for name, typ in (("--nk", int), ("--nt", int), ("--tmin", float), ("--tmax", float)):
        e.add_argument(name, type=typ)

    a = sub.add_parser("advect", parents=[common], help="run the 1D advection solver")
    a.add_argument("--case", choices=["bump", "wave"])
    a.add_argument("--n-elements", dest="n_elements", type=int)
    a.add_argument("--cycles", type=float)
    a.add_argument("--t-end", dest="t_end", type=float)
    a.add_argument("--width", type=float)
    a.add_argument("--wave-k", dest="wave_k", type=float)
    a.add_argument("--amplitude", type=float)
    a.add_argument("--sigma-factor", dest="sigma_factor", type=float,
                   help="set sigma to this multiple of the largest stable sigma at the run's time step")

    o = sub.add_parser("order-study", parents=[common], help="bump error against resolution")
    o.add_argument("--grids", type=_ints)
    o.add_argument("--steps", type=int)
    o.add_argument("--width", type=float)

    f = sub.add_parser("filter-re", parents=[common], help="filter Reynolds number")
    f.add_argument("--rho", type=float)
    f.add_argument("--u", type=float)
    f.add_argument("--h", type=float)
    return parser


def main(argv=None):
    try:
        args = make_parser().parse_args(argv)
        cfg = build_config(args)
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "filter-re":
        print(format(result, ".17g"))
    else:
        print(io.dumps({"command": args.command, "config": asdict(cfg), "result": result}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
