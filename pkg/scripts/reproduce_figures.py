"""Regenerate every data table (and SVG) behind the figures.

    python scripts/reproduce_figures.py [--out results] [--quick]

--quick shrinks the CFL scan to 11x11 and the error maps to 100x50 points.
"""
import argparse
import sys
from pathlib import Path

from frlab.cli import main as frlab


def run(argv):
    print("frlab", " ".join(argv), file=sys.stderr)
    code = frlab(argv)
    if code:
        raise SystemExit(code)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    out = Path(args.out)

    # dispersion / dissipation: stable, unstable, filtered
    run(["dispersion", "--tau", "0.166", "--out", str(out / "dispersion_tau0.166"), "--svg"])
    run(["dispersion", "--tau", "0.17", "--out", str(out / "dispersion_tau0.17"), "--svg"])
    run(["dispersion", "--tau", "0.17", "--sigma", "0.6", "--filter-mode", "full",
         "--out", str(out / "dispersion_tau0.17_sigma0.6"), "--svg"])

    # CFL limit over (iota, sigma)
    scan = ["--n-iota", "11", "--sigma-step", "0.1"] if args.quick else []
    for mode in ("full", "diff"):
        run(["cfl-scan", "--filter-mode", mode, *scan, "--out", str(out / f"cflmap_{mode}"), "--svg"])

    # error maps, semi-discrete unfiltered / filtered, then fully discrete
    grid = ["--nk", "100", "--nt", "50"] if args.quick else []
    run(["error-map", *grid, "--out", str(out / "errormap_semi"), "--svg"])
    run(["error-map", *grid, "--sigma", "0.6", "--out", str(out / "errormap_semi_sigma0.6"), "--svg"])
    run(["error-map", *grid, "--tau", "0.166", "--tmin", "1", "--tmax", "1e5",
         "--out", str(out / "errormap_fully_tau0.166"), "--svg"])
    run(["error-map", *grid, "--tau", "0.17", "--tmin", "1", "--tmax", "1e5",
         "--out", str(out / "errormap_fully_tau0.17"), "--svg"])

    # advection: wave input above the unfiltered limit, bump, order studies
    for tag, extra in (("plain", []), ("sigma0.6", ["--sigma", "0.6"])):
        run(["advect", "--case", "wave", "--n-elements", "100", "--cfl", "0.17", *extra,
             "--out", str(out / f"wave_{tag}"), "--svg"])
        run(["advect", "--cfl", "0.16", *extra, "--out", str(out / f"bump_{tag}"), "--svg"])
    run(["advect", "--cfl", "0.16", "--sigma-factor", "1.2", "--out", str(out / "bump_super"), "--svg"])
    for rk, cfl in (("33", "0.167"), ("44", "0.189")):
        for sigma in ("0", "0.6", "1.0"):
            run(["order-study", "--rk", rk, "--cfl", cfl, "--sigma", sigma,
                 "--out", str(out / f"order_rk{rk}_sigma{sigma}"), "--svg"])


if __name__ == "__main__":
    main()
