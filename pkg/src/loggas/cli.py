"""Command line front end.

Every subcommand writes one JSON report (or CSV for ``sample``) that embeds
the fully resolved run specification.  Failures print ``{"error": ..., "message": ...}``
and exit non-zero: 2 for usage and missing files, 1 for numerical errors.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .energy import W_LATTICE, Normalization, defect_functional, energy_periodic, energy_report, minimize_energy
from .errors import LogGasError, ParseError
from .field import QuadratureSpec, circulation, default_etas, energy_via_definition, flux_through_circle
from .gibbs import (empirical_pair_correlation, equilibrium_oracle, fekete_optimize, get_potential,
                    kolmogorov_distance, mcmc_sample, rescaled_gaps)
from .process import (count_statistics, pairing_lattice, pairing_periodic, pairing_periodic_mc, theorem1_check)
from .testfunctions import diagonal_bump, parse_phi, product_bump
from .torus import defect_table, load_config, new_config, perturb_lattice, random_config

DEFAULT_SEED = 20240101


def threads():
    try:
        return max(1, int(os.environ.get("LOGGAS_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map, threaded up to ``LOGGAS_THREADS`` workers."""
    items = list(items)
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"expected comma-separated integers, got {text!r}") from None


def _config(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        return load_config(path)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, LogGasError):
            raise
        raise ParseError(f"cannot parse configuration {path}: {exc}") from None


def default_phis():
    """Test functions used by sweeps when none is given on the command line."""
    return [product_bump(0.3, 0.9, -0.2, 1.0), diagonal_bump(0.0, 1.0, 1.2, 0.5), product_bump(-0.5, 0.8, 1.0, 0.8)]


# --- subcommands -------------------------------------------------------------

def cmd_energy(args):
    cfg = _config(args.config)
    rep = energy_report(cfg, args.normalization).to_dict()
    if not args.via_definition:
        return rep
    etas = tuple(_floats(args.eta_levels)) if args.eta_levels else default_etas(cfg)
    spec = QuadratureSpec(etas=etas, y_max=args.ymax, tol=args.tol)
    res = energy_via_definition(cfg, spec)
    return {**rep, "w_definition": res.value, "w_closed_form": rep["w"],
            "difference": res.value - rep["w"], "eta_levels": list(res.levels),
            "brackets": res.brackets, "eta_slope": res.slope, "mesh_gap": res.details["mesh_gap"]}


def cmd_defect(args):
    cfg = _config(args.config)
    table = defect_table(cfg)
    return {"N": cfg.N, "u": table.u.tolist(), "b": table.b.tolist(),
            "defect_paper_rhs": defect_functional(cfg, Normalization.PAPER_RHS),
            "defect_prefactored": defect_functional(cfg, Normalization.PREFACTORED)}


def qlb_corpus(N_values, count, seed):
    """Mixed corpus: half uniform random configurations, half randomly jittered lattices."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        N = int(N_values[k % len(N_values)])
        if k % 2 == 0:
            out.append(random_config(N, rng))
        else:
            amp = 10 ** rng.uniform(-3, math.log10(0.45))
            jitter = rng.uniform(-amp, amp, size=N)
            out.append(perturb_to_config(N, jitter))
    return out


def perturb_to_config(N, jitter):
    return new_config(np.arange(N) + jitter, N)


def qlb_summary(configs, normalization=Normalization.PAPER_RHS):
    def one(cfg):
        rep = energy_report(cfg, normalization)
        return cfg.N, rep.gap, rep.ratio

    rows = parallel_map(one, configs)
    per_n = {}
    for N, gap, ratio in rows:
        if ratio is None:
            continue
        per_n.setdefault(N, []).append(ratio)
    return {
        "count": len(rows),
        "min_gap": min(r[1] for r in rows),
        "nonpositive_ratios": sum(1 for r in rows if r[2] is not None and r[2] <= 0),
        "min_ratio_per_N": {str(N): min(v) for N, v in sorted(per_n.items())},
        "empirical_constant": min(min(v) for v in per_n.values()) if per_n else None,
    }


def cmd_qlb_sweep(args):
    N_values = _ints(args.N)
    configs = qlb_corpus(N_values, args.count, args.seed)
    return {norm.value: qlb_summary(configs, norm) for norm in Normalization}


def cmd_minimize(args):
    if args.config:
        init = _config(args.config)
    else:
        init = random_config(args.N, np.random.default_rng(args.seed))
    res = minimize_energy(init, args.tol)
    gaps = res.gaps()
    return {"points": list(res.points), "period": res.N, "w": energy_periodic(res),
            "gap": energy_periodic(res) - W_LATTICE, "max_spacing_error": float(np.max(np.abs(gaps - 1)))}


def cmd_field_check(args):
    cfg = _config(args.config)
    radii = _floats(args.radii)
    s = 0.5 * cfg.min_gap()
    fluxes = []
    for r in radii:
        if r >= s:
            raise ParseError(f"radius {r} must be below half the minimal gap ({s})")
        for a in cfg.points:
            f = flux_through_circle(cfg, (a, 0.0), r)
            fluxes.append({"center": a, "r": r, "flux": f, "expected": 2 * math.pi * (1 - 2 * r),
                           "error": abs(f - 2 * math.pi * (1 - 2 * r))})
    loops = []
    pts = cfg.array
    for a, b in zip(pts, np.append(pts[1:], pts[0] + cfg.N)):
        rect = (a + 0.25 * (b - a), b - 0.25 * (b - a), -0.5, 0.5)
        c = circulation(cfg, rect)
        perim = 2 * (rect[1] - rect[0]) + 2 * (rect[3] - rect[2])
        loops.append({"rect": list(rect), "circulation": c, "relative": abs(c) / perim})
    return {"fluxes": fluxes, "circulations": loops,
            "max_flux_error": max(f["error"] for f in fluxes) if fluxes else 0.0,
            "max_circulation": max(l["relative"] for l in loops)}


def cmd_correlate(args):
    cfg = _config(args.config)
    phi = parse_phi(args.phi)
    if args.mc:
        res = pairing_periodic_mc(cfg, phi, samples=args.samples, seed=args.seed)
    else:
        res = pairing_periodic(cfg, phi)
    out = res.to_dict()
    out["lattice"] = pairing_lattice(phi).value
    return out


def cmd_counts(args):
    cfg = _config(args.config)
    return count_statistics(cfg, args.T).to_dict()


def theorem1_sweep(N_values, eps_values, phis, modes=None):
    jobs = []
    for N in N_values:
        qs = modes or sorted({1, 2, N // 4})
        for q in qs:
            for k, phi in enumerate(phis):
                for eps in eps_values:
                    jobs.append((N, q, k, eps, phi))

    def one(job):
        N, q, k, eps, phi = job
        rec = theorem1_check(perturb_lattice(N, q, eps), phi)
        return {"N": N, "q": q, "phi": k, "eps": eps, **rec.to_dict()}

    rows = parallel_map(one, jobs)
    ratios = np.array([r["ratio"] for r in rows])
    positive = ratios[ratios > 0]
    return {
        "rows": rows,
        "max_ratio": float(ratios.max()),
        "min_ratio": float(ratios.min()),
        "max_over_min": float(positive.max() / positive.min()) if positive.size else None,
    }


def cmd_theorem1_sweep(args):
    eps = np.geomspace(args.eps_min, args.eps_max, args.eps_count).tolist()
    phis = [parse_phi(p) for p in args.phi] if args.phi else default_phis()
    return theorem1_sweep(_ints(args.N), eps, phis)


def cmd_fekete(args):
    V = get_potential(args.potential)
    res = fekete_optimize(V, args.N, tol=args.tol)
    eq = equilibrium_oracle(V, (-args.grid_halfwidth, args.grid_halfwidth, args.grid_cells))
    return {**res.to_dict(), "kolmogorov": kolmogorov_distance(res.points, eq),
            "oracle_residual": eq.residual}


def cmd_sample(args):
    V = get_potential(args.potential)
    s = mcmc_sample(V, args.N, args.beta, args.steps, args.burn_in, args.thinning, args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(s.to_csv())
    return {"recorded": int(len(s.chains)), "acceptance_rate": s.acceptance_rate,
            "proposal_width": s.proposal_width, "warning": s.warning, "csv": args.out}


def sweep_beta(V, N, betas, seeds, steps, burn_in, thinning, phi=None):
    eq = equilibrium_oracle(V)
    phi = phi or diagonal_bump(0.0, 2.0, 1.0, 0.35)
    lattice_value = pairing_lattice(phi).value

    def one(job):
        beta, seed = job
        s = mcmc_sample(V, N, beta, steps, burn_in, thinning, seed)
        gaps = rescaled_gaps(s, eq)
        pr = empirical_pair_correlation(s, phi, 0.0, eq)
        return {"beta": beta, "seed": seed, "gap_variance": float(np.var(gaps)), "gap_mean": float(np.mean(gaps)),
                "pairing": pr.value, "pairing_se": pr.error_estimate,
                "pairing_distance": abs(pr.value - lattice_value), "acceptance_rate": s.acceptance_rate}

    rows = parallel_map(one, [(b, s) for s in seeds for b in betas])
    monotone = {}
    for seed in seeds:
        v = [r["gap_variance"] for r in rows if r["seed"] == seed]
        monotone[str(seed)] = bool(all(x > y for x, y in zip(v, v[1:])))
    return {"rows": rows, "lattice_pairing": lattice_value, "monotone_by_seed": monotone,
            "majority_monotone": sum(monotone.values()) * 2 > len(seeds)}


def cmd_sweep_beta(args):
    V = get_potential(args.potential)
    out = sweep_beta(V, args.N, _floats(args.betas), _ints(args.seeds), args.steps, args.burn_in, args.thinning)
    return out


# --- plumbing ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser():
    p = _Parser(prog="loggas", description="Numerical laboratory for the one-dimensional log-gas.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write the report here instead of stdout")
        return sp

    sp = add("energy", cmd_energy, "renormalized energy of a configuration")
    sp.add_argument("--config", required=True)
    sp.add_argument("--normalization", default="paper_rhs", choices=[n.value for n in Normalization])
    sp.add_argument("--via-definition", action="store_true")
    sp.add_argument("--eta-levels")
    sp.add_argument("--ymax", type=float)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("defect", cmd_defect, "neighbour spacings and defects")
    sp.add_argument("--config", required=True)

    sp = add("qlb-sweep", cmd_qlb_sweep, "defect lower bound over a random corpus")
    sp.add_argument("--N", default="16")
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = add("minimize", cmd_minimize, "minimize the torus energy")
    sp.add_argument("--config")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = add("field-check", cmd_field_check, "flux and circulation checks of the field")
    sp.add_argument("--config", required=True)
    sp.add_argument("--radii", default="0.1,0.25")

    sp = add("correlate", cmd_correlate, "two-point pairing of a periodic configuration")
    sp.add_argument("--config", required=True)
    sp.add_argument("--phi", default="product:0.3,0.9,-0.2,1.0")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", action="store_true")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = add("counts", cmd_counts, "exact counting statistics")
    sp.add_argument("--config", required=True)
    sp.add_argument("--T", type=float, required=True)

    sp = add("theorem1-sweep", cmd_theorem1_sweep, "correlation gap against energy gap")
    sp.add_argument("--N", default="16,32,64")
    sp.add_argument("--eps-min", type=float, default=1e-3)
    sp.add_argument("--eps-max", type=float, default=0.2)
    sp.add_argument("--eps-count", type=int, default=6)
    sp.add_argument("--phi", action="append")

    sp = add("fekete", cmd_fekete, "weighted Fekete points")
    sp.add_argument("--potential", default="quad")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--grid-halfwidth", type=float, default=3.0)
    sp.add_argument("--grid-cells", type=int, default=600)

    sp = add("sample", cmd_sample, "Metropolis sampling of the log-gas")
    sp.add_argument("--potential", default="quad")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--burn-in", type=int, default=1_000)
    sp.add_argument("--thinning", type=int, default=10)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = add("sweep-beta", cmd_sweep_beta, "crystallization trend over inverse temperatures")
    sp.add_argument("--potential", default="quad")
    sp.add_argument("--N", type=int, default=32)
    sp.add_argument("--betas", default="1,4,16,64")
    sp.add_argument("--seeds", default="1,2,3")
    sp.add_argument("--steps", type=int, default=6_000)
    sp.add_argument("--burn-in", type=int, default=1_000)
    sp.add_argument("--thinning", type=int, default=5)
    sp.add_argument("--report", dest="out")
    return p


def _resolved(args):
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def load_schema(name):
    """JSON schema shipped for a report (``envelope``, ``error`` or a subcommand name)."""
    from importlib import resources
    return json.loads(resources.files("loggas").joinpath("schemas", f"{name}.schema.json").read_text())


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def run(argv=None, stdout=None):
    """Execute one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        result = args.func(args)
        report = {"command": args.command, "version": __version__, "run_spec": _resolved(args), "result": result}
        text = dumps(report)
        # `sample --out` names the CSV; its JSON summary always goes to stdout.
        if args.out and args.command != "sample":
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return 0
    except FileNotFoundError as exc:
        stdout.write(dumps({"error": "FileNotFound", "message": str(exc)}))
        return 2
    except ParseError as exc:
        stdout.write(dumps({"error": "ParseError", "message": str(exc)}))
        return 2
    except LogGasError as exc:
        stdout.write(dumps({"error": exc.code, "message": str(exc)}))
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
