"""Command line runner: simulate | charges | verify-algebra | map-nls | coupled.

Every subcommand reads an INI config (`--config`), writes CSV/JSON into `--out`, and returns
0 on success, 1 when a verification reports failures, 2 on invalid input, 3 on numerical
failure (blow-up, singularity) and 4 on I/O errors.
"""

import argparse
import configparser
import json
import os
import sys
import time

import numpy as np

from . import charges as chg
from . import coupled as cp
from . import deformations as dfm
from . import loop_algebra as la
from . import nls_map, pde_core
from .config import DEFAULTS
from .errors import QikdvError, SingularityError, ValidationError
from .grid import ComplexField, GridField, check_grid, grid_points
from .runio import RunConfig, ensure_dir, manifest, write_csv, write_json

EXIT_CHECK_FAILED = 1
EXIT_IO = 4


# -- config -> objects ----------------------------------------------------------------------


def deformation_from(cfg, section="deformation"):
    d = cfg.section(section)
    if not d:
        return dfm.NONE
    return dfm.spec_from_dict(d, key=section)


def grid_from(cfg):
    n = cfg.int("grid.n", DEFAULTS.n)
    length = cfg.float("grid.length", DEFAULTS.length)
    check_grid(n, length, "grid")
    return length, n


def problem_from(cfg, length, n):
    name = cfg.str("equation.name", "kdv").lower()
    if name not in {e.value for e in pde_core.Equation}:
        raise ValidationError("equation.name", f"unknown equation {name!r}")
    return pde_core.EvolutionProblem(
        name, length, n,
        dt=cfg.float("time.dt", DEFAULTS.dt),
        t_end=cfg.float("time.t_end", DEFAULTS.t_end),
        epsilon=cfg.float("equation.epsilon", 0.0),
        m=cfg.int("equation.m", 3),
        order_n=cfg.int("equation.order_n", 1),
        k0=cfg.float("equation.k0", 1.0),
        beta=cfg.float("equation.beta", 1.0),
        nls_sign=cfg.float("equation.nls_sign", 1.0),
        include_log=cfg.bool("equation.include_log", True),
        deformation=deformation_from(cfg),
        deformation_q=deformation_from(cfg, "deformation_q"),
    )


def _analytic(cfg, prob):
    """(sampler(x, t) or None) for soliton initial data whose exact evolution is known."""
    if cfg.str("initial.kind", "soliton") != "soliton":
        return None
    c, x0 = cfg.float("initial.c", 4.0), cfg.float("initial.x0", 0.0)
    eq = prob.equation
    if eq == pde_core.Equation.KDV:
        return nls_map.soliton_kdv(c, 0.0, x0)
    if eq == pde_core.Equation.SCALED_KDV:
        return nls_map.soliton_kdv(c, prob.epsilon, x0)
    spec = prob.deformation
    if eq == pde_core.Equation.DEFORMED_KDV and isinstance(spec, dfm.LocalTerm) and spec.family == dfm.Family.UUXX:
        return nls_map.soliton_kdv(c, spec.epsilon, x0)
    if eq == pde_core.Equation.LOG_KDV and not prob.include_log:
        return nls_map.soliton_kdv(c, prob.epsilon, x0, kind="log")
    if eq == pde_core.Equation.DEFORMED_KDV and isinstance(spec, dfm.NoDeformation):
        return nls_map.soliton_kdv(c, 0.0, x0)
    return None


def anomaly_spec(prob):
    """Deformation whose anomaly drives the charges of a real equation."""
    if prob.equation == pde_core.Equation.DEFORMED_KDV:
        return prob.deformation
    if prob.equation == pde_core.Equation.SCALED_KDV:
        return dfm.LocalTerm(dfm.Family.UUXX, prob.epsilon)
    return dfm.NONE


def initial_from(cfg, length, n, prob=None):
    kind = cfg.str("initial.kind", "soliton").lower()
    x = grid_points(n, length)
    offset = cfg.float("initial.offset", 0.0)
    if kind == "soliton":
        sampler = _analytic(cfg, prob) if prob is not None else None
        if sampler is None:
            sampler = nls_map.soliton_kdv(cfg.float("initial.c", 4.0), 0.0, cfg.float("initial.x0", 0.0))
        vals = sampler(x, 0.0)
    elif kind == "gaussian":
        a, w, x0 = cfg.float("initial.amplitude", 1.0), cfg.float("initial.width", 1.0), cfg.float("initial.x0", 0.0)
        vals = a * np.exp(-(((x - x0) / w) ** 2))
    elif kind == "sech2":
        a, w, x0 = cfg.float("initial.amplitude", 1.0), cfg.float("initial.width", 1.0), cfg.float("initial.x0", 0.0)
        vals = a / np.cosh((x - x0) / w) ** 2
    elif kind == "nls_soliton":
        K = cfg.float("initial.K", 1.0)
        p = nls_map.WeakCouplingParams(0.0, cfg.float("equation.k0", 1.0))
        vals = nls_map.soliton_nls(K, cfg.float("initial.V", 0.0), p, cfg.float("equation.beta", 1.0))(x, 0.0)
    elif kind == "table":
        path = cfg.str("initial.file")
        try:
            vals = np.loadtxt(path, delimiter=",", ndmin=1)
        except ValueError as exc:
            raise ValidationError("initial.file", f"unreadable table: {exc}") from None
        if vals.shape != (n,):
            raise ValidationError("initial.file", f"expected {n} samples, got {vals.shape}")
    else:
        raise ValidationError("initial.kind", f"unknown initial condition {kind!r}")
    vals = vals + offset
    if prob is not None and prob.is_complex:
        return ComplexField(length, vals)
    return GridField(length, np.real(vals))


# -- subcommands -----------------------------------------------------------------------------


def _trajectory_rows(traj, sampler):
    rows = []
    for s in traj:
        v = np.asarray(s.field.values)
        err = float(np.abs(v - sampler(s.field.x, s.t)).max()) if sampler is not None else float("nan")
        for j, (xj, vj) in enumerate(zip(s.field.x, v)):
            rows.append((s.t, j, xj, np.real(vj), np.imag(vj), err))
    return rows


def _summary_rows(traj, sampler):
    rows = []
    for s in traj:
        v = np.asarray(s.field.values)
        err = float(np.abs(v - sampler(s.field.x, s.t)).max()) if sampler is not None else float("nan")
        d = s.diagnostics
        rows.append((s.t, d.get("mass", float("nan")), d.get("momentum", float("nan")),
                     d.get("norm2", float("nan")), float(np.abs(v).max()), err))
    return rows


def _charges_for(cfg, traj, spec, orders):
    principal = cfg.bool("charges.principal", False)
    try:
        return chg.charge_series(traj, spec, order=orders, principal=principal), None
    except SingularityError as exc:
        if principal:
            raise
        return chg.charge_series(traj, spec, principal=True), exc.x


def cmd_simulate(cfg, out, seed, orders, charges_only=False):
    length, n = grid_from(cfg)
    prob = problem_from(cfg, length, n)
    u0 = initial_from(cfg, length, n, prob)
    every = cfg.int("time.sample_every", DEFAULTS.sample_every)
    traj = pde_core.evolve(u0, prob, every)
    sampler = None if prob.is_complex else _analytic(cfg, prob)
    outputs, extra = [], {}
    if not charges_only:
        write_csv(os.path.join(out, "trajectory.csv"), ("t", "j", "x", "re", "im", "linf_vs_analytic"),
                  _trajectory_rows(traj, sampler))
        write_csv(os.path.join(out, "summary.csv"), ("t", "mass", "momentum", "norm2", "max_abs", "linf_vs_analytic"),
                  _summary_rows(traj, sampler))
        outputs += ["trajectory.csv", "summary.csv"]
    if not prob.is_complex:
        spec = anomaly_spec(prob)
        series, sing = _charges_for(cfg, traj, spec, orders)
        rows = series.rows()
        drift = series.drift("Q", 0)
        header = chg.CSV_COLUMNS + ("Q0_drift",)
        write_csv(os.path.join(out, "charges.csv"), header,
                  [r + (abs(r[1] - rows[0][1]) / max(abs(rows[0][1]), 1e-300),) for r in rows])
        outputs.append("charges.csv")
        extra["charges"] = {"metadata": series.metadata, "Q0_drift": drift, "regular_singularity_x": sing}
    write_json(os.path.join(out, "manifest.json"), manifest(cfg, "charges" if charges_only else "simulate", seed,
                                                           outputs + ["manifest.json"], extra))
    return 0


def cmd_verify_algebra(cfg, out, seed, orders, corrupt=False):
    triples = cfg.int("algebra.triples", 1000)
    samples = cfg.int("algebra.bch_samples", 100)
    depth = cfg.int("algebra.depth", 4)
    table = la.corrupted_structure if (corrupt or cfg.bool("algebra.corrupted", False)) else la.structure
    anti, jac = la.check_identities(triples, seed, table)
    ratio = la.bch_dense_check(samples, seed, depth)
    ok = anti == 0 and jac == 0 and ratio < 1.0
    report = {"triples": triples, "antisymmetry_failures": anti, "jacobi_failures": jac,
              "bch_depth": depth, "bch_samples": samples, "bch_max_ratio": ratio,
              "table": "corrupted" if table is la.corrupted_structure else "standard", "pass": ok}
    write_csv(os.path.join(out, "algebra.csv"), ("check", "failures_or_ratio", "pass"),
              [("antisymmetry", anti, anti == 0), ("jacobi", jac, jac == 0), ("bch_dense", ratio, ratio < 1.0)])
    write_json(os.path.join(out, "manifest.json"),
               manifest(cfg, "verify-algebra", seed, ["algebra.csv", "manifest.json"], {"report": report}))
    return 0 if ok else EXIT_CHECK_FAILED


def cmd_map_nls(cfg, out, seed, orders):
    eps_list = cfg.floats("map.epsilons", "0.02 0.04 0.08")
    if len(eps_list) < 2:
        raise ValidationError("map.epsilons", "need >=2 points")
    deps = cfg.float("map.deformation_epsilon", 0.0)
    kw = dict(length_X=cfg.float("map.length_X", 40.0), n_X=cfg.int("map.n_X", 256),
              t_end=cfg.float("map.t_end", 1.0), dt=cfg.float("map.dt", 0.01), samples=cfg.int("map.samples", 10),
              nls_sign=cfg.float("map.nls_sign", -1.0))
    rows, slope = nls_map.scaling_study(eps_list, cfg.float("map.k0", 1.0), deps, **kw)
    beta = 1.0 + 5.0 * deps / 3.0
    write_csv(os.path.join(out, "scaling.csv"), ("epsilon", "error", "beta", "slope"),
              [(e, err, beta, slope) for e, err in rows])
    write_json(os.path.join(out, "manifest.json"),
               manifest(cfg, "map-nls", seed, ["scaling.csv", "manifest.json"], {"slope": slope, "beta": beta}))
    return 0


def coupled_initial(cfg, length, n):
    x = grid_points(n, length)
    mode = cfg.str("coupled.mode", "reduction").lower()
    if mode == "reduction":
        u = initial_from(cfg, length, n)
        return cp.CoupledState.from_arrays(length, cfg.float("coupled.q", 1.0), np.asarray(u.values))
    if mode == "conjugate":
        a, w = cfg.float("initial.amplitude", 0.8), cfg.float("initial.width", 1.25)
        x0, k = cfg.float("initial.x0", 0.0), cfg.float("coupled.k", 1.0)
        return cp.CoupledState.conjugate_pair(length, a / np.cosh((x - x0) / w) * np.exp(1j * k * x))
    raise ValidationError("coupled.mode", f"unknown mode {mode!r}")


def cmd_coupled(cfg, out, seed, orders):
    length, n = grid_from(cfg)
    state = coupled_initial(cfg, length, n)
    spec_q, spec_qb = deformation_from(cfg, "deformation_q"), deformation_from(cfg)
    dt, t_end = cfg.float("time.dt", DEFAULTS.dt), cfg.float("time.t_end", DEFAULTS.t_end)
    traj = cp.evolve_coupled(state, spec_q, spec_qb, dt, t_end, cfg.int("time.sample_every", DEFAULTS.sample_every))
    rows = []
    for s in traj:
        q, qb = np.asarray(s.field.q.values), np.asarray(s.field.qbar.values)
        d = s.diagnostics
        rows.append((s.t, d["q_norm2"], d["qbar_norm2"], d["conjugacy_defect"],
                     float(np.abs(q).max()), float(np.abs(qb).max())))
    write_csv(os.path.join(out, "coupled_summary.csv"),
              ("t", "q_norm2", "qbar_norm2", "conjugacy_defect", "q_max_abs", "qbar_max_abs"), rows)
    outputs, extra = ["coupled_summary.csv"], {}
    order = min(orders, 2)
    try:
        t, R, rates = cp.R_series(traj, spec_q, spec_qb, order)
        rrows = [tuple([t[i]] + [v for k in range(order + 1) for v in (R[k][i].real, R[k][i].imag)]
                       + [v for k in range(order + 1) for v in (rates[k][i].real, rates[k][i].imag)])
                 for i in range(t.size)]
        hdr = ["t"] + [f"R{k}_{p}" for k in range(order + 1) for p in ("re", "im")]
        hdr += [f"rate{k}_{p}" for k in range(order + 1) for p in ("re", "im")]
    except SingularityError as exc:
        extra["regular_singularity_x"] = exc.x
        r0 = [cp.charge_R0_principal(s.field) for s in traj]
        rrows = [(s.t, r, 0.0) for s, r in zip(traj, r0)]
        hdr = ["t", "R0_principal_re", "R0_principal_im"]
    write_csv(os.path.join(out, "coupled_charges.csv"), hdr, rrows)
    outputs.append("coupled_charges.csv")
    write_json(os.path.join(out, "manifest.json"), manifest(cfg, "coupled", seed, outputs + ["manifest.json"], extra))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "charges": lambda cfg, out, seed, orders: cmd_simulate(cfg, out, seed, orders, charges_only=True),
    "verify-algebra": cmd_verify_algebra,
    "map-nls": cmd_map_nls,
    "coupled": cmd_coupled,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qikdv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI file with dotted sections")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="seed for randomized checks (default: run.seed or 0)")
        s.add_argument("--orders", type=int, default=None, help="highest charge order (0..2)")
        if name == "verify-algebra":
            s.add_argument("--corrupt", action="store_true", help="use the deliberately broken bracket table")
    return p


def _error(exit_code, kind, message, key=None):
    obj = {"error": kind, "message": message, "exit_code": exit_code}
    if key is not None:
        obj["key"] = key
    print(json.dumps(obj, sort_keys=True), file=sys.stderr)
    return exit_code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        seed = args.seed if args.seed is not None else cfg.int("run.seed", 0)
        orders = args.orders if args.orders is not None else cfg.int("charges.orders", 2)
        if not 0 <= orders <= 2:
            raise ValidationError("charges.orders", "must be 0, 1 or 2")
        out = ensure_dir(args.out)
        start = time.perf_counter()
        if args.command == "verify-algebra":
            code = cmd_verify_algebra(cfg, out, seed, orders, corrupt=args.corrupt)
        else:
            code = COMMANDS[args.command](cfg, out, seed, orders)
        write_json(os.path.join(out, "timing.json"), {"wall_seconds": time.perf_counter() - start})
        return code
    except QikdvError as exc:
        return _error(exc.exit_code, type(exc).__name__, str(exc), getattr(exc, "key", None))
    except OSError as exc:
        return _error(EXIT_IO, "IOError", str(exc))
    except configparser.Error as exc:
        return _error(2, "ConfigError", str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
