"""Command line: ``nlbif run <config.json> [--out DIR] [--jobs N] [--tol-scale X]``.

Tasks run in dependency order; every file written is listed with its
SHA-256 in ``manifest.json``.  Exit status: 0 success, 1 task failure
(partial artifacts kept), 2 configuration error (nothing written).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .ccurves import CCurve, build_ccurve, check_scaling_identities
from .chafee_infante import gradient_energy, reconstruct_profile
from .config import ConfigError, RunConfig, load_config
from .equilibria import EquilibriumSet, equilibrium_profile, find_equilibria, sweep
from .export import ArtifactWriter
from .model import validate_diffusion, validate_nonlinearity
from .pdesim import SimModel, evolve, grid
from .spectral import (
    epsilon_sweep,
    eps_tilde_for,
    operator_at,
    positive_count,
    refine_n,
)
from .svg import PALETTE, Marker, Series, chart
from .timemaps import energy_max, tau

log = logging.getLogger("nlbif")

_SIGN = {1: "p", -1: "m"}
_SIGN_TXT = {1: "+", -1: "-", 0: "+-"}


def _nu_tag(nu: float) -> str:
    return "nu" + repr(float(nu)).replace(".", "_")


def _key(j: int, sign: int) -> str:
    return f"j{j}{_SIGN[sign]}"


DEFAULT_RUNS = [
    {"name": "sin1_plus", "modes": [[1, 0.1]]},
    {"name": "sin1_minus", "modes": [[1, -0.1]]},
    {"name": "sin2_perturbed", "modes": [[2, 0.1]], "perturbation": 1e-6, "seed": 0},
]


def initial_profile(run: dict, x: np.ndarray) -> np.ndarray:
    """Sum of sine modes plus an optional seeded perturbation.

    The perturbation mixes all of the first six modes with random weights, so
    it breaks any symmetry of the base data; its max-norm is ``perturbation``.
    """
    u = np.zeros_like(x)
    for k, amp in run["modes"]:
        u += amp * np.sin(k * x)
    eps = run.get("perturbation", 0.0)
    if eps:
        rng = np.random.default_rng(run.get("seed", 0))
        w = rng.standard_normal(6)
        p = sum(wk * np.sin((k + 1) * x) for k, wk in enumerate(w))
        u += eps * p / np.max(np.abs(p))
    return u


class Runner:
    def __init__(self, cfg: RunConfig, out: Path, jobs: int = 1):
        self.cfg = cfg
        self.w = ArtifactWriter(out)
        self.jobs = max(1, jobs)
        self._curves: dict[tuple[int, int], CCurve] | None = None
        self._eq: dict[float, EquilibriumSet] = {}

    # ---------------------------------------------------------------- shared data

    def _map(self, fn, items):
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as ex:
                return list(ex.map(fn, items))
        return [fn(i) for i in items]

    @property
    def curves(self) -> dict[tuple[int, int], CCurve]:
        if self._curves is None:
            cfg = self.cfg
            keys = [(j, s) for j in range(1, cfg.j_max + 1) for s in (1, -1)]
            built = self._map(lambda k: build_ccurve(
                cfg.nl, k[0], k[1], cfg.r_max, samples=cfg.samples, clip=True,
                holdout_tol=cfg.tol["holdout"]), keys)
            self._curves = dict(zip(keys, built))
        return self._curves

    def equilibria(self, nu: float) -> EquilibriumSet:
        if nu not in self._eq:
            self._eq[nu] = find_equilibria(self.cfg.a, self.curves, nu, gap_rel=self.cfg.tol["gap"])
        return self._eq[nu]

    # ---------------------------------------------------------------- tasks

    def task_validate(self) -> dict:
        rn = validate_nonlinearity(self.cfg.nl)
        rd = validate_diffusion(self.cfg.a)
        self.w.json("validation.json", {"nonlinearity": rn.to_dict(), "diffusion": rd.to_dict()})
        return {"ok": rn.ok and rd.ok}

    def task_ccurves(self) -> dict:
        summary = {}
        series = []
        for i, ((j, s), c) in enumerate(sorted(self.curves.items())):
            self.w.csv(f"ccurves/c_{_key(j, s)}.csv", ["r", "lam", "c", "dc", "E"], c.table())
            summary[_key(j, s)] = {
                "j": j, "sign": s, "r_max": c.r_max, "r_reach": c.r_reach,
                "samples": int(c.r.size), "holdout_error": c.holdout_error,
                "monotone": c.monotone, "c0": float(c.c[0]), "dc0": c.slope_at_zero,
            }
            series.append(Series(c.r, c.c, label=f"c_{j}{_SIGN_TXT[s]}",
                                 color=PALETTE[(j - 1) % len(PALETTE)], dash="" if s > 0 else "5,3"))
        self.w.json("ccurves/summary.json", summary)
        self.w.text("ccurves/ccurves.svg", chart(series, title="c-curves", xlabel="r", ylabel="c(r)"))
        ok = all(v["monotone"] and v["holdout_error"] <= self.cfg.tol["holdout"] for v in summary.values())
        return {"ok": ok, "curves": len(summary)}

    def task_equilibria(self) -> dict:
        rows, sets = [], []
        for nu in self.cfg.nu:
            es = self.equilibria(nu)
            rows.append([nu, "zero", 0, 0, 0.0, None, None, es.trivial_hyperbolic, es.trivial_index,
                         None, 0.0, False, False])
            for p in es.points:
                rows.append([nu, "branch", p.j, p.sign, p.r, p.lam, p.c, p.hyperbolic, p.morse_index,
                             p.criterion_gap, p.residual, p.tangency, p.at_horizon])
                if self.cfg.profiles:
                    chk = equilibrium_profile(p, self.cfg.nl, self.cfg.a)
                    pr = chk.profile
                    self.w.csv(f"profiles/{_nu_tag(nu)}_{_key(p.j, p.sign)}_r{p.r:.6f}.csv",
                               ["x", "phi", "phi_x"], zip(pr.x, pr.phi, pr.phi_x))
            sets.append({"nu": nu, "count": es.count, "trivial_index": es.trivial_index,
                         "trivial_hyperbolic": es.trivial_hyperbolic,
                         "truncated": [list(t) for t in es.truncated],
                         "missing_classes": es.missing_classes,
                         "points": [p.to_dict() for p in es.points]})
        self.w.csv("equilibria.csv",
                   ["nu", "kind", "j", "sign", "r", "lam", "c", "hyperbolic", "morse_index",
                    "criterion_gap", "residual", "tangency", "at_horizon"], rows)
        self.w.json("equilibria.json", sets)
        return {"ok": True, "counts": {repr(s["nu"]): s["count"] for s in sets}}

    def task_sweep(self) -> dict:
        cfg = self.cfg
        d = sweep(cfg.a, self.curves, cfg.nu_grid, jobs=self.jobs, gap_rel=cfg.tol["gap"])
        rows = []
        series = []
        lo, hi = float(cfg.nu_grid[0]), float(cfg.nu_grid[-1])
        for (j, s), tab in sorted(d.branches.items()):
            for r, nb, _, idx in tab:
                rows.append([j, s, nb, r, int(idx)])
            if s < 0 and cfg.nl.is_odd:
                continue  # identical to the + branch
            for k in (j - 1, j):
                y = np.where(tab[:, 3] == k, tab[:, 0], np.nan)
                series.append(Series(tab[:, 1], y, label=f"index {k}", color=PALETTE[k % len(PALETTE)]))
        self.w.csv("sweep/branches.csv", ["j", "sign", "nu", "r", "morse_index"], rows)
        inc = set(d.incomplete)
        self.w.csv("sweep/counts.csv", ["nu", "direct", "predicted", "complete"],
                   [(nu, c, p, float(nu) not in inc)
                    for nu, c, p in zip(d.nu_grid, d.counts_direct, d.counts_predicted)])
        self.w.json("sweep/events.json", {
            "events": [e.to_dict() for e in d.events],
            "step_function": d.step_function(),
            "consistent": d.consistent, "mismatches": d.mismatches(),
            "unresolved": [list(u) for u in d.unresolved],
            "incomplete_nu": list(d.incomplete),
        })
        markers = []
        for e in d.events:
            if e.kind in ("pitchfork", "saddle-node") and lo <= e.nu_crit <= hi:
                markers.append(Marker(e.nu_crit, e.r_crit, label=e.kind,
                                      color="#000000" if e.kind == "pitchfork" else "#555555",
                                      shape="square" if e.kind == "pitchfork" else "triangle"))
        ymax = max((float(np.nanmax(np.where((t[:, 1] >= lo) & (t[:, 1] <= hi), t[:, 0], np.nan)))
                    for t in d.branches.values()
                    if np.any((t[:, 1] >= lo) & (t[:, 1] <= hi))), default=1.0)
        self.w.text("sweep/diagram.svg", chart(series, markers=markers, title="bifurcation diagram",
                                               xlabel="nu", ylabel="r", xlim=(lo, hi), ylim=(0.0, ymax)))
        return {"ok": d.consistent and not d.unresolved,
                "events": sum(e.kind in ("pitchfork", "saddle-node") for e in d.events)}

    def task_spectrum(self) -> dict:
        cfg = self.cfg
        n = cfg.spectrum.get("n", 2001)
        refine = cfg.spectrum.get("refine", False)
        n_eps = cfg.spectrum.get("eps_points", 41)
        out, ok = [], True
        for nu in cfg.nu:
            es = self.equilibria(nu)

            def one(p):
                op = operator_at(p, cfg.nl, cfg.a, n)
                rep = positive_count(op, tol_rel=cfg.tol["spectral"])
                et = eps_tilde_for(p, self.curves[(p.j, p.sign)], cfg.a)
                e0 = op.eps
                span = max(abs(et - e0), 1.0)
                grid_eps = np.linspace(min(e0, et) - 0.5 * span, max(e0, et) + 0.5 * span, n_eps)
                sw = epsilon_sweep(op, grid_eps, j=p.j, eps_tilde=et)
                ref = None
                if refine:
                    op2 = operator_at(p, cfg.nl, cfg.a, refine_n(n))
                    ref = {"n": op2.n, "eigenvalues": positive_count(op2, tol_rel=cfg.tol["spectral"]).eigenvalues,
                           "mu_at_tilde": epsilon_sweep(op2, [et], j=p.j, eps_tilde=et).mu_at_tilde}
                return p, rep, sw, ref

            for i, (p, rep, sw, ref) in enumerate(self._map(one, es.points)):
                tag = f"{_nu_tag(nu)}_{_key(p.j, p.sign)}_{i}"
                k = sw.mu.shape[1]
                self.w.csv(f"spectrum/eps_{tag}.csv", ["eps"] + [f"mu{m + 1}" for m in range(k)], sw.table())
                match = (rep.positive == p.morse_index) if p.hyperbolic else None
                if p.hyperbolic and (not match or rep.indeterminate):
                    ok = False
                if not sw.monotone(cfg.tol["lyapunov"]):
                    ok = False
                out.append({
                    "nu": nu, "j": p.j, "sign": p.sign, "r": p.r, "morse_index": p.morse_index,
                    "hyperbolic": p.hyperbolic, "report": rep.to_dict(), "index_match": match,
                    "eps0": sw.eps0, "eps_tilde": sw.eps_tilde, "eps_zero_discrete": sw.eps_zero_discrete,
                    "mu_at_eps_tilde": sw.mu_at_tilde, "branches_monotone": sw.monotone(cfg.tol["lyapunov"]),
                    "max_branch_decrease": sw.max_decrease, "refined": ref,
                })
        self.w.json("spectrum/spectrum.json", out)
        return {"ok": ok, "operators": len(out)}

    def task_simulate(self) -> dict:
        cfg = self.cfg
        sim = cfg.simulate
        n = sim.get("n", 1024)
        nu = cfg.nu[0]
        es = self.equilibria(nu)
        eqs = {"zero": np.zeros(n + 1)}
        for p in es.points:
            eqs[f"{_key(p.j, p.sign)}_r{p.r:.6f}"] = reconstruct_profile(
                cfg.nl, p.lam, p.j, p.sign, E=p.E, n=n).phi
        model = SimModel(cfg.nl, cfg.a, nu)
        x = grid(n)
        runs = sim.get("runs", DEFAULT_RUNS)

        def one(run):
            return evolve(initial_profile(run, x), model, sim.get("form", "quasilinear"),
                          sim.get("t_end", 40.0), equilibria=eqs, n=n, dt0=sim.get("dt0", 1e-3),
                          tol_dist=cfg.tol["sim_distance"], tol_res=cfg.tol["sim_residual"],
                          tol_V=cfg.tol["lyapunov"])

        summary, ok = [], True
        for run, lg in zip(runs, self._map(one, runs)):
            rows = list(lg.rows())
            keep = rows[::10] + ([rows[-1]] if (len(rows) - 1) % 10 else [])
            self.w.csv(f"trajectories/{run['name']}.csv",
                       ["t", "V", "dist_max", "dist_h1", "nearest", "dt"], keep)
            mono = lg.max_V_increase() <= 0
            ok = ok and mono
            summary.append({"name": run["name"], "terminal": lg.terminal, "t_converged": lg.t_converged,
                            "final_V": lg.V[-1], "lyapunov_monotone": mono,
                            "max_V_increase": lg.max_V_increase(), "rejected_steps": lg.rejected,
                            "accepted_steps": len(lg.V) - 1})
        self.w.json("simulate.json", {"nu": nu, "equilibria": sorted(eqs), "runs": summary})
        return {"ok": ok, "runs": len(summary)}

    def task_verify_all(self) -> dict:
        checks = verify_all(self.cfg, self.curves, self.equilibria)
        self.w.json("verify.json", checks)
        return {"ok": all(c["passed"] for c in checks), "checks": len(checks),
                "failed": [c["name"] for c in checks if not c["passed"]]}

    def run(self) -> int:
        results, status = {}, 0
        for t in self.cfg.tasks:
            fn = getattr(self, "task_" + t.replace("-", "_"))
            try:
                res = fn()
            except Exception as exc:  # noqa: BLE001 - reported in the manifest
                log.error("task %s failed: %s", t, exc)
                res = {"ok": False, "error": f"{type(exc).__name__}: {exc}",
                       "traceback": traceback.format_exc().splitlines()[-3:]}
            results[t] = res
            if not res.get("ok"):
                status = 1
        self.w.manifest(results, status)
        return status


def verify_all(cfg: RunConfig, curves, equilibria) -> list[dict]:
    """Module invariants on the configured model; each entry has a pass flag."""
    tol = cfg.tol
    nl, a = cfg.nl, cfg.a
    checks = []

    def add(name, value, limit, passed=None):
        passed = bool(value <= limit) if passed is None else bool(passed)
        checks.append({"name": name, "value": value, "limit": limit, "passed": passed})

    add("nonlinearity valid", 0.0, 0.0, validate_nonlinearity(nl).ok)
    add("diffusion valid", 0.0, 0.0, validate_diffusion(a).ok)
    for (j, s), c in sorted(curves.items()):
        tag = _key(j, s)
        c_small, _ = c.exact(1e-9 * c.r_max)
        add(f"anchor {tag}", max(abs(float(c(0.0)) - 1 / j**2), abs(c_small - 1 / j**2)), tol["anchor"])
        add(f"decreasing {tag}", float(np.max(c.dc[1:])), 0.0, c.monotone and np.all(c.dc[1:] < 0))
        add(f"holdout {tag}", c.holdout_error, tol["holdout"])
        idx = np.linspace(1, c.r.size - 1, 8).astype(int)
        rt = max(abs(gradient_energy(nl, c.lam[i], j, s) - c.r[i]) / max(1.0, c.r[i]) for i in idx)
        add(f"roundtrip {tag}", rt, tol["roundtrip"])
        lam = float(c.lam[c.r.size // 2])
        prof = reconstruct_profile(nl, lam, j, s)
        add(f"profile energy {tag}", prof.energy_defect(nl), tol["profile_energy"])
        add(f"profile r {tag}", abs(prof.r_grid - prof.r) / prof.r, tol["profile_r"])
        add(f"nodal count {tag}", float(abs(prof.interior_sign_changes() - (j - 1))), 0.0)
    e_small = 1e-12 * energy_max(nl, 1, 1)
    for lam in (1.0, 4.0, 9.0):
        add(f"time map limit lam={lam}", abs(tau(nl, e_small, lam, 1) - math.pi / math.sqrt(lam)),
            tol["timemap_limit"])
    rep = check_scaling_identities(curves)
    if any(j >= 4 for j, _ in curves):
        add("scaling identity even classes", rep["max_even"], tol["scaling"])
    if nl.is_odd:
        add("scaling identity odd f", rep["max_odd"], tol["scaling"])
        add("sign symmetry odd f", rep["max_sign"], 1e-9)
    nus = cfg.nu or (5.0 * float(a.a(0.0)),)
    n = cfg.spectrum.get("n", 2001)
    for nu in nus:
        es = equilibria(nu)
        for p in es.points:
            tag = f"nu={nu} {_key(p.j, p.sign)} r={p.r:.6g}"
            add(f"defining identity {tag}", abs(p.residual), tol["residual"] * (1 + abs(p.residual)))
            if p.hyperbolic:
                rp = positive_count(operator_at(p, nl, a, n), tol_rel=tol["spectral"])
                add(f"spectral index {tag}", float(abs(rp.positive - p.morse_index)), 0.0,
                    rp.positive == p.morse_index and not rp.indeterminate)
    if cfg.nu_grid is not None:
        d = sweep(a, curves, cfg.nu_grid, gap_rel=tol["gap"])
        add("sweep count consistency", float(len(d.mismatches())), 0.0)
    model = SimModel(nl, a, nus[0])
    lg = evolve(lambda x: 0.1 * np.sin(x), model, t_end=2.0, tol_V=tol["lyapunov"])
    add("lyapunov monotone", lg.max_V_increase(), 0.0)
    return checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlbif", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute the tasks of a JSON run configuration")
    run.add_argument("config", help="path to the JSON configuration")
    run.add_argument("--out", help="output directory (overrides the config's 'output')")
    run.add_argument("--jobs", type=int, default=1, help="worker threads")
    run.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    run.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.tol_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.output)
    return Runner(cfg, out, args.jobs).run()


if __name__ == "__main__":
    sys.exit(main())
