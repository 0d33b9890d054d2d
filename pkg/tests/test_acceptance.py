"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible even under
output capture) before asserting.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from robin_spectra import analysis as A
from robin_spectra import profiles as P
from robin_spectra.eigensolver import dense_oracle, inertia_below, smallest_eigenpairs
from robin_spectra.strip import Ends, StripGrid, assemble, rayleigh_quotient
from robin_spectra.transversal import (TransversalParams, bisection_eigenvalues, boundary_residual,
                                       transversal_eigenvalues, transversal_modes)

ALL_KINDS = {
    "constant": P.constant(1.0),
    "gaussian": P.gaussian_bump(1.0, 0.5, 1.0),
    "compact": P.compact_bump(-1.0, -0.8, 1.5),
    "piecewise": P.piecewise_constant(1.0, [-1.0, 1.0], [1.6]),
    "tabulated": P.tabulated(0.5, [-2.0, 0.0, 2.0], [0.5, 1.5, 0.5]),
}
GAUSS = ALL_KINDS["gaussian"]


@pytest.fixture
def verdict(capsys):
    def report(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return report


def test_transversal_exactness(verdict):
    t0 = time.perf_counter()
    worst_val, worst_bc = 0.0, 0.0
    for alpha, eps in ((1.0, 1.0), (-2.0, 1.0), (0.5, 2.0)):
        p = TransversalParams(alpha, eps)
        vals = np.asarray(transversal_eigenvalues(p, 6))
        expected = [-alpha**2] + [(n * math.pi / eps) ** 2 for n in range(1, 7)]
        worst_val = max(worst_val, np.max(np.abs(vals - expected)),
                        np.max(np.abs(vals - bisection_eigenvalues(p, 6))))
        for m in transversal_modes(p, 6):
            worst_bc = max(worst_bc, *map(abs, boundary_residual(m, p)))
    elapsed = time.perf_counter() - t0
    ok = worst_val <= 1e-12 and worst_bc < 1e-10 and elapsed < 1.0
    verdict(1, "transversal exactness", ok,
            f"max eigenvalue error {worst_val:.2e}, max bc residual {worst_bc:.2e}, {elapsed:.2f}s")


def test_threshold_reproduction(verdict):
    t0 = time.perf_counter()
    vals = []
    for nx, ny in ((128, 8), (256, 16), (512, 32)):
        pen = assemble(StripGrid(10.0, 1.0, nx, ny, Ends.NEUMANN), P.constant(1.0))
        vals.append(float(smallest_eigenpairs(pen, 1).values[0]))
    e = A.richardson(*vals)
    elapsed = time.perf_counter() - t0
    ok = abs(e.value + 1.0) < 1e-4 and 1.8 <= e.order <= 2.2 and elapsed < 60
    verdict(2, "threshold reproduction", ok,
            f"extrapolated {e.value:.9f}, observed order {e.order:.3f}, {elapsed:.1f}s")


def test_oracle_equivalence(verdict):
    grids = [StripGrid(4.0, 1.0, 40, 8), StripGrid(6.0, 1.0, 60, 12, Ends.DIRICHLET),
             StripGrid(3.0, 0.5, 90, 16), StripGrid(10.0, 1.0, 160, 8)]
    worst, mismatches, checked = 0.0, 0, 0
    for grid in grids:
        assert grid.size <= 2000
        for profile in ALL_KINDS.values():
            pen = assemble(grid, profile)
            dense = dense_oracle(pen)
            worst = max(worst, np.max(np.abs(smallest_eigenpairs(pen, 6).values - dense[:6])))
            probes = 0.5 * (dense[[0, 2, 5, 9, 20]] + dense[[1, 3, 6, 10, 21]])
            for mu in probes:
                checked += 1
                mismatches += inertia_below(pen, mu) != int(np.sum(dense < mu))
    ok = worst <= 1e-10 and mismatches == 0
    verdict(3, "oracle equivalence", ok,
            f"max Lanczos-dense gap {worst:.2e} over {len(grids) * len(ALL_KINDS)} pencils, "
            f"{mismatches}/{checked} inertia mismatches")


def test_bound_state_existence(verdict):
    t0 = time.perf_counter()
    found = {}
    for name, profile in (("gaussian", GAUSS), ("mirrored", P.gaussian_bump(-1.0, -0.5, 1.0))):
        r = A.find_bound_states(profile, 1.0, L=(10.0, 20.0, 40.0), k=2, criterion=False)
        found[name] = (r.status, [(b.extrapolated, b.L_variation) for b in r.bound_states])
    elapsed = time.perf_counter() - t0
    ok = elapsed < 300 and all(st == "resolved" and len(bs) >= 1 and all(v < 1e-6 for _, v in bs)
                               and all(x < -1.0 for x, _ in bs) for st, bs in found.values())
    detail = "; ".join(f"{k}: " + ", ".join(f"{x:.7f} (L-variation {v:.1e})" for x, v in bs)
                       for k, (_, bs) in found.items())
    verdict(4, "bound-state existence", ok, f"{detail}; {elapsed:.1f}s")


def test_variational_functional(verdict):
    worst = 0.0
    for profile in ALL_KINDS.values():
        for n in (1, 2, 4, 8):
            worst = max(worst, abs(A.q_direct(profile, 1.0, n) - A.q_reduced(profile, 1.0, n)))
    limit, _ = A.q_limit_extrapolated(GAUSS, 1.0)
    predicted = -2.0 * GAUSS.alpha0 * P.excess_integral(GAUSS)
    ok = worst <= 1e-8 and abs(limit - predicted) <= 1e-6 and abs(limit + 1.772454) <= 1e-6
    verdict(5, "variational functional", ok,
            f"max route gap {worst:.2e}, limit {limit:.10f} vs {predicted:.10f}")


def test_rayleigh_ritz_coherence(verdict):
    rows = []
    for profile in (GAUSS, P.gaussian_bump(-1.0, -0.5, 1.0), ALL_KINDS["piecewise"]):
        c = A.criterion_check(profile, 1.0)
        if c.n_star is None:
            continue
        rr = A.rayleigh_ritz_check(profile, 1.0, c.n_star)
        gap = A.threshold(profile) - rr["lambda_min"]
        rows.append((c.n_star, rr["lambda_min"], gap, gap > 10 * rr["residual"]))
    ok = len(rows) >= 2 and all(r[3] for r in rows)
    verdict(6, "Rayleigh-Ritz coherence", ok,
            ", ".join(f"n*={n}: lambda_min {lam:.6f} ({g:.3e} below threshold)" for n, lam, g, _ in rows))


def test_weyl_probe(verdict):
    grid = StripGrid(16.0, 1.0, 256, 16)
    runs = {t: [A.weyl_residual(1.0, 1.0, t, n, grid=grid) for n in (4, 8, 16)] for t in (0.0, 1.0)}
    control = [A.weyl_residual(1.0, 1.0, 0.0, n, grid=grid, lam=-1.25) for n in (4, 8, 16)]
    ok = all(r[0] > r[1] > r[2] and r[2] < r[0] / 2 for r in runs.values()) and min(control) >= 0.2
    detail = "; ".join(f"t={t:g}: " + " ".join(f"{x:.4f}" for x in r) for t, r in runs.items())
    verdict(7, "Weyl probe", ok, f"{detail}; control " + " ".join(f"{x:.4f}" for x in control))


def test_structural_invariants(verdict, tmp_path):
    problems = []
    rng = np.random.default_rng(0)
    for name, profile in ALL_KINDS.items():
        pen = assemble(StripGrid(4.0, 1.0, 32, 6), profile)
        if (pen.K - pen.K.T).count_nonzero():
            problems.append(f"{name}: K not symmetric")
        bound = -P.sup_norm(profile) ** 2
        rq = min(rayleigh_quotient(pen, rng.standard_normal(pen.size)) for _ in range(100))
        if rq < bound - 1e-12 * abs(bound):
            problems.append(f"{name}: Rayleigh quotient {rq} below {bound}")
        vn = dense_oracle(pen)[:5]
        vd = dense_oracle(assemble(StripGrid(4.0, 1.0, 32, 6, Ends.DIRICHLET), profile))[:5]
        if np.any(vd < vn - 1e-12):
            problems.append(f"{name}: Dirichlet below Neumann")
        res = smallest_eigenpairs(pen, 5)
        orth = np.max(np.abs(res.vectors.T @ (pen.M @ res.vectors) - np.eye(5)))
        if orth > 1e-10:
            problems.append(f"{name}: M-orthonormality {orth:.1e}")

    cfg = tmp_path / "rerun.json"
    cfg.write_text(json.dumps({
        "command": "spectrum", "eps": 1.0, "solver": {"k": 2},
        "sweep": {"L": [4.0, 8.0], "nx": [16, 32, 64], "ny": [4, 8, 16]},
        "profile": {"kind": "gaussian", "alpha0": 1.0, "amplitude": 0.5, "width": 1.0}}))
    outputs = []
    for _ in range(2):
        subprocess.run([sys.executable, "-m", "robin_spectra", "spectrum", str(cfg)], check=True)
        outputs.append(((tmp_path / "rerun.report.json").read_bytes(),
                        (tmp_path / "rerun.convergence.csv").read_bytes()))
    if outputs[0] != outputs[1]:
        problems.append("CLI reruns differ")
    verdict(8, "structural invariants", not problems,
            "; ".join(problems) or f"{len(ALL_KINDS)} profile kinds, byte-identical CLI reruns")
