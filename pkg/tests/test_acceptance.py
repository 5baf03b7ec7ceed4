"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from conftest import family, l1
from winterbottom_lab import (
    AnisotropySpec,
    HalfPlanePolygon,
    OracleCase,
    Regime,
    build_psi,
    capillary_energy,
    clip_to_halfplane,
    energy_identity_check,
    hausdorff,
    hausdorff_mod_horizontal,
    horizontal_shift_vector,
    minimize_ratio,
    random_polygon,
    reference_area,
    reference_energy,
    regime,
    verify_inequality_sample,
    winterbottom,
    wulff,
    wulff_translation_check,
)
from winterbottom_lab.oracles import CASES
from winterbottom_lab.winterbottom import _poles

POLICIES = ("barycenter", "min_lex", "max_lex")
# side tensions phi(e1) + phi(-e1) = 2; the quadratic test anisotropy has 2 sqrt(2)
REFERENCE_FAMILIES = ("euclidean", "l1", "shifted")


def beta_grid(phi, count=21):
    """``count`` points spanning the central 95% of the admissible interval."""
    up, down = _poles(phi)
    lo, hi = -down, up
    return lo + (hi - lo) * (0.025 + 0.95 * np.linspace(0, 1, count))


def policies_for(phi):
    return POLICIES if phi.is_polytope else ("barycenter",)


def verdict(capsys, number, title, ok, detail, seconds):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}: {detail} ({seconds:.1f} s)")
    assert ok, detail


def test_criterion_1_energy_identity(capsys):
    t0 = time.perf_counter()
    polys = [random_polygon(k, 16, 1.0, contact=(k % 2 == 0)) for k in range(1000)]
    worst, checks = 0.0, 0
    for phi in family().values():
        for beta in beta_grid(phi):
            for policy in policies_for(phi):
                psi = build_psi(phi, beta, policy)
                for P in polys:
                    r = energy_identity_check(phi, beta, P, psi=psi)
                    worst = max(worst, r / (1.0 + abs(capillary_energy(phi, beta, P).total)))
                    checks += 1
    dt = time.perf_counter() - t0
    verdict(capsys, 1, "energy identity", worst <= 1e-9, f"{checks} checks, worst scaled residual {worst:.2e} <= 1e-9", dt)


def test_criterion_2_wulff_translation(capsys):
    t0 = time.perf_counter()
    lines, ok = [], True
    for name, phi in family().items():
        worst_ratio, worst_exact = 0.0, 0.0
        for beta in beta_grid(phi, 5):
            for policy in policies_for(phi):
                t = wulff_translation_check(phi, beta, policy, 2048)
                if t.exact:
                    worst_exact = max(worst_exact, t.residual)
                    ok &= t.residual <= 1e-9
                else:
                    worst_ratio = max(worst_ratio, t.residual / t.discretization_bound)
                    ok &= t.residual <= 5 * t.discretization_bound
        lines.append(f"{name} " + (f"{worst_exact:.1e}" if phi.is_polytope else f"{worst_ratio:.2f}xbound"))
    dt = time.perf_counter() - t0
    verdict(capsys, 2, "Wulff translation", ok and dt < 10, ", ".join(lines), dt)


def test_criterion_3_horizontality(capsys):
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    for phi in family().values():
        for beta in beta_grid(phi):
            for policy in POLICIES:
                _, r = horizontal_shift_vector(phi, beta, policy)
                worst = max(worst, r)
                n += 1
    # explicit subgradients along the flat top of the l1 square
    for x in np.linspace(-1, 1, 9):
        for beta in (-0.7, 0.3, 0.9):
            _, r = horizontal_shift_vector(l1(), beta, [x, 1.0] if beta >= 0 else [x, -1.0])
            worst = max(worst, r)
            n += 1
    dt = time.perf_counter() - t0
    verdict(capsys, 3, "horizontality", worst <= 1e-12 and dt < 1, f"{n} cases, worst |<b,e2>| {worst:.1e}", dt)


def test_criterion_4_oracles(capsys):
    t0 = time.perf_counter()
    worst = {}
    ok = True
    for case_id in CASES:
        lo, hi = OracleCase(case_id, 0.0).interval()
        tol = 1e-12 if case_id == "l1_square" else 1e-4
        w = 0.0
        for beta in np.linspace(lo, hi, 13)[1:-1]:
            case = OracleCase(case_id, beta)
            W = winterbottom(case.anisotropy(), beta, 2048)
            err = max(abs(W.area - reference_area(case)), abs(W.energy.total - reference_energy(case)))
            w = max(w, err)
            ok &= err <= tol
        worst[case_id] = w
    dt = time.perf_counter() - t0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(capsys, 4, "closed-form oracles", ok and dt < 10, detail, dt)


MINIMALITY_CASES = [
    ("euclidean_disk", 0.0),
    ("euclidean_disk", 0.5),
    ("euclidean_disk", -0.5),
    ("l1_square", 0.0),
    ("l1_square", 0.5),
    ("shifted_disk", -0.5),
    ("shifted_disk", 0.25),
]


def minimality(case_id, beta):
    phi = OracleCase(case_id, beta).anisotropy()
    t0 = time.perf_counter()
    violations, worst = verify_inequality_sample(phi, beta, 200, 0)
    rep = minimize_ratio(phi, beta)
    dt = time.perf_counter() - t0
    rel_h = rep.hausdorff_mod_translation / rep.winterbottom_diameter
    ok = violations == 0 and rep.relative_gap <= 0.01 and rel_h <= 0.05 and dt < 60
    detail = (
        f"{case_id} beta={beta:+.2f}: violations {violations} (worst margin {worst:.3f}), "
        f"gap {rep.relative_gap:.1e}, hausdorff/diam {rel_h:.1e}"
    )
    return ok, detail, dt


@pytest.mark.parametrize("case_id,beta", MINIMALITY_CASES, ids=[f"{c}_{b:+.2f}" for c, b in MINIMALITY_CASES])
def test_criterion_5_minimality(capsys, case_id, beta):
    ok, detail, dt = minimality(case_id, beta)
    verdict(capsys, 5, "minimality", ok, detail, dt)


def test_criterion_6_eta_invariance(capsys):
    t0 = time.perf_counter()
    phi, beta = l1(), 0.5
    W = winterbottom(phi, beta)
    energies, bodies = [], []
    for policy in POLICIES:
        psi = build_psi(phi, beta, policy)
        # the minimum of the capillary energy, computed as the psi-perimeter of the minimiser
        energies.append(float(np.sum(psi(W.polygon.interior_edge_normals))))
        bodies.append(wulff(psi).vertices)
    spread = max(energies) - min(energies)
    lift = np.array([0.0, 2.0])  # move bodies into the half-plane for the polygon distance
    dist = max(
        hausdorff_mod_horizontal(HalfPlanePolygon(bodies[0] + lift), HalfPlanePolygon(B + lift)) for B in bodies[1:]
    )
    distinct = min(hausdorff(bodies[0], B) for B in bodies[1:])
    dt = time.perf_counter() - t0
    ok = spread <= 1e-9 and dist <= 1e-9 and distinct > 0.1 and dt < 5
    detail = f"energy spread {spread:.1e}, Wulff bodies mod horizontal {dist:.1e} (unaligned {distinct:.2f})"
    verdict(capsys, 6, "eta-choice invariance", ok, detail, dt)


def test_criterion_7_degenerate_regimes(capsys):
    from winterbottom_lab import witness_sequence

    t0 = time.perf_counter()
    ok, notes = True, []
    for name, phi in family().items():
        up, down = _poles(phi)
        above = witness_sequence(phi, up + 0.1, 10)
        ok &= above[-1][1] < -100
        seq = witness_sequence(phi, up, 18)
        crit = [e for _, e in seq]
        ok &= all(e > 0 for e in crit) and bool(np.all(np.diff(crit) < 0))
        # at critical wetting the energy is exactly (phi(e1) + phi(-e1)) h
        side = float(phi([1.0, 0.0]) + phi([-1.0, 0.0]))
        ok &= all(abs(e - side * h) <= 1e-12 * (1 + up / h) for h, e in seq)
        if name in REFERENCE_FAMILIES:
            ok &= crit[-1] < 1e-5
        expected = {
            -down - 1.0: Regime.DETACHED_WULFF,
            -down: Regime.DETACHED_WULFF,
            float(np.nextafter(-down, 0)): Regime.WINTERBOTTOM,
            0.0: Regime.WINTERBOTTOM,
            float(np.nextafter(up, 0)): Regime.WINTERBOTTOM,
            up: Regime.CRITICAL_WETTING,
            float(np.nextafter(up, np.inf)): Regime.UNBOUNDED_BELOW,
            up + 5.0: Regime.UNBOUNDED_BELOW,
        }
        ok &= all(regime(phi, b) is r for b, r in expected.items())
        notes.append(f"{name} E10={above[-1][1]:.0f} E18={crit[-1]:.1e}")
    dt = time.perf_counter() - t0
    verdict(capsys, 7, "degenerate regimes", ok and dt < 1, ", ".join(notes), dt)


def test_criterion_8_beta_zero(capsys):
    t0 = time.perf_counter()
    ok, notes = True, []
    for phi in family().values():
        half = clip_to_halfplane(wulff(phi).vertices)
        ok &= hausdorff(winterbottom(phi, 0.0).polygon, half) == 0
        # beta = 0: energy is the relative perimeter alone
        e = capillary_energy(phi, 0.0, half)
        ok &= e.total == e.relative_perimeter
    for case_id, beta in MINIMALITY_CASES:
        if beta == 0.0:
            good, detail, _ = minimality(case_id, beta)
            ok &= good
            notes.append(detail)
    dt = time.perf_counter() - t0
    verdict(capsys, 8, "beta = 0 relative isoperimetry", ok, "; ".join(notes), dt)
