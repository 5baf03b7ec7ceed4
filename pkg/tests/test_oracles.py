import math

import numpy as np
import pytest

from winterbottom_lab import OracleCase, RegimeError, reference_area, reference_energy, winterbottom
from winterbottom_lab.oracles import CASES, reference_ratio, reference_wetted_length


def grid(case_id, shift=0.25, count=11):
    lo, hi = OracleCase(case_id, 0.0, shift).interval()
    return np.linspace(lo, hi, count + 2)[1:-1]


def test_values_by_hand():
    assert reference_area(OracleCase("euclidean_disk", 0.5)) == pytest.approx(math.pi / 3 - math.sqrt(3) / 4, rel=1e-15)
    assert reference_energy(OracleCase("euclidean_disk", 0.0)) == pytest.approx(math.pi, rel=1e-15)
    assert reference_energy(OracleCase("l1_square", 0.5)) == 2
    assert reference_area(OracleCase("l1_square", 0.5)) == 1
    # at beta = a the chord passes through the centre: half disk, arc integral pi + 2a, minus 2a
    c = OracleCase("shifted_disk", 0.25, 0.25)
    assert reference_area(c) == pytest.approx(math.pi / 2, rel=1e-15)
    assert reference_energy(c) == pytest.approx(math.pi, rel=1e-15)


def test_shifted_energy_by_quadrature():
    from scipy.integrate import quad

    a = 0.25
    for beta in grid("shifted_disk", a, 7):
        d = beta - a
        t1 = math.asin(d)
        arc, _ = quad(lambda t: 1 + a * math.sin(t), t1, math.pi - t1, epsabs=1e-14)
        ref = arc - beta * 2 * math.sqrt(1 - d * d)
        assert reference_energy(OracleCase("shifted_disk", beta, a)) == pytest.approx(ref, abs=1e-12)


def test_interval_is_open():
    with pytest.raises(RegimeError):
        OracleCase("euclidean_disk", 1.0)
    with pytest.raises(RegimeError):
        OracleCase("shifted_disk", -0.75, 0.25)
    with pytest.raises(ValueError):
        OracleCase("hexagon", 0.0)


@pytest.mark.parametrize("case_id", CASES)
def test_engine_agreement(case_id):
    for beta in grid(case_id):
        case = OracleCase(case_id, beta)
        W = winterbottom(case.anisotropy(), beta, 2048)
        tol = 1e-12 if case_id == "l1_square" else 1e-4
        assert W.area == pytest.approx(reference_area(case), abs=tol)
        assert W.energy.total == pytest.approx(reference_energy(case), abs=tol)
        assert W.energy.wetted_length == pytest.approx(reference_wetted_length(case), abs=max(tol, 1e-5))


@pytest.mark.parametrize("case_id", CASES)
def test_ratio_derivative_is_minus_scaled_wetted_length(case_id):
    # envelope argument on the scale-free ratio E / sqrt(A)
    h = 1e-5
    for beta in grid(case_id, count=9):
        c = OracleCase(case_id, beta)
        d = (reference_ratio(OracleCase(case_id, beta + h)) - reference_ratio(OracleCase(case_id, beta - h))) / (2 * h)
        assert d == pytest.approx(-reference_wetted_length(c) / math.sqrt(reference_area(c)), abs=1e-6)


def test_energy_derivative_of_disk_family():
    # without the area constraint the derivative picks up the shape change: dE/dbeta = -2 * wetted
    h = 1e-5
    for beta in grid("euclidean_disk", count=9):
        d = (reference_energy(OracleCase("euclidean_disk", beta + h)) - reference_energy(OracleCase("euclidean_disk", beta - h))) / (2 * h)
        assert d == pytest.approx(-2 * reference_wetted_length(OracleCase("euclidean_disk", beta)), abs=1e-6)
