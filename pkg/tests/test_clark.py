import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inner_dyn.clark import (
    AtomicMeasure,
    angular_derivative_check,
    clark_roundtrip_check,
    herglotz_F,
    inner_from_clark,
)
from inner_dyn.errors import DomainError, MobiusError, SpecError
from inner_dyn.inner import InnerFunctionSpec, chi, eval_disk
from inner_dyn.transfer import boole_check

from reference import BOOLE, DOUBLING

QUARTER = AtomicMeasure(((0.25, 0.5), (0.75, 0.5)))


def test_measure_validation(tmp_path):
    with pytest.raises(SpecError):
        AtomicMeasure(((0.1, 0.5), (0.2, 0.4)))
    with pytest.raises(SpecError):
        AtomicMeasure(((0.1, 0.5), (1.1, 0.5)))
    with pytest.raises(SpecError):
        AtomicMeasure(((0.1, -0.5), (0.2, 1.5)))
    with pytest.raises(SpecError):
        AtomicMeasure(())
    with pytest.raises(SpecError):
        AtomicMeasure.from_dict({"points": []})
    p = tmp_path / "m.json"
    import json

    p.write_text(json.dumps(QUARTER.to_dict()))
    assert AtomicMeasure.load(p) == QUARTER


def test_herglotz_examples():
    rng = np.random.default_rng(0)
    pi = AtomicMeasure.random(rng, 4)
    assert herglotz_F(pi, 0) == pytest.approx(1.0, abs=1e-15)
    z = np.array([0.3, -0.2 + 0.5j, 0.7j])
    assert np.max(np.abs(herglotz_F(QUARTER, z) - (1 - z**2) / (1 + z**2))) < 1e-15
    with pytest.raises(DomainError):
        herglotz_F(QUARTER, 1.0)


def test_quarter_reconstructs_minus_z_squared():
    spec = inner_from_clark(QUARTER)
    z = np.array([0.1, 0.4 - 0.3j, -0.6j])
    assert np.max(np.abs(eval_disk(spec, z) + z**2)) < 1e-14
    assert spec.rotation == pytest.approx(-1.0, abs=1e-14)
    assert spec.degree == 2 and spec.fixes_origin()
    assert max(abs(a) for a, _ in spec.zeros) < 1e-10


def test_single_atom_is_mobius():
    with pytest.raises(MobiusError) as info:
        inner_from_clark(AtomicMeasure(((0.0, 1.0),)))
    assert info.value.payload["phi"] == "z / chi(t)"
    assert info.value.payload["rotation"]["re"] == pytest.approx(1.0)


def test_roundtrip_examples():
    rep = clark_roundtrip_check(QUARTER)
    assert rep.max_error < 1e-12
    five = AtomicMeasure(tuple((j / 5 + 0.1, 0.2) for j in range(5)))
    assert clark_roundtrip_check(five).max_error < 1e-8
    asym = AtomicMeasure(((1 / 3, 0.7), (2 / 3, 0.3)))
    rep = clark_roundtrip_check(asym)
    assert rep.weight_error < 1e-8 and rep.location_error < 1e-8


def test_constructed_maps_satisfy_boole_identity():
    rng = np.random.default_rng(5)
    for k in (2, 3, 5):
        spec = inner_from_clark(AtomicMeasure.random(rng, k))
        for z in (0.3, -0.4j, 0.2 + 0.2j):
            assert boole_check(spec, z).residual < 1e-8


def test_angular_derivative_examples():
    for x in (0.1, 0.62):
        rep = angular_derivative_check(DOUBLING, x, x + 0.5)
        assert rep.finite
        ys = np.array([(x + 0.5) / 2, (x + 0.5) / 2 + 0.5])
        expected = np.sum(0.5 / np.abs(chi(x) - chi(ys)) ** 2)
        assert rep.value == pytest.approx(expected, rel=1e-12)
    assert not angular_derivative_check(BOOLE, 0.0, 0.5).finite
    assert angular_derivative_check(BOOLE, 0.5, 0.1).finite
    with pytest.raises(DomainError):
        angular_derivative_check(BOOLE, 0.3, 0.3)


def test_random_measures_separated():
    rng = np.random.default_rng(1)
    for _ in range(20):
        pi = AtomicMeasure.random(rng, 6, min_sep=0.02, min_mass=0.05)
        ts = np.sort(pi.locations)
        gaps = np.diff(np.append(ts, ts[0] + 1))
        assert gaps.min() >= 0.02 - 1e-12 and pi.masses.min() >= 0.05 - 1e-12


measures = st.tuples(st.integers(2, 8), st.integers(0, 2**32 - 1)).map(
    lambda a: AtomicMeasure.random(np.random.default_rng(a[1]), a[0], min_sep=0.02, min_mass=0.05)
)


@settings(max_examples=50, deadline=None)
@given(measures)
def test_roundtrip_property(pi):
    spec = inner_from_clark(pi)
    assert spec.degree == len(pi.atoms) and not spec.atoms and spec.fixes_origin()
    assert clark_roundtrip_check(pi, spec).max_error < 1e-7


@settings(max_examples=30, deadline=None)
@given(measures, st.integers(0, 2**32 - 1))
def test_herglotz_positive(pi, seed):
    rng = np.random.default_rng(seed)
    z = np.sqrt(rng.random(500)) * 0.999 * np.exp(2j * np.pi * rng.random(500))
    assert np.all(herglotz_F(pi, z).real > 0)
    assert herglotz_F(pi, 0.5j).real > 0
