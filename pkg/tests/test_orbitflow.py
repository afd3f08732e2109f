import math

import numpy as np
import pytest

from orbitlab.errors import ConfigError, ScheduleViolation
from orbitlab.lattice import covolume, observables
from orbitlab.numfield import orbit_matrix
from orbitlab.orbitflow import (DiagonalParameter, OrbitSamplePlan, apply_flow, check_schedule,
                                equidist_trend, exact_period_average, haar_reference_d2,
                                observables_csv, orbit_period_d2, sample_orbit, sample_t)

RADII = (0.8, 1.0, 1.5)
LOG_EPS = math.log(1 + math.sqrt(2))


@pytest.fixture
def basis(sqrt2):
    return [sqrt2.one(), sqrt2.gen()]


def obs(b):
    lam, counts = observables(b, RADII)
    return round(lam, 12), counts


def test_diagonal_parameter_is_trace_zero():
    assert DiagonalParameter.from_free([0.5, -2.0]).t == (0.5, -2.0, 1.5)
    with pytest.raises(ConfigError):
        DiagonalParameter((1.0, 1.0))


def test_flow_at_zero_is_normalized_g(basis):
    g = orbit_matrix(basis)
    b = apply_flow(g, (0.0, 0.0))
    ref = g.to_numpy() / math.sqrt(2 * math.sqrt(2))
    assert np.allclose(b.rows, ref, atol=1e-15)
    assert obs(b) == obs(apply_flow(ref.tolist(), (0.0, 0.0)))


@pytest.mark.parametrize("sign", [1, -1])
def test_unit_flow_is_a_symmetry(basis, sign):
    g = orbit_matrix(basis)
    assert obs(apply_flow(g, (sign * LOG_EPS, -sign * LOG_EPS))) == obs(apply_flow(g, (0.0, 0.0)))


def test_flowed_covolume_is_one(cubic49):
    b = cubic49.gen()
    g = orbit_matrix([cubic49.one(), b, b * b])
    rng = np.random.default_rng(0)
    for _ in range(10):
        t = DiagonalParameter.from_free(rng.uniform(-8, 8, size=2))
        assert abs(float(covolume(apply_flow(g, t))) - 1) < 2.0 ** -64


def test_flow_additivity(cubic49):
    b = cubic49.gen()
    g = orbit_matrix([cubic49.one(), b, b * b])
    t1, t2 = (1.5, -0.25, -1.25), (-0.5, 2.0, -1.5)
    once = apply_flow(g, tuple(a + c for a, c in zip(t1, t2)))
    first = apply_flow(g, t1)
    twice = apply_flow([[x for x in r] for r in first.rows.tolist()], t2)
    assert obs(once) == obs(twice)


def test_permuting_the_basis_keeps_observables(cubic49):
    b = cubic49.gen()
    plan = OrbitSamplePlan(T=3.0, N=25, seed=4, radii=RADII)
    a = sample_orbit(orbit_matrix([cubic49.one(), b, b * b]), plan)
    c = sample_orbit(orbit_matrix([b * b, cubic49.one(), b]), plan)
    assert [(round(x.lambda1, 12), x.counts) for x in a] == [(round(x.lambda1, 12), x.counts) for x in c]


def test_single_sample_at_T0(basis):
    g = orbit_matrix(basis)
    (o,) = sample_orbit(g, OrbitSamplePlan(T=0.0, N=1, seed=3, radii=RADII))
    assert o.t == (0.0, 0.0)
    assert (round(o.lambda1, 12), list(o.counts)) == obs(apply_flow(g, (0.0, 0.0)))


def test_sample_t_is_counter_based():
    a = [sample_t(5, i, 3, 2.0) for i in range(50)]
    assert sample_t(5, 37, 3, 2.0) == a[37]
    assert all(abs(x) <= 2.0 for t in a for x in t[:2]) and all(abs(sum(t)) < 1e-15 for t in a)
    assert a != [sample_t(6, i, 3, 2.0) for i in range(50)]


def test_sampling_is_deterministic_across_runs_and_workers(basis):
    g = orbit_matrix(basis)
    plan = OrbitSamplePlan(T=20.0, N=60, seed=7, radii=RADII)
    one = observables_csv(sample_orbit(g, plan, jobs=1))
    assert one == observables_csv(sample_orbit(g, plan, jobs=1))
    assert one == observables_csv(sample_orbit(g, plan, jobs=2))


def test_observable_invariants(basis):
    for o in sample_orbit(orbit_matrix(basis), OrbitSamplePlan(T=20.0, N=200, seed=1, radii=RADII)):
        assert all(c % 2 == 0 for c in o.counts) and list(o.counts) == sorted(o.counts)
        assert o.lambda1 <= math.sqrt(2 / math.sqrt(3)) + 1e-12


def test_period_of_sqrt2_orbit(basis):
    period, k = orbit_period_d2(basis)
    assert k == 1
    assert abs(period - 2 * LOG_EPS) < 1e-14


def test_period_endpoint_reproduces_start(basis):
    g = orbit_matrix(basis)
    period, _ = orbit_period_d2(basis)
    assert obs(apply_flow(g, (period, -period))) == obs(apply_flow(g, (0.0, 0.0)))


def test_quadrature_self_convergence(basis):
    a = exact_period_average(basis, RADII, M=1000)
    b = exact_period_average(basis, RADII, M=2000)
    assert abs(a["lambda1"] / b["lambda1"] - 1) < 0.005


@pytest.mark.slow
def test_box_average_improves_with_T(basis):
    # at N = 2e4 a single seed's error is dominated by sampling noise, so pool four seeds
    g = orbit_matrix(basis)
    exact = exact_period_average(basis, RADII, M=4000)["lambda1"]
    err = {}
    for T in (10.0, 40.0):
        means = []
        for seed in range(4):
            s = sample_orbit(g, OrbitSamplePlan(T=T, N=20_000, seed=seed, radii=RADII))
            means.append(math.fsum(o.lambda1 for o in s) / len(s))
        err[T] = abs(math.fsum(means) / len(means) - exact)
    assert err[40.0] <= err[10.0]


def test_haar_reference_validation():
    with pytest.raises(ConfigError):
        haar_reference_d2(10, 0.01, 0)
    a = haar_reference_d2(40, 1e-4, 2, RADII)
    assert observables_csv(a) == observables_csv(haar_reference_d2(40, 1e-4, 2, RADII, jobs=2))


@pytest.mark.slow
def test_haar_reference_two_scales():
    means = []
    for y in (1e-4, 1e-5):
        ref = haar_reference_d2(100_000, y, 1, (1.0,))
        means.append(math.fsum(o.counts[0] for o in ref) / len(ref))
    assert abs(means[0] / means[1] - 1) < 0.02
    assert abs(means[0] / math.pi - 1) < 0.03


def test_schedule_hypothesis():
    check_schedule([(0, 2), (0, 4), (0, 6)])
    with pytest.raises(ScheduleViolation):
        check_schedule([(0, 0), (0, 0), (0, 0)])
    with pytest.raises(ScheduleViolation):
        check_schedule([(0, 2), (0, 4), (0, 4)])


def test_cubic_levels_stabilize(cubic49):
    b = cubic49.gen()
    plan = OrbitSamplePlan(T=20.0, N=2000, seed=21, radii=RADII)
    rep = equidist_trend([cubic49.one(), b, b * b], 2, [(0, n, 2 * n) for n in (2, 4, 6)], plan)
    c = rep["consecutive"]["lambda1"]
    assert c[1] < c[0]
    assert rep["reference"].startswith("largest-n")
