"""Oracle bring-up: objective closed forms validated against brute force."""

import json
import os

import numpy as np
import pytest

from ctls.estimators import build_blocks, tls_solve
from ctls.oracle import (
    constrained_objective,
    feasible_sampler,
    grid_scan_tls_1d,
    tls_objective,
)

from conftest import make_instance

FIXTURE_PATH = os.path.join(os.path.dirname(__file__), "fixtures", "tls_1d_grid.json")


def load_grid_fixture():
    with open(FIXTURE_PATH, "r", encoding="utf-8") as fh:
        return json.load(fh)


# --- tls_objective ------------------------------------------------------------


def test_tls_objective_consistent_system_is_zero():
    a = np.array([[1.0], [2.0], [3.0]])
    x = np.array([[2.0]])
    assert tls_objective(a, a @ x, x) <= 1e-14


def test_tls_objective_zero_candidate():
    a = np.array([[1.0], [2.0]])
    b = np.array([[3.0], [1.0]])
    assert tls_objective(a, b, np.array([[0.0]])) == pytest.approx(10.0)


def test_tls_objective_matches_direct_minimization():
    """Brute-force grid over the perturbation of A on a 2-row instance.

    With x fixed, the right-hand perturbation is forced to
    (A+dA)x - B, so the objective reduces to a 2-D problem in dA that a
    dense scan solves to grid accuracy.
    """
    a = np.array([[1.0], [2.0]])
    b = np.array([[3.0], [1.0]])
    x = np.array([[0.7]])
    grid = np.linspace(-2.0, 2.0, 401)
    d1, d2 = np.meshgrid(grid, grid, indexing="ij")
    w = (a @ x - b).ravel()
    cost = (
        d1**2
        + d2**2
        + (w[0] + d1 * x[0, 0]) ** 2
        + (w[1] + d2 * x[0, 0]) ** 2
    )
    assert tls_objective(a, b, x) == pytest.approx(float(cost.min()), abs=1e-3)


def test_tls_objective_at_solution_equals_eigenvalue_sum():
    _, data = make_instance(j=0, k=0, n=3, ell=2, m=40, sigma=0.3,
                            model_seed=11, noise_seed=12)
    result = tls_solve(data.a, data.b)
    obj = tls_objective(data.a, data.b, result.x_hat)
    lam_sum = float(np.sum(result.smallest_eigs))
    assert abs(obj - lam_sum) <= 1e-8 * (1.0 + lam_sum)


# --- grid scan ---------------------------------------------------------------


def test_grid_fixture_reproduces():
    """The committed fixture must match a fresh scan bit-for-bit."""
    fixture = load_grid_fixture()
    grid = fixture["grid"]
    for inst in fixture["instances"]:
        _, data = make_instance(
            j=0, k=0, n=1, ell=1, m=inst["m"], sigma=inst["sigma"],
            model_seed=inst["model_seed"], noise_seed=inst["noise_seed"],
        )
        x_min, q_min = grid_scan_tls_1d(
            data.a, data.b, grid["lo"], grid["hi"], grid["num"]
        )
        assert x_min == inst["grid_argmin"]
        assert q_min == inst["grid_min_value"]


# --- constrained_objective ------------------------------------------------------


def test_constrained_objective_truth_on_exact_instance():
    model, data = make_instance(j=1, k=1, n=3, ell=1, m=30, sigma=0.0)
    probe = constrained_objective(build_blocks(data), model.x_true)
    assert probe.feasible
    assert probe.objective <= 1e-14


def test_constrained_objective_flags_infeasible():
    model, data = make_instance(j=1, k=1, n=3, ell=1, m=30, sigma=0.1)
    bad = model.x_true + 1.0  # violates the exact rows
    probe = constrained_objective(build_blocks(data), bad)
    assert not probe.feasible
    assert probe.objective is None


def test_constrained_objective_matches_direct_minimization():
    """2-row brute force with one fixed column (k=1, j=0, n=2)."""
    a = np.array([[1.0, 0.5], [2.0, -1.0]])
    b = np.array([[1.5], [0.5]])
    from ctls.model import PartitionSpec, ObservedData

    data = ObservedData(a=a, b=b, partition=PartitionSpec(j=0, k=1, n=2, ell=1, m=2))
    x = np.array([[0.3], [0.8]])
    blocks = build_blocks(data)
    probe = constrained_objective(blocks, x)

    # Perturb only the free column of A (denoted d) and B (forced by the
    # constraint): cost = |d|^2 + |(a1 x1 + (a2+d) x2) - b|^2.
    grid = np.linspace(-2.0, 2.0, 401)
    d1, d2 = np.meshgrid(grid, grid, indexing="ij")
    w = (a @ x - b).ravel()
    cost = (
        d1**2 + d2**2 + (w[0] + d1 * x[1, 0]) ** 2 + (w[1] + d2 * x[1, 0]) ** 2
    )
    assert probe.objective == pytest.approx(float(cost.min()), abs=1e-3)


def test_constrained_objective_reduces_to_tls_when_unconstrained():
    _, data = make_instance(j=0, k=0, n=2, ell=1, m=25, sigma=0.2)
    x = np.array([[0.4], [-1.1]])
    probe = constrained_objective(build_blocks(data), x)
    assert probe.objective == pytest.approx(tls_objective(data.a, data.b, x))


# --- feasible_sampler -------------------------------------------------------------


def test_sampler_radius_zero_returns_center():
    model, data = make_instance(j=1, k=0, n=3, ell=1, m=30, sigma=0.1)
    blocks = build_blocks(data)
    center = model.x_true
    for cand in feasible_sampler(blocks, center, 0.0, 5, seed=1):
        assert np.array_equal(cand, center)


def test_sampler_candidates_stay_feasible():
    model, data = make_instance(j=2, k=1, n=4, ell=2, m=40, sigma=0.0,
                                model_seed=3, noise_seed=4)
    blocks = build_blocks(data)
    cands = feasible_sampler(blocks, model.x_true, 0.5, 50, seed=2)
    for cand in cands:
        probe = constrained_objective(blocks, cand)
        assert probe.feasible
        step = np.linalg.norm(cand - model.x_true, "fro")
        assert step == pytest.approx(0.5, rel=1e-10)


def test_sampler_spread_and_determinism():
    model, data = make_instance(j=1, k=1, n=3, ell=1, m=30, sigma=0.1)
    blocks = build_blocks(data)
    c1 = feasible_sampler(blocks, model.x_true, 0.1, 10, seed=5)
    c2 = feasible_sampler(blocks, model.x_true, 0.1, 10, seed=5)
    for a_, b_ in zip(c1, c2):
        assert np.array_equal(a_, b_)
    dists = [np.linalg.norm(c1[i] - c1[j]) for i in range(10) for j in range(i + 1, 10)]
    assert min(dists) > 0.0
