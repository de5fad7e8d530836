import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcof.channel import noise_variance
from qcof.coeffopt import (Equation, best_equation, candidate_equations, canonical_sign, equation_for,
                           gram_factor, lll_reduce, optimal_alpha, shortest_vector)
from conftest import brute_force_min

REF_H = np.array([1.0, 0.75, -math.sqrt(2.0)])


def test_optimal_alpha_examples():
    h = np.array([2.0, -1.0, 3.0])
    assert optimal_alpha(h, h, 1e12) == pytest.approx(1.0)
    assert optimal_alpha([1.0, 1.0], [1, -1], 50.0) == 0.0


def test_optimal_alpha_is_grid_minimum(rng):
    for _ in range(100):
        L = int(rng.integers(1, 5))
        h = rng.normal(size=L)
        a = rng.integers(-3, 4, size=L)
        snr = 10 ** rng.uniform(0, 3)
        a_star = optimal_alpha(h, a, snr)
        best = noise_variance(h, a, a_star, snr)
        grid = np.linspace(a_star - 1, a_star + 1, 2001)
        assert all(best <= noise_variance(h, a, g, snr) + 1e-12 * max(1, best) for g in grid)


def test_gram_scalar_case():
    g = gram_factor([1.0], 40.0)
    assert g.G[0, 0] == pytest.approx(40 / 41)


def test_gram_rejects_bad_input():
    with pytest.raises(ValueError):
        gram_factor([1.0, np.nan], 10.0)
    with pytest.raises(ValueError):
        gram_factor([1.0], 0.0)


def test_gram_eigenvalues_and_cholesky(rng):
    for _ in range(200):
        L = int(rng.integers(1, 7))
        h = rng.normal(size=L) * 2
        snr = 10 ** rng.uniform(-1, 5)
        g = gram_factor(h, snr)
        want = np.sort(np.append(snr / (1 + snr * h @ h), np.full(L - 1, snr)))
        assert np.allclose(np.sort(g.eigenvalues()), want, rtol=1e-8)
        assert np.allclose(g.Lfac @ g.Lfac.T, g.G, rtol=1e-10, atol=1e-10 * snr)
        assert np.allclose(g.G, np.linalg.inv(np.eye(L) / snr + np.outer(h, h)), rtol=1e-8, atol=1e-8 * snr)


def test_norm_matches_noise_variance(rng):
    for _ in range(200):
        L = int(rng.integers(1, 6))
        h = rng.normal(size=L)
        snr = 10 ** rng.uniform(0, 4)
        a = rng.integers(-5, 6, size=L)
        g = gram_factor(h, snr)
        want = noise_variance(h, a, optimal_alpha(h, a, snr), snr)
        assert g.norm_sq(a) == pytest.approx(want, rel=1e-8, abs=1e-10)


def test_lll_identity():
    B, T = lll_reduce(np.eye(3))
    assert np.array_equal(T, np.eye(3))
    assert np.allclose(B, np.eye(3))


def test_lll_near_parallel():
    basis = np.array([[1.0, 0.99], [0.0, 0.01]])
    B, T = lll_reduce(basis)
    assert np.linalg.norm(B[:, 0]) <= np.linalg.norm(basis, axis=0).min() + 1e-12
    assert np.allclose(basis @ T, B)


def test_lll_unimodular_and_approximation(rng):
    for _ in range(60):
        L = int(rng.integers(2, 5))
        basis = rng.normal(size=(L, L)) * rng.uniform(0.1, 10, size=L)
        B, T = lll_reduce(basis)
        assert T.dtype.kind == "i"
        assert round(abs(np.linalg.det(T))) == 1
        assert np.allclose(basis @ T, B)
        # shortest nonzero lattice vector by brute force over a box
        box = 50 if L == 2 else (12 if L == 3 else 5)
        r = np.arange(-box, box + 1)
        grid = np.stack(np.meshgrid(*([r] * L), indexing="ij"), -1).reshape(-1, L)
        grid = grid[np.any(grid != 0, axis=1)]
        lam1 = np.sqrt(np.min(np.sum((grid @ basis.T) ** 2, axis=1)))
        assert np.linalg.norm(B[:, 0]) <= 2 ** ((L - 1) / 2) * lam1 * (1 + 1e-9)


def test_shortest_vector_scalar():
    for snr in (1.0, 100.0, 1e6):
        g = gram_factor([1.0], snr)
        a = shortest_vector(g, 7)
        assert a.tolist() == [1]
        assert g.norm_sq(a) == pytest.approx(snr / (1 + snr))


def test_shortest_vector_reference_channel():
    g = gram_factor(REF_H, 100.0)
    want, val = brute_force_min(g, 7, box=20)
    got = shortest_vector(g, 7)
    assert g.norm_sq(got) == pytest.approx(val, rel=1e-12)
    assert np.array_equal(canonical_sign(got), canonical_sign(want))


def test_shortest_vector_aligned_channel():
    for snr in (1e3, 1e6):
        assert shortest_vector(gram_factor([1.0, 1.0], snr), 7).tolist() == [1, 1]


def test_best_equation_matches_brute_force(rng):
    for t in range(200):
        h = rng.normal(size=3)
        snr = 10 ** ([5.0, 15.0, 25.0][t % 3] / 10)
        eq = best_equation(h, snr, 7)
        _, val = brute_force_min(gram_factor(h, snr), 7, box=20)
        assert eq.sigma_eps_sq == pytest.approx(val, rel=1e-9)


def test_best_equation_scalar():
    snr = 99.0
    eq = best_equation([1.0], snr, 5)
    assert eq.a.tolist() == [1]
    assert eq.q.tolist() == [1]
    assert eq.alpha == pytest.approx(snr / (1 + snr))


def test_equation_consistency(rng):
    for _ in range(50):
        h = rng.normal(size=4)
        snr = 10 ** rng.uniform(0, 4)
        eq = best_equation(h, snr, 11)
        assert eq.sigma_eps_sq == pytest.approx(noise_variance(h, eq.a, eq.alpha, snr))
        assert np.array_equal(eq.q, np.mod(eq.a, 11))
        assert eq.sigma_eps_sq == pytest.approx(
            eq.a @ np.linalg.solve(np.eye(4) / snr + np.outer(h, h), eq.a), rel=1e-8)


def test_zero_q_is_excluded():
    # a multiple of p only loses to its primitive part, so the rule bites in the candidate lists
    h = np.array([1.0, 0.5])
    for a in candidate_equations(h, 1e4, 2, 8):
        assert np.any(np.mod(a.a, 2))
    g = gram_factor(h, 1e4)
    r = np.arange(-6, 7)
    grid = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
    ok = grid[np.any(np.mod(grid, 2) != 0, axis=1)]
    ok = np.unique([canonical_sign(a) for a in ok], axis=0)
    top = np.sort(g.norm_sq(ok))[:2]
    got = sorted(e.sigma_eps_sq for e in candidate_equations(h, 1e4, 2, 2))
    assert np.allclose(got, top, rtol=1e-9)
    with pytest.raises(ValueError):
        equation_for(h, [2, 4], 1e4, 2)


def test_equation_rejects_zero_q():
    with pytest.raises(ValueError):
        Equation(a=np.array([5, 0]), alpha=1.0, q=np.array([0, 0]), sigma_eps_sq=1.0, p=5)


def _random_orthogonal(rng, L):
    q, r = np.linalg.qr(rng.normal(size=(L, L)))
    return q * np.sign(np.diag(r))


def test_rotation_invariance(rng):
    from qcof.coeffopt import GramFactor
    for _ in range(30):
        h = rng.normal(size=3)
        snr = 10 ** rng.uniform(0.5, 3)
        g = gram_factor(h, snr)
        Q = _random_orthogonal(rng, 3)
        rotated = GramFactor(G=g.G, Lfac=g.Lfac @ Q.T, h=g.h, snr=g.snr)
        a1, a2 = shortest_vector(g, 7), shortest_vector(rotated, 7)
        assert g.norm_sq(a2) == pytest.approx(g.norm_sq(a1), rel=1e-9)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_canonical_sign(a):
    c = canonical_sign(a)
    assert np.array_equal(c, a) or np.array_equal(c, -np.asarray(a))
    nz = np.flatnonzero(c)
    assert nz.size == 0 or c[nz[0]] > 0


def test_returned_vector_is_canonical(rng):
    for _ in range(50):
        a = shortest_vector(gram_factor(rng.normal(size=3), 300.0), 7)
        assert np.array_equal(a, canonical_sign(a))


def test_candidates_sorted_and_distinct(rng):
    h = REF_H
    eqs = candidate_equations(h, 100.0, 7, 8)
    assert len(eqs) == 8
    vals = [e.sigma_eps_sq for e in eqs]
    assert vals == sorted(vals)
    assert eqs[0].sigma_eps_sq == pytest.approx(best_equation(h, 100.0, 7).sigma_eps_sq)
    assert len({tuple(e.a) for e in eqs}) == 8
