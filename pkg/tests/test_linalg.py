import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvgamma.exceptions import MVGammaError, NotPositiveDefiniteError
from mvgamma.linalg import (
    CovMatrix,
    FactorialForm,
    det_block_factorization,
    find_signature_m_matrix,
    lambda_factorial_decomposition,
    partition_blocks,
    random_spd,
    read_matrix,
    sylvester_identity,
    write_matrix,
)


def _is_z_matrix(prec, signs, tol=1e-12):
    m = signs[:, None] * prec * signs[None, :]
    off = m[~np.eye(len(signs), dtype=bool)]
    return bool(np.all(off <= tol))


def _two_coloring_signature(prec, tol=1e-12):
    """Independent oracle: the sign condition is a 2-coloring of the nonzero pattern."""
    p = prec.shape[0]
    signs = np.zeros(p, dtype=int)
    for root in range(p):
        if signs[root]:
            continue
        signs[root] = 1
        stack = [root]
        while stack:
            i = stack.pop()
            for j in range(p):
                if j == i or abs(prec[i, j]) <= tol:
                    continue
                want = -signs[i] * int(np.sign(prec[i, j]))
                if signs[j] == 0:
                    signs[j] = want
                    stack.append(j)
                elif signs[j] != want:
                    return None
    return signs


class TestCovMatrix:
    def test_symmetrizes_small_noise(self):
        a = np.array([[2.0, 0.5 + 1e-12], [0.5, 1.0]])
        c = CovMatrix(a)
        np.testing.assert_array_equal(c.entries, c.entries.T)
        np.testing.assert_allclose(c.diag, [2.0, 1.0])

    def test_rejects_asymmetry(self):
        with pytest.raises(MVGammaError, match="not symmetric"):
            CovMatrix([[1.0, 0.5], [0.4, 1.0]])

    @pytest.mark.parametrize("a", [np.diag([1.0, 0.0, 2.0]), -np.eye(3), [[1, 2], [2, 1]]])
    def test_rejects_non_pd(self, a):
        with pytest.raises(NotPositiveDefiniteError):
            CovMatrix(a)

    def test_rejects_non_square(self):
        with pytest.raises(MVGammaError):
            CovMatrix(np.ones((2, 3)))

    def test_logdet_and_inverse(self, spd4):
        c = CovMatrix(spd4)
        assert c.logdet() == pytest.approx(np.linalg.slogdet(spd4)[1], rel=1e-12)
        np.testing.assert_allclose(c.inv() @ spd4, np.eye(4), atol=1e-12)

    def test_immutable(self, spd4):
        c = CovMatrix(spd4)
        with pytest.raises(ValueError):
            c.entries[0, 0] = 5.0


class TestPartition:
    def test_zero_cross_block(self):
        s = np.diag([1.0, 2.0, 3.0])
        part = partition_blocks(s, 1)
        np.testing.assert_allclose(part.schur.entries, [[1.0]])

    def test_bivariate_scalar(self):
        part = partition_blocks([[1.0, 0.5], [0.5, 1.0]], 1)
        assert part.schur.entries[0, 0] == pytest.approx(0.75, rel=1e-15)

    def test_block_inverse_oracle(self, spd4):
        part = partition_blocks(spd4, 2)
        lead = np.linalg.inv(spd4)[:2, :2]
        np.testing.assert_allclose(part.schur.entries, np.linalg.inv(lead), rtol=1e-10)

    def test_blocks(self, spd4):
        part = partition_blocks(spd4, 1)
        assert part.p1 == 1 and part.p2 == 3
        np.testing.assert_array_equal(part.s21, part.s12.T)
        np.testing.assert_array_equal(part.s22.entries, spd4[1:, 1:])

    @pytest.mark.parametrize("p1", [0, 4, -1])
    def test_p1_out_of_range(self, spd4, p1):
        with pytest.raises(MVGammaError, match="partition size"):
            partition_blocks(spd4, p1)

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.data())
    @settings(max_examples=150, deadline=None)
    def test_schur_inverse_is_leading_block(self, p, seed, data):
        s = random_spd(p, np.random.default_rng(seed))
        p1 = data.draw(st.integers(1, p - 1))
        part = partition_blocks(s, p1)
        lead = np.linalg.inv(s)[:p1, :p1]
        np.testing.assert_allclose(np.linalg.inv(part.schur.entries), lead, rtol=1e-9, atol=1e-12)


class TestDetChain:
    def test_t_zero(self, spd4):
        rep = det_block_factorization(spd4, np.zeros(4), 2)
        assert rep.direct == pytest.approx(1.0)
        for v in rep.chain.values():
            assert v == pytest.approx(1.0, rel=1e-14)

    def test_identity_sigma(self):
        t = np.array([0.3, 1.2, 0.0, 2.5, 0.7])
        rep = det_block_factorization(np.eye(5), t, 3)
        expected = np.prod(1 + t)
        for v in [rep.direct, *rep.chain.values()]:
            assert v == pytest.approx(expected, rel=1e-14)

    def test_random_p5(self, gen):
        s = random_spd(5, gen)
        t = gen.uniform(0, 2, 5)
        rep = det_block_factorization(s, t, 2)
        assert rep.max_rel_error <= 1e-10
        assert len(rep.chain) == 6

    def test_negative_t_rejected(self, spd4):
        with pytest.raises(MVGammaError):
            det_block_factorization(spd4, [0.1, -0.2, 0.0, 1.0], 2)

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_chain_property(self, p, seed):
        g = np.random.default_rng(seed)
        s = random_spd(p, g)
        t = g.uniform(0, 3, p) * (g.uniform(size=p) > 0.2)
        for p1 in range(1, p):
            assert det_block_factorization(s, t, p1).max_rel_error <= 1e-9


class TestSylvester:
    def test_zero(self):
        assert sylvester_identity(np.zeros((2, 3)), np.ones((3, 2))) == (1.0, 1.0)

    def test_scalars(self):
        d1, d2 = sylvester_identity([[0.7]], [[-2.0]])
        assert d1 == pytest.approx(1 - 1.4) and d2 == pytest.approx(1 - 1.4)

    def test_random_3x2(self, gen):
        a = gen.uniform(-2, 2, (3, 2))
        b = gen.uniform(-2, 2, (2, 3))
        d1, d2 = sylvester_identity(a, b)
        assert abs(d1 - d2) / abs(d1) <= 1e-12
        assert d1 == pytest.approx(np.linalg.det(np.eye(2) + b @ a), rel=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(MVGammaError, match="conformable"):
            sylvester_identity(np.ones((3, 2)), np.ones((3, 2)))

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_property(self, p1, p2, seed):
        g = np.random.default_rng(seed)
        a = g.uniform(-2, 2, (p1, p2))
        b = g.uniform(-2, 2, (p2, p1))
        d1, d2 = sylvester_identity(a, b)
        assert abs(d1 - d2) <= 1e-10 * max(abs(d1), 1e-3)


class TestSignature:
    def test_identity(self):
        np.testing.assert_array_equal(find_signature_m_matrix(np.eye(4)), [1, 1, 1, 1])

    def test_tridiagonal_negative(self):
        prec = np.diag([2.0] * 5) + np.diag([-0.5] * 4, 1) + np.diag([-0.5] * 4, -1)
        np.testing.assert_array_equal(find_signature_m_matrix(np.linalg.inv(prec)), [1] * 5)

    def test_flip_second_coordinate(self):
        prec = np.array([[2.0, 0.5, -0.3], [0.5, 2.0, 0.4], [-0.3, 0.4, 2.0]])
        sigma = np.linalg.inv(prec)
        found = find_signature_m_matrix(sigma)
        # exhaustive oracle over all 2³ signatures
        valid = [s for s in itertools.product([1, -1], repeat=3)
                 if _is_z_matrix(prec, np.array(s))]
        assert {tuple(v) for v in valid} == {(1, -1, 1), (-1, 1, -1)}
        np.testing.assert_array_equal(found, [1, -1, 1])

    def test_none_for_frustrated_triangle(self):
        prec = np.array([[2.0, 0.5, 0.5], [0.5, 2.0, 0.5], [0.5, 0.5, 2.0]])
        assert find_signature_m_matrix(np.linalg.inv(prec)) is None

    def test_too_large(self):
        with pytest.raises(MVGammaError, match="p ≤ 20"):
            find_signature_m_matrix(np.eye(21))

    @given(st.integers(2, 9), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
    @settings(max_examples=150, deadline=None)
    def test_agrees_with_coloring_and_flip_invariant(self, p, seed, sparsity):
        g = np.random.default_rng(seed)
        # sparse precision matrices so that signatures exist often
        off = g.uniform(-1, 1, (p, p)) * (g.uniform(size=(p, p)) < sparsity)
        off = np.triu(off, 1)
        prec = off + off.T
        prec += np.diag(np.abs(prec).sum(axis=1) + 0.5)
        sigma = np.linalg.inv(prec)
        found = find_signature_m_matrix(sigma)
        oracle = _two_coloring_signature(np.linalg.inv(CovMatrix(sigma).entries))
        assert (found is None) == (oracle is None)
        if found is not None:
            assert _is_z_matrix(np.linalg.inv(sigma), found)
            d = g.choice([-1.0, 1.0], size=p)
            assert find_signature_m_matrix(d[:, None] * sigma * d[None, :]) is not None


class TestFactorialForm:
    def test_identity(self):
        f = lambda_factorial_decomposition(np.eye(3))
        assert f.lam == pytest.approx(1.0)
        assert f.m == 0
        assert f.a.shape == (3, 0)

    def test_equicorrelated(self):
        rho = 0.4
        s = (1 - rho) * np.eye(3) + rho * np.ones((3, 3))
        f = lambda_factorial_decomposition(s)
        assert f.lam == pytest.approx(0.6, rel=1e-12)
        assert f.m == 1
        col = f.a[:, 0] * np.sign(f.a[0, 0])
        np.testing.assert_allclose(col, np.full(3, np.sqrt(rho)), rtol=1e-12)
        np.testing.assert_allclose(f.reconstruct(), s, atol=1e-14)
        np.testing.assert_allclose(f.w, np.full(3, 0.6**-0.5))

    def test_random_p5(self, gen):
        s = random_spd(5, gen)
        f = lambda_factorial_decomposition(s)
        assert f.m == 4
        assert f.lam == pytest.approx(np.linalg.eigvalsh(s)[0], rel=1e-12)
        assert np.linalg.norm(f.reconstruct() - s) / np.linalg.norm(s) <= 1e-9
        np.testing.assert_allclose(f.b, f.w[:, None] * f.a)

    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_property(self, p, seed):
        s = random_spd(p, np.random.default_rng(seed))
        f = lambda_factorial_decomposition(s)
        assert f.m <= p - 1
        assert f.lam > 0
        assert np.linalg.norm(f.reconstruct() - s) / np.linalg.norm(s) <= 1e-9

    def test_user_supplied_validated(self):
        w = np.array([1.0, 2.0])
        a = np.array([[0.5], [0.25]])
        s = np.diag(w**-2) + a @ a.T
        f = FactorialForm.validated(w, a, s)
        assert f.m == 1
        with pytest.raises(MVGammaError, match="misses"):
            FactorialForm.validated(w, a, s + 0.01 * np.eye(2))

    def test_rejects_bad_w(self):
        with pytest.raises(MVGammaError):
            FactorialForm(np.array([1.0, -1.0]), np.zeros((2, 1)))


class TestMatrixIO:
    def test_round_trip(self, tmp_path, spd4):
        path = tmp_path / "s.txt"
        write_matrix(path, spd4)
        back = read_matrix(path)
        np.testing.assert_array_equal(back, spd4)
        assert path.read_text().splitlines()[0] == "4"

    @pytest.mark.parametrize(
        "text, msg",
        [("", "empty"), ("x\n1\n", "dimension"), ("2\n1 0\n", "expected 2 rows"),
         ("2\n1 0\n0\n", "row 2"), ("2\n1 a\n0 1\n", "row 1")],
    )
    def test_malformed(self, tmp_path, text, msg):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(MVGammaError, match=msg):
            read_matrix(path)
