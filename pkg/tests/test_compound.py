import itertools

import numpy as np
import pytest

from laotest import (
    CompoundReliabilityTensor,
    HypothesisSet,
    MultiObjectSpec,
    ReliabilityMatrix,
    build_compound,
    build_matrix,
    check_conditions_multi,
    classify_family,
    compose_tensor,
    family_c_fill,
)
from laotest.compound import per_object_reports, recover_right_exponents
from laotest.single import diagonal_bounds

# grid oracle, step 1e-6
E21 = 1.572199733555608   # G2 onto the 0.05-ball of G1
E31 = 0.0077657113803246205
E12 = 1.7120527340578113
E32 = 0.868930985687871
E13 = 0.05                 # equals the diagonal


def toy_matrix(a, b):
    return ReliabilityMatrix(np.array([[a, a], [b, b]]))


def random_tensor(rng, K, M):
    mats = []
    for _ in range(K):
        E = rng.uniform(0.1, 2.0, size=(M, M))
        np.fill_diagonal(E, np.inf)
        np.fill_diagonal(E, E.min(axis=1))
        mats.append(ReliabilityMatrix(E))
    return compose_tensor(mats)


def random_spec(seed, K=3):
    rng = np.random.default_rng(seed)
    while True:
        d = rng.dirichlet([1, 1], size=3)
        if d.min() > 0.03:
            break
    H = HypothesisSet(tuple(map(tuple, d)))
    slices = []
    for _ in range(K):
        first = diagonal_bounds(H, [0.0, 0.0])[0][0]
        e1 = float(rng.uniform(0.3, 1.3)) * first
        b = diagonal_bounds(H, [e1, 0.0])[1]
        e2 = float(rng.uniform(0.3, 1.3)) * min(b[0], b[2])
        slices.append([e1, e2])
    return MultiObjectSpec.from_slices(H, slices)


class TestToyAdditivity:
    def test_sums(self):
        T = compose_tensor([toy_matrix(0.3, 0.7), toy_matrix(0.3, 0.7)])
        assert T((1, 1), (2, 2)) == pytest.approx(0.6)
        assert T((1, 1), (2, 1)) == pytest.approx(0.3)
        assert T((2, 1), (1, 2)) == pytest.approx(1.0)

    def test_diagonal_is_min_over_neighbours(self):
        T = compose_tensor([toy_matrix(0.3, 0.7), toy_matrix(0.3, 0.7)])
        assert T((1, 1), (1, 1)) == pytest.approx(0.3)

    def test_k_below_two(self):
        with pytest.raises(ValueError):
            compose_tensor([toy_matrix(0.3, 0.7)])

    def test_dimension_mismatch(self, H3):
        with pytest.raises(ValueError):
            compose_tensor([toy_matrix(0.3, 0.7), build_matrix(H3, [0.05, 0.05])])

    def test_bad_tuple(self):
        T = compose_tensor([toy_matrix(0.3, 0.7), toy_matrix(0.3, 0.7)])
        with pytest.raises(IndexError):
            T((1, 3), (1, 1))


class TestTensorProperties:
    @pytest.mark.parametrize("K, M", [(2, 2), (2, 4), (3, 3), (4, 2), (4, 4)])
    def test_additivity_random_tuples(self, K, M):
        rng = np.random.default_rng(K * 10 + M)
        T = random_tensor(rng, K, M)
        for _ in range(200):
            m = tuple(rng.integers(1, M + 1, size=K))
            l = tuple(rng.integers(1, M + 1, size=K))
            if m == l:
                continue
            expected = sum(T.matrices[i](m[i], l[i]) for i in range(K) if m[i] != l[i])
            assert T(m, l) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("K, M", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_diagonal_exhaustive(self, K, M):
        rng = np.random.default_rng(7 + K * M)
        T = random_tensor(rng, K, M)
        for m in T.tuples():
            brute = min(T(m, l) for l in T.tuples() if l != m)
            assert T(m, m) == pytest.approx(brute, rel=1e-14)

    @pytest.mark.parametrize("K, M", [(2, 2), (3, 3)])
    def test_diagonal_exhaustive_with_right_exponents(self, K, M):
        rng = np.random.default_rng(99)
        mats = random_tensor(rng, K, M).matrices
        T = compose_tensor(mats, rng.uniform(0, 0.5, size=(K, M)))
        for m in T.tuples():
            assert T(m, m) == pytest.approx(min(T(m, l) for l in T.tuples() if l != m), rel=1e-14)

    def test_permutation(self, H3):
        slices = [[0.05, 0.05], [0.03, 0.2], [0.08, 0.4]]
        T = build_compound(MultiObjectSpec.from_slices(H3, slices))
        perm = (2, 0, 1)
        P = build_compound(MultiObjectSpec.from_slices(H3, [slices[p] for p in perm]))
        Q = T.permuted(perm)
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = tuple(rng.integers(1, 4, size=3))
            l = tuple(rng.integers(1, 4, size=3))
            pm, pl = [0] * 3, [0] * 3
            for j, p in enumerate(perm):
                pm[p], pl[p] = m[j], l[j]
            assert P(m, l) == pytest.approx(T(pm, pl), rel=1e-12)
            assert Q(m, l) == P(m, l)

    def test_symmetric_given(self, H3):
        T = build_compound(MultiObjectSpec.from_slices(H3, [[0.05, 0.05]] * 3))
        for m, l in [((1, 2, 3), (2, 3, 3)), ((3, 3, 1), (1, 2, 2))]:
            vals = {round(T(tuple(m[p] for p in q), tuple(l[p] for p in q)), 12)
                    for q in itertools.permutations(range(3))}
            assert len(vals) == 1

    def test_dense_matches_lazy(self, H3):
        T = build_compound(MultiObjectSpec.from_slices(H3, [[0.05, 0.05], [0.03, 0.2]]))
        D = T.dense()
        tuples = T.tuples()
        assert D.shape == (9, 9)
        for r, m in enumerate(tuples):
            for c, l in enumerate(tuples):
                assert D[r, c] == pytest.approx(T(m, l), rel=1e-14)

    def test_dense_guard(self, H3):
        E = build_matrix(H3, [0.05, 0.05])
        T = compose_tensor([E] * 9)
        assert T(tuple([1] * 9), tuple([2] * 9)) == pytest.approx(9 * E(1, 2))
        with pytest.raises(ValueError):
            T.dense()


class TestBuildCompound:
    def test_frozen_entries(self, H3):
        T = build_compound(MultiObjectSpec.from_slices(H3, [[0.05, 0.05]] * 3))
        assert T((2, 1, 3), (1, 3, 1)) == pytest.approx(E21 + E13 + E31, abs=1e-8)
        assert T((1, 3, 3), (2, 2, 3)) == pytest.approx(E12 + E32, abs=1e-8)
        assert T((2, 1, 1), (1, 1, 1)) == pytest.approx(E21, abs=1e-8)

    def test_fig2_entry(self, H3):
        T = build_compound(MultiObjectSpec.from_slices(H3, [[0.05, 0.05], [0.05, 0.05]]))
        assert T((2, 1), (1, 2)) == pytest.approx(T.matrices[0](2, 1) + T.matrices[1](1, 2), rel=1e-14)

    def test_all_positive_when_feasible(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.05, 0.05], [0.03, 0.2], [0.08, 0.4]])
        assert check_conditions_multi(spec).ok
        D = build_compound(spec).dense()
        assert np.all(D > 0)

    def test_violation_gives_zero(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.05, 0.05], [0.2, 0.05]])
        assert not check_conditions_multi(spec).ok
        T = build_compound(spec, force=True)
        assert T((1, 3), (1, 1)) == 0.0
        assert np.any(T.dense() == 0)

    def test_zero_propagation(self, H3):
        # object 1 uses a zero diagonal at 1, so its E_{1|3} vanishes
        T = build_compound(MultiObjectSpec.from_slices(H3, [[0.0, 0.05], [0.05, 0.05]]))
        assert T.matrices[0](1, 3) == 0.0
        assert T((1, 2), (3, 2)) == 0.0
        for l2 in (1, 3):
            assert T((1, 2), (3, l2)) == pytest.approx(T((1, 2), (1, l2)), abs=0)

    def test_spec_validation(self, H3):
        with pytest.raises(ValueError):
            MultiObjectSpec(2, H3, {(1, 1): 0.1, (2, 1): 0.1, (1, 2): 0.1})
        with pytest.raises(ValueError):
            MultiObjectSpec.from_slices(H3, [[0.1, 0.1]])
        with pytest.raises(ValueError):
            MultiObjectSpec.from_slices(H3, [[0.1, -0.1], [0.1, 0.1]])


class TestConditionsMulti:
    def test_all_small_pass(self, H3):
        assert check_conditions_multi(MultiObjectSpec.from_slices(H3, [[0.05, 0.05]] * 3)).ok

    def test_first_bound(self, H3):
        rep = check_conditions_multi(MultiObjectSpec.from_slices(H3, [[0.05, 0.05], [0.11, 0.05], [0.05, 0.05]]))
        assert not rep.ok
        assert {(v.obj, v.hypothesis, v.kind) for v in rep.violations} == {(2, 1, "divergence")}

    @pytest.mark.parametrize("seed", range(50))
    def test_parity_with_per_object(self, seed):
        spec = random_spec(seed)
        multi = check_conditions_multi(spec)
        singles = per_object_reports(spec)
        assert multi.ok == all(r.ok for r in singles)
        got = {(v.obj, v.hypothesis, v.kind, v.witness) for v in multi.violations}
        want = {(i, v.hypothesis, v.kind, v.witness)
                for i, r in enumerate(singles, start=1) for v in r.violations}
        assert got == want


class TestFamilies:
    def test_a(self):
        f = classify_family([[0.1, 0.2], [0.1, 0.2], [0.3, 0.1]])
        assert f.label == "A" and f.witness == ()

    def test_b(self):
        f = classify_family([[0.1, 0.2], [0.0, 0.2], [0.0, 0.1]])
        assert f.label == "B"
        assert f.witness == ((2, 1), (3, 1))

    def test_c(self):
        f = classify_family([[0.0, 0.2], [0.0, 0.2], [0.0, 0.1]])
        assert f.label == "C"

    def test_single_zero_is_outside(self):
        assert classify_family([[0.0, 0.2], [0.1, 0.2], [0.2, 0.1]]).label == "outside"

    def test_symmetric_recovery(self):
        assert recover_right_exponents((0.4, 0.4, 0.4)) == pytest.approx((0.2, 0.2, 0.2))

    def test_fill_round_trip(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.0, 0.05], [0.0, 0.03], [0.0, 0.07]])
        givens = (0.31, 0.27, 0.4)
        fill = family_c_fill(spec, 1, givens)
        np.testing.assert_allclose(fill.givens(), givens, rtol=0, atol=1e-12)
        assert fill.tensor((1, 1, 1), (3, 3, 3)) == 0.0

    def test_fill_entry(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.0, 0.05], [0.0, 0.05], [0.0, 0.05]])
        fill = family_c_fill(spec, 1, (0.3, 0.3, 0.3))
        # object 1 wrong (G1 judged as 2), objects 2 and 3 right at 1
        expected = E12 + 0.15 + 0.15
        assert fill.tensor((1, 1, 1), (2, 1, 1)) == pytest.approx(expected, abs=1e-12)

    def test_fill_rejects_inconsistent(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.0, 0.05]] * 3)
        with pytest.raises(ValueError, match="negative"):
            family_c_fill(spec, 1, (1.0, 0.1, 0.1))

    def test_fill_needs_all_zero(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.0, 0.05], [0.1, 0.05], [0.0, 0.05]])
        with pytest.raises(ValueError):
            family_c_fill(spec, 1, (0.3, 0.3, 0.3))

    def test_fill_needs_three(self, H3):
        spec = MultiObjectSpec.from_slices(H3, [[0.0, 0.05]] * 2)
        with pytest.raises(ValueError):
            family_c_fill(spec, 1, (0.3, 0.3, 0.3))
