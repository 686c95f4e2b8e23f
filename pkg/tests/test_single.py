import math

import numpy as np
import pytest

from laotest import (
    DecisionRegions,
    HypothesisSet,
    ReliabilityMatrix,
    build_matrix,
    check_conditions,
    classify,
    stein_row,
)
from laotest.probability import kl_divergence, type_counts
from laotest.single import ConditionsViolated, GivenExponents, diagonal_bounds

# grid oracle at step 1e-6 and high-precision divergences
E21_AT_005 = 1.572199733555608
D12 = 2.0177199665240066
D13 = 0.08239651395433096
D31 = 0.10307454023024414
MATRIX_005_005 = np.array([
    [0.05, 1.712050, 0.05],
    [1.572200, 0.05, 0.05],
    [0.007770, 0.868930, 0.007770],
])


def random_feasible(seed, k=2, M=3):
    """Random hypothesis set and a prescribed diagonal strictly inside the bounds."""
    rng = np.random.default_rng(seed)
    while True:
        dists = rng.dirichlet(np.ones(k), size=M)
        if dists.min() > 0.03:
            break
    H = HypothesisSet(tuple(map(tuple, dists)))
    diag = []
    for m in range(1, M):
        padded = diag + [0.0] * (M - 1 - len(diag))
        div_b, _, proj_b, _ = diagonal_bounds(H, padded)[m - 1]
        diag.append(float(rng.uniform(0.05, 0.95)) * min(div_b, proj_b))
    return H, diag


def random_violating(seed):
    rng = np.random.default_rng(seed)
    while True:
        d = rng.dirichlet([1, 1], size=3)
        if d.min() < 0.02:
            continue
        H = HypothesisSet(tuple(map(tuple, d)))
        given = list(rng.uniform(0.001, 1.5, size=2))
        if not check_conditions(H, given).ok:
            return H, given


class TestHypothesisSet:
    def test_needs_two(self):
        with pytest.raises(ValueError):
            HypothesisSet(((0.5, 0.5),))

    def test_distinct(self):
        with pytest.raises(ValueError):
            HypothesisSet(((0.1, 0.9), (0.1, 0.9)))

    def test_common_alphabet(self):
        with pytest.raises(ValueError):
            HypothesisSet(((0.1, 0.9), (0.2, 0.3, 0.5)))

    def test_one_based(self, H3):
        assert H3[1].tolist() == [0.1, 0.9]
        with pytest.raises(IndexError):
            H3[0]
        with pytest.raises(IndexError):
            H3[4]


class TestConditions:
    def test_feasible(self, H3):
        rep = check_conditions(H3, [0.05, 0.05])
        assert rep.ok and not rep.violations

    def test_large_first_exponent(self, H3):
        rep = check_conditions(H3, [2.3, 0.05])
        v = [x for x in rep.violations if x.hypothesis == 1]
        assert len(v) == 1 and v[0].kind == "divergence" and v[0].witness == 3
        assert v[0].bound == pytest.approx(D31, abs=1e-12)

    def test_all_zero(self, H3):
        rep = check_conditions(H3, [0.0, 0.0])
        assert {(v.hypothesis, v.kind) for v in rep.violations} >= {(1, "positive"), (2, "positive")}

    def test_equality_is_a_violation(self, H3):
        bound = H3.divergence(3, 1)
        assert not check_conditions(H3, [bound, 0.05]).ok
        assert check_conditions(H3, [math.nextafter(bound, 0), 0.05]).ok

    def test_later_indices_still_checked(self, H3):
        rep = check_conditions(H3, [0.5, 5.0])
        assert {v.hypothesis for v in rep.violations} == {1, 2}

    def test_zero_allowed_on_request(self, H3):
        assert not check_conditions(H3, [0.0, 0.05]).ok
        assert check_conditions(H3, [0.0, 0.05], allow_zero=True).ok

    def test_wrong_length(self, H3):
        with pytest.raises(ValueError):
            check_conditions(H3, [0.05])


class TestBuildMatrix:
    def test_two_hypotheses(self, H2):
        E = build_matrix(H2, [0.05])
        assert E(1, 1) == 0.05
        assert E(2, 1) == pytest.approx(E21_AT_005, abs=1e-9)
        assert E(1, 2) == pytest.approx(0.05, abs=1e-9)
        assert E(2, 2) == E(2, 1)

    def test_three_hypotheses_frozen(self, H3):
        E = build_matrix(H3, [0.05, 0.05])
        np.testing.assert_allclose(E.entries, MATRIX_005_005, atol=5e-6)
        assert not E.has_zero()

    def test_violation_raises(self, H3):
        with pytest.raises(ConditionsViolated) as exc:
            build_matrix(H3, [0.2, 0.05])
        assert not exc.value.report.ok

    def test_force_gives_zero(self, H3):
        E = build_matrix(H3, [0.2, 0.05], force=True)
        assert E(3, 1) == 0.0 and E.forced

    @pytest.mark.parametrize("seed", range(20))
    def test_diagonal_in_last_column(self, seed):
        H, diag = random_feasible(seed)
        E = build_matrix(H, diag)
        M = H.M
        for m in range(1, M):
            assert abs(E(m, m) - E(m, M)) <= 1e-9
            for l in range(1, M):
                if l != m:
                    assert E(m, l) > E(m, m)
        assert np.all(E.entries > 0)

    @pytest.mark.parametrize("seed", range(10))
    def test_diagonal_in_last_column_ternary(self, seed):
        H, diag = random_feasible(seed, k=3)
        E = build_matrix(H, diag)
        for m in range(1, H.M):
            assert E(m, m) == pytest.approx(E(m, H.M), abs=1e-7)

    @pytest.mark.parametrize("seed", range(40))
    def test_violation_corpus(self, seed):
        # a violated prescription is never realized with every entry positive
        H, given = random_violating(seed)
        E = build_matrix(H, given, force=True)
        shortfall = any(E(m, m) < given[m - 1] - 1e-9 for m in range(1, H.M))
        assert E.has_zero() or shortfall
        rep = check_conditions(H, given)
        if any(v.kind == "divergence" for v in rep.violations):
            assert E.has_zero()

    @pytest.mark.parametrize("seed", range(8))
    def test_monotone_response(self, seed):
        H, diag = random_feasible(seed)
        for l in range(1, H.M):
            grid = np.linspace(0.2, 1.0, 5) * diag[l - 1]
            cols = []
            for v in grid:
                d = list(diag)
                d[l - 1] = v
                E = build_matrix(H, d, force=True)
                cols.append([E(m, l) for m in range(1, H.M + 1) if m != l])
            assert np.all(np.diff(np.array(cols), axis=0) <= 1e-10)

    def test_diagonal_rule_checked(self):
        with pytest.raises(ValueError):
            ReliabilityMatrix(np.array([[0.5, 0.1], [0.2, 0.2]]))

    def test_to_dict_infinite(self):
        d = ReliabilityMatrix(np.array([[1.0, 1.0], [math.inf, math.inf]])).to_dict()
        assert d["entries"][1] == ["inf", "inf"]


class TestStein:
    def test_row_values(self, H3):
        np.testing.assert_allclose(stein_row(H3, 1), [D12, D13], atol=1e-12)

    def test_zero_diagonal_matches_row(self, H3):
        E = build_matrix(H3, [0.0, 0.05])
        np.testing.assert_allclose([E(2, 1), E(3, 1)], stein_row(H3, 1), atol=1e-9)
        assert E(1, 1) == 0.0
        # accepting 1 needs the type to equal G1 exactly
        assert E(1, 3) == 0.0

    def test_symmetric_pair(self):
        H = HypothesisSet(((0.3, 0.7), (0.7, 0.3)))
        a, = stein_row(H, 1)
        assert a == pytest.approx(H.divergence(2, 1), abs=1e-15)

    def test_index_range(self, H3):
        with pytest.raises(IndexError):
            stein_row(H3, 3)


class TestClassify:
    def test_majority_symbol(self, H3):
        regions = DecisionRegions.from_given(H3, [0.2, 0.05])
        assert classify(regions, [1] * 200) == 1

    def test_outside_goes_to_last(self, H3):
        regions = DecisionRegions.from_given(H3, [0.05, 0.05])
        assert classify(regions, [0, 1] * 50) == 3

    def test_first_match_on_overlap(self):
        H = HypothesisSet(((0.4, 0.6), (0.5, 0.5), (0.9, 0.1)))
        regions = DecisionRegions.from_given(H, [0.5, 0.5])
        x = [0] * 45 + [1] * 55
        q = np.array([0.45, 0.55])
        assert kl_divergence(q, H[1]) <= 0.5 and kl_divergence(q, H[2]) <= 0.5
        assert classify(regions, x) == 1

    @pytest.mark.parametrize("N, k", [(30, 2), (12, 3), (8, 4)])
    def test_total_on_every_type(self, N, k):
        rng = np.random.default_rng(N)
        H = HypothesisSet(tuple(map(tuple, rng.dirichlet(np.ones(k), size=4))))
        regions = DecisionRegions.from_given(H, rng.uniform(0.01, 0.4, size=3))
        labels = regions.classify_types(type_counts(N, k) / N)
        assert labels.shape == (len(type_counts(N, k)),)
        assert set(labels.tolist()) <= {1, 2, 3, 4}

    def test_radii_equal_given(self, H3):
        assert DecisionRegions.from_given(H3, GivenExponents((0.05, 0.07))).radii == (0.05, 0.07)
