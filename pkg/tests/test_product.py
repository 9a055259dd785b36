import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chernoff_lab.errors import (
    DimMismatch,
    HypothesisViolated,
    InvalidSchedule,
    NegativeTime,
    NotContraction,
    NotDivisible,
    NotProjector,
    OddN,
)
from chernoff_lab.linalg import (
    expm,
    random_contraction,
    random_contraction_generator,
    random_unit_vector,
    random_unitary,
    spectral_norm,
)
from chernoff_lab.product import (
    Schedule,
    chernoff_bound_check,
    cyclic_product,
    decoupling_product,
    iterated_product,
    lemma4_bound_check,
    ordered_affine_product,
    schedule_product,
    telescoping_diff_check,
    two_unitary_product,
    zeno_product,
)
from chernoff_lab.semigroup import BlockMixFamily, ExpFamily, TwoUnitaryFamily
from chernoff_lab.superop import (
    BlockSignFlip,
    ProjectionCompression,
    UnitaryConjugation,
    dft_matrix,
    exact_pinching_projector,
    identity_map,
)

from oracles import blockdiag, taylor_expm

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def _conj_power(u, v, k):
    uk = np.linalg.matrix_power(u, k)
    return uk @ v @ uk.conj().T


def _brute_iterated(u, v, n):
    out = np.eye(v.shape[0], dtype=complex)
    for k in range(1, n + 1):
        out = out @ _conj_power(u, v, k)
    return out


class TestIteratedProduct:
    def test_single_factor(self):
        u = random_unitary(3, 0)
        fam = ExpFamily(random_contraction_generator(3, 1))
        out = iterated_product(UnitaryConjugation(u), fam, 0.8, 1)
        assert spectral_norm(out - u @ fam.evaluate(0.8) @ u.conj().T) <= 1e-12

    def test_identity_map_is_power(self):
        fam = ExpFamily(random_contraction_generator(3, 2))
        out = iterated_product(identity_map(3), fam, 1.0, 10)
        ref = np.linalg.matrix_power(fam.evaluate(0.1), 10)
        assert spectral_norm(out - ref) <= 1e-12
        assert spectral_norm(out - expm(fam.x, 1.0)) <= 1e-12

    def test_ordering(self):
        u = random_unitary(3, 3)
        fam = ExpFamily(random_contraction_generator(3, 4))
        v = fam.evaluate(0.5)
        out = iterated_product(UnitaryConjugation(u), fam, 1.0, 2)
        first, second = _conj_power(u, v, 1), _conj_power(u, v, 2)
        assert spectral_norm(out - first @ second) <= 1e-12
        assert spectral_norm(second @ first - first @ second) > 1e-3  # ordering matters here

    def test_matches_brute_force(self):
        u = random_unitary(4, 5)
        fam = ExpFamily(random_contraction_generator(4, 6))
        out = iterated_product(UnitaryConjugation(u), fam, 1.3, 37)
        assert spectral_norm(out - _brute_iterated(u, fam.evaluate(1.3 / 37), 37)) <= 1e-11

    def test_block_sign_flip_example(self):
        x1 = random_contraction_generator(2, 7)
        x2 = random_contraction_generator(2, 8)
        fam = BlockMixFamily(x1, x2)
        avg = (x1 + x2) / 2
        limit = blockdiag(taylor_expm(avg, 1.0), taylor_expm(avg, 1.0))
        errs = [spectral_norm(iterated_product(BlockSignFlip(4), fam, 1.0, n) - limit) for n in (16, 64, 256, 1024)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= 1e-3

    def test_bad_arguments(self):
        fam = ExpFamily(random_contraction_generator(2, 0))
        with pytest.raises(NegativeTime):
            iterated_product(identity_map(2), fam, 0.0, 4)
        with pytest.raises(DimMismatch):
            iterated_product(identity_map(3), fam, 1.0, 4)

    def test_non_unital_warns(self):
        p = np.diag([1.0, 0.0])
        fam = ExpFamily(random_contraction_generator(2, 0))
        with pytest.warns(UserWarning):
            iterated_product(ProjectionCompression(p), fam, 1.0, 4)


class TestScheduleProduct:
    def test_uniform_specialises(self):
        u = random_unitary(3, 1)
        fam = ExpFamily(random_contraction_generator(3, 2))
        pi = UnitaryConjugation(u)
        [(k, s, out)] = schedule_product(pi, fam, Schedule.uniform(16, 1.0))
        assert (k, s) == (16, 1.0 / 16)
        assert spectral_norm(out - iterated_product(pi, fam, 1.0, 16)) <= 1e-13

    def test_sequenced_converges(self):
        t = 1.0
        pairs = [(2**n, t / 2**n + t / 4**n) for n in range(2, 11)]
        sched = Schedule.sequenced(pairs, t)
        u = random_unitary(3, 3)
        x = random_contraction_generator(3, 4)
        pi = UnitaryConjugation(u)
        limit = expm(exact_pinching_projector(u)(x), t)
        errs = [spectral_norm(out - limit) for _, _, out in schedule_product(pi, ExpFamily(x), sched)]
        assert errs[-1] < errs[0]
        assert errs[-1] <= 5e-3

    def test_empty(self):
        sched = Schedule.sequenced([], 1.0)
        assert schedule_product(identity_map(2), ExpFamily(np.zeros((2, 2))), sched) == []

    @pytest.mark.parametrize(
        "pairs",
        [
            [(4, 0.25), (4, 0.25)],
            [(2, 0.5), (4, 0.3)],
            [(2, -0.5)],
            [(4, 0.1)],
            [(0, 1.0)],
        ],
    )
    def test_invalid(self, pairs):
        with pytest.raises(InvalidSchedule):
            Schedule.sequenced(pairs, 1.0)

    def test_uniform_invalid(self):
        with pytest.raises(InvalidSchedule):
            Schedule.uniform(0, 1.0)


class TestDecoupling:
    def test_trivial_unitary(self):
        x = random_contraction_generator(3, 0)
        assert spectral_norm(decoupling_product(np.eye(3), x, 1.0, 8) - taylor_expm(x, 1.0)) <= 1e-12

    def test_single_step(self):
        u = random_unitary(3, 1)
        x = random_contraction_generator(3, 2)
        ref = u @ taylor_expm(x, 0.5) @ u.conj().T
        assert spectral_norm(decoupling_product(u, x, 0.5, 1) - ref) <= 1e-12

    def test_equals_iterated_product(self):
        u = random_unitary(3, 3)
        x = random_contraction_generator(3, 4)
        a = decoupling_product(u, x, 1.0, 50)
        b = iterated_product(UnitaryConjugation(u), ExpFamily(x), 1.0, 50)
        assert spectral_norm(a - b) <= 1e-11

    def test_converges_to_pinched_exponential(self):
        u = random_unitary(3, 5)
        x = random_contraction_generator(3, 6)
        limit = expm(exact_pinching_projector(u)(x), 1.0)
        errs = [spectral_norm(decoupling_product(u, x, 1.0, n) - limit) for n in (64, 4096)]
        assert errs[1] < errs[0]
        assert errs[1] <= 1e-2

    def test_matches_cyclic_for_periodic_unitary(self):
        f = dft_matrix(4)
        x = random_contraction_generator(4, 7)
        a = decoupling_product(f, x, 1.0, 32)
        b = cyclic_product([f] * 4, x, 1.0, 32)
        assert spectral_norm(a - b) <= 1e-11

    def test_complex_time(self):
        u = random_unitary(2, 8)
        x = random_contraction_generator(2, 9)
        out = decoupling_product(u, x, 1.0 + 0.5j, 16)
        assert np.all(np.isfinite(out))


class TestCyclic:
    def test_single_unitary(self):
        u = random_unitary(3, 0)
        x = random_contraction_generator(3, 1)
        ref = np.linalg.matrix_power(u @ expm(x, 0.1), 10)
        assert spectral_norm(cyclic_product([u], x, 1.0, 10) - ref) <= 1e-12

    def test_inverse_pair_matches_two_unitary(self):
        u1 = random_unitary(3, 2)
        x = random_contraction_generator(3, 3)
        raw, corrected = two_unitary_product(u1, u1.conj().T, x, 1.0, 20)
        cyc = cyclic_product([u1, u1.conj().T], x, 1.0, 20)
        assert spectral_norm(cyc - raw) <= 1e-13
        assert spectral_norm(corrected - raw) <= 1e-12

    def test_dft_cycle_limit(self):
        f = dft_matrix(3)
        us = [f, f, f, np.linalg.matrix_power(f, 3).conj().T]
        x = random_contraction_generator(3, 4)
        ws, w = [], np.eye(3)
        for u in us:
            w = w @ u
            ws.append(w)
        mean = sum(wj @ x @ wj.conj().T for wj in ws) / len(ws)
        limit = taylor_expm(mean, 1.0)
        errs = [spectral_norm(cyclic_product(us, x, 1.0, n) - limit) for n in (64, 1024)]
        assert errs[1] < errs[0]
        assert errs[1] <= 1e-2

    def test_not_divisible(self):
        with pytest.raises(NotDivisible):
            cyclic_product([np.eye(2)] * 3, np.zeros((2, 2)), 1.0, 10)


class TestTwoUnitary:
    def test_trivial(self):
        x = random_contraction_generator(3, 0)
        raw, corrected = two_unitary_product(np.eye(3), np.eye(3), x, 1.0, 8)
        assert spectral_norm(raw - taylor_expm(x, 1.0)) <= 1e-12
        assert spectral_norm(corrected - raw) <= 1e-12

    def test_corrected_is_iterated_product(self):
        u1, u2 = random_unitary(3, 1), random_unitary(3, 2)
        x = random_contraction_generator(3, 3)
        n, t = 12, 0.9
        _, corrected = two_unitary_product(u1, u2, x, t, n)
        u = u1 @ u2
        v = TwoUnitaryFamily(u1, u2, x).evaluate(2 * t / n)
        ref = np.eye(3, dtype=complex)
        for k in range(n // 2):
            ref = ref @ _conj_power(u, v, k)
        assert spectral_norm(corrected - ref) <= 1e-12

    def test_converges(self):
        u1, u2 = random_unitary(3, 4), random_unitary(3, 5)
        x = random_contraction_generator(3, 6)
        u = u1 @ u2
        gen = 0.5 * (u1 @ x @ u1.conj().T + u @ x @ u.conj().T)
        limit = expm(exact_pinching_projector(u)(gen), 1.0)
        errs = [spectral_norm(two_unitary_product(u1, u2, x, 1.0, n)[1] - limit) for n in (64, 4096)]
        assert errs[1] < errs[0]
        assert errs[1] <= 1e-2

    def test_odd(self):
        with pytest.raises(OddN):
            two_unitary_product(np.eye(2), np.eye(2), np.zeros((2, 2)), 1.0, 7)


class TestZeno:
    def test_identity_projector(self):
        x = random_contraction_generator(3, 0)
        assert spectral_norm(zeno_product(np.eye(3), x, 1.0, 5) - taylor_expm(x, 1.0)) <= 1e-12

    def test_rank_one_scalar_limit(self):
        v = random_unit_vector(3, 1)[:, None]
        p = v @ v.conj().T
        x = random_contraction_generator(3, 2)
        lam = (v.conj().T @ x @ v)[0, 0]
        limit = np.exp(lam) * p
        errs = [spectral_norm(zeno_product(p, x, 1.0, n) - limit) for n in (16, 256, 4096)]
        assert errs[0] > errs[1] > errs[2]

    def test_rank_two(self):
        w = random_unitary(4, 3)[:, :2]
        p = w @ w.conj().T
        x = random_contraction_generator(4, 4)
        limit = expm(p @ x @ p, 1.0) @ p
        errs = [spectral_norm(zeno_product(p, x, 1.0, n) - limit) for n in (16, 256, 4096)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1e-3

    def test_not_projector(self):
        with pytest.raises(NotProjector):
            zeno_product(np.array([[1.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2)), 1.0, 4)


class TestChernoffBound:
    def test_identity(self):
        chk = chernoff_bound_check(np.eye(3), np.ones(3), 10)
        assert chk.lhs <= 1e-14 and chk.rhs == 0.0
        assert chk.holds()

    def test_n_zero(self):
        s = random_contraction(3, 0)
        chk = chernoff_bound_check(s, random_unit_vector(3, 1), 0)
        assert chk.lhs <= 1e-15 and chk.rhs == 0.0

    def test_random_instances(self):
        for seed in range(50):
            s = random_contraction(4, seed)
            v = random_unit_vector(4, 100 + seed)
            for n in (1, 3, 10, 40):
                assert chernoff_bound_check(s, v, n).holds()

    def test_not_contraction(self):
        with pytest.raises(NotContraction):
            chernoff_bound_check(2 * np.eye(2), np.ones(2), 3)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            chernoff_bound_check(np.eye(2), np.ones(3), 3)


class TestOrderedProductBound:
    def test_fixed_point_has_zero_error(self):
        u = random_unitary(3, 0)
        x = u - np.eye(3)  # commutes with u
        chk = lemma4_bound_check(UnitaryConjugation(u), x, 1.0, 8)
        assert chk.y_norm <= 1e-10
        assert chk.lhs <= 1e-10
        assert chk.holds()

    def test_affine_product_oracle(self):
        u = random_unitary(3, 1)
        x = random_contraction(3, 2) - np.eye(3)
        s = 0.25
        ref = np.eye(3, dtype=complex)
        for k in range(1, 5):
            ref = ref @ (np.eye(3) + s * _conj_power(u, x, k))
        assert spectral_norm(ordered_affine_product(UnitaryConjugation(u), x, s, 4) - ref) <= 1e-13

    @pytest.mark.parametrize("n", [4, 16, 64])
    def test_block_sign_flip(self, n):
        x = random_contraction(4, 3, norm=1.0) - np.eye(4)
        chk = lemma4_bound_check(BlockSignFlip(4), x, 1.0, n)
        assert chk.holds()
        assert chk.lhs <= chk.bound

    def test_rate(self):
        x = random_contraction(4, 4, norm=1.0) - np.eye(4)
        scaled = [n * lemma4_bound_check(BlockSignFlip(4), x, 1.0, n).lhs for n in (2**k for k in range(2, 13))]
        assert max(scaled) <= 2 * max(scaled[:3])

    def test_random_instances(self):
        for seed in range(20):
            pi = UnitaryConjugation(random_unitary(3, seed))
            x = random_contraction(3, 50 + seed, norm=1.0) - np.eye(3)
            for n in (4, 32):
                assert lemma4_bound_check(pi, x, 1.0, n).holds()

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolated):
            lemma4_bound_check(identity_map(2), np.eye(2), 1.0, 4)

    def test_non_unital_rejected(self):
        with pytest.raises(HypothesisViolated):
            lemma4_bound_check(ProjectionCompression(np.diag([1.0, 0.0])), -np.eye(2), 1.0, 4)


class TestTelescoping:
    def test_equal_inputs(self):
        x = random_contraction(3, 0) - np.eye(3)
        chk = telescoping_diff_check(UnitaryConjugation(random_unitary(3, 1)), x, x, 1.0, 10)
        assert chk.lhs == 0.0 and chk.rhs == 0.0

    def test_small_perturbation(self):
        pi = UnitaryConjugation(random_unitary(3, 2))
        w = random_contraction(3, 3, norm=0.9)
        x1 = w - np.eye(3)
        x2 = (w + 1e-3 * random_contraction(3, 4, norm=0.1)) - np.eye(3)
        chk = telescoping_diff_check(pi, x1, x2, 1.0, 16)
        assert chk.holds()
        assert chk.rhs <= 1e-3

    def test_random_instances(self):
        for seed in range(20):
            pi = UnitaryConjugation(random_unitary(4, seed))
            x1 = random_contraction(4, 100 + seed, norm=1.0) - np.eye(4)
            x2 = random_contraction(4, 200 + seed, norm=1.0) - np.eye(4)
            for n in (1, 8, 64):
                assert telescoping_diff_check(pi, x1, x2, 1.0, n).holds()

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolated):
            telescoping_diff_check(identity_map(2), np.eye(2), np.zeros((2, 2)), 1.0, 4)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 40))
def test_products_are_contractions(seed, n):
    u1, u2 = random_unitary(3, seed), random_unitary(3, seed + 1)
    x = random_contraction_generator(3, seed + 2)
    assert spectral_norm(decoupling_product(u1, x, 1.0, n)) <= 1 + 1e-10
    assert spectral_norm(iterated_product(UnitaryConjugation(u1), ExpFamily(x), 1.0, n)) <= 1 + 1e-10
    _, corrected = two_unitary_product(u1, u2, x, 1.0, 2 * n)
    assert spectral_norm(corrected) <= 1 + 1e-10


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 64))
def test_chernoff_bound_property(seed, n):
    s = random_contraction(3, seed)
    v = random_unit_vector(3, seed + 1)
    assert chernoff_bound_check(s, v, n).holds()


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([1, 2, 8, 32]))
def test_ordered_product_bound_property(seed, n):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        x = random_contraction(4, seed, norm=1.0) - np.eye(4)
        pi = BlockSignFlip(4) if seed % 2 else UnitaryConjugation(random_unitary(4, seed + 1))
        assert lemma4_bound_check(pi, x, 1.0, n).holds()
