import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from quantgames.classical import BimatrixGame, expected_payoff
from quantgames.errors import ValidationError
from quantgames.linalg import HADAMARD, is_unitary
from quantgames.protocols import (
    COOPERATE,
    DEFECT,
    FLIP,
    NO_FLIP,
    QUANTUM,
    EwlSpec,
    EwlStrategy,
    MwSpec,
    coin_move,
    ewl_final_state,
    ewl_gate,
    ewl_invasion_fitness,
    ewl_nash_scan,
    ewl_payoff_matrix,
    ewl_payoff_surface,
    ewl_payoffs,
    ewl_probabilities,
    heads_probability,
    invasion_threshold,
    is_grid_equilibrium,
    mw_final_state,
    mw_nash_scan,
    mw_payoff_grids,
    mw_payoffs,
    pennyflip_round,
    strategy_matrix,
)

from .conftest import PRISONERS

HEADS = np.diag([1.0, 0.0]).astype(complex)
BOS_A = (2.0, 0.0, 0.0, 1.0)
BOS_B = (1.0, 0.0, 0.0, 2.0)
KET00 = np.array([1, 0, 0, 0], dtype=complex)
BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


class TestPennyFlip:
    def test_hadamard_move(self):
        np.testing.assert_allclose(coin_move(1 / np.sqrt(2), 1 / np.sqrt(2)), HADAMARD, atol=1e-15)

    @pytest.mark.parametrize("p", [0, 0.25, 0.5, 0.75, 1])
    def test_hadamard_always_wins(self, p):
        rho = pennyflip_round(HEADS, (HADAMARD, HADAMARD), p)
        assert abs(heads_probability(rho) - 1) < 1e-12
        np.testing.assert_allclose(rho, HEADS, atol=1e-12)

    def test_identity_no_flip(self):
        assert heads_probability(pennyflip_round(HEADS, (NO_FLIP, NO_FLIP), 0)) == 1

    def test_classical_half(self):
        assert heads_probability(pennyflip_round(HEADS, (NO_FLIP, NO_FLIP), 0.5)) == pytest.approx(0.5, abs=1e-12)

    def test_classical_flip_mixture(self):
        # Q flips before P: P_heads = p with Q flipping once, by direct enumeration
        for p in np.linspace(0, 1, 6):
            rho = pennyflip_round(HEADS, (FLIP, NO_FLIP), p)
            assert heads_probability(rho) == pytest.approx(p, abs=1e-12)

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ValidationError):
            pennyflip_round(HEADS, (HADAMARD, HADAMARD), p)

    def test_non_unitary(self):
        with pytest.raises(ValidationError):
            pennyflip_round(HEADS, (np.eye(2) * 2, HADAMARD), 0.5)


def oracle_gate(gamma):
    d = np.array([[0, 1], [-1, 0]], dtype=complex)
    return expm(0.5j * gamma * np.kron(d, d))


def oracle_payoffs(gamma, sa, sb, rstp=(3, 0, 5, 1)):
    u = lambda s: np.array(  # noqa: E731
        [
            [np.exp(1j * s.phi) * np.cos(s.theta / 2), np.sin(s.theta / 2)],
            [-np.sin(s.theta / 2), np.exp(-1j * s.phi) * np.cos(s.theta / 2)],
        ]
    )
    j = oracle_gate(gamma)
    psi = j.conj().T @ np.kron(u(sa), u(sb)) @ j @ KET00
    pr = np.abs(psi) ** 2
    r, s, t, p = rstp
    return r * pr[0] + s * pr[1] + t * pr[2] + p * pr[3], r * pr[0] + t * pr[1] + s * pr[2] + p * pr[3]


class TestEwl:
    def test_named_matrices(self):
        np.testing.assert_allclose(COOPERATE.matrix(), np.eye(2))
        np.testing.assert_allclose(DEFECT.matrix(), [[0, 1], [-1, 0]], atol=1e-15)
        np.testing.assert_allclose(QUANTUM.matrix(), np.diag([1j, -1j]), atol=1e-15)
        assert (COOPERATE.name, DEFECT.name, QUANTUM.name) == ("C", "D", "Q")
        assert EwlStrategy(np.pi, 1.0).name == "D"

    def test_strategy_range(self):
        with pytest.raises(ValidationError):
            EwlStrategy(4.0, 0.0)
        with pytest.raises(ValidationError):
            EwlStrategy(0.0, 2.0)
        with pytest.raises(ValidationError):
            EwlSpec(gamma=2.0)

    def test_strategy_matrix_broadcast_unitary(self, rng):
        th, ph = rng.uniform(0, np.pi, 20), rng.uniform(0, np.pi / 2, 20)
        mats = strategy_matrix(th, ph)
        assert mats.shape == (20, 2, 2)
        assert all(is_unitary(m) for m in mats)

    @pytest.mark.parametrize("gamma", [0, 0.3, np.pi / 4, np.pi / 2])
    def test_gate_against_expm(self, gamma):
        j = ewl_gate(gamma)
        np.testing.assert_allclose(j, oracle_gate(gamma), atol=1e-12)
        assert is_unitary(j)
        c, d = COOPERATE.matrix(), DEFECT.matrix()
        for op in (np.kron(d, d), np.kron(d, c), np.kron(c, d)):
            assert np.linalg.norm(j @ op - op @ j) < 1e-10

    def test_final_states(self):
        s0 = EwlSpec(gamma=0.0)
        assert ewl_probabilities(s0, COOPERATE, COOPERATE) == pytest.approx([1, 0, 0, 0], abs=1e-15)
        assert ewl_probabilities(s0, DEFECT, COOPERATE) == pytest.approx([0, 0, 1, 0], abs=1e-15)
        psi = ewl_final_state(EwlSpec(), QUANTUM, QUANTUM)
        assert abs(psi[0]) ** 2 == pytest.approx(1, abs=1e-12)

    def test_named_payoffs(self):
        for gamma in (0, 0.7, np.pi / 2):
            assert ewl_payoffs(EwlSpec(gamma=gamma), COOPERATE, COOPERATE) == pytest.approx((3, 3), abs=1e-12)
        assert ewl_payoffs(EwlSpec(gamma=0), DEFECT, DEFECT) == pytest.approx((1, 1), abs=1e-12)
        assert ewl_payoffs(EwlSpec(), QUANTUM, QUANTUM) == pytest.approx((3, 3), abs=1e-12)

    def test_classical_embedding(self):
        spec = EwlSpec(gamma=0.0)
        game = BimatrixGame.symmetric(PRISONERS)
        pure = (COOPERATE, DEFECT)
        for i, j in itertools.product(range(2), repeat=2):
            pa, pb = ewl_payoffs(spec, pure[i], pure[j])
            assert pa == pytest.approx(PRISONERS[i, j], abs=1e-12)
            assert pb == pytest.approx(PRISONERS[j, i], abs=1e-12)
        # phi = 0 strategies act as classical mixtures with P(C) = cos^2(theta/2) at any gamma
        for gamma in (0, np.pi / 2):
            for ta, tb in itertools.product(np.linspace(0, np.pi, 5), repeat=2):
                x = np.array([np.cos(ta / 2) ** 2, np.sin(ta / 2) ** 2])
                y = np.array([np.cos(tb / 2) ** 2, np.sin(tb / 2) ** 2])
                pa, pb = ewl_payoffs(EwlSpec(gamma=gamma), EwlStrategy(ta, 0), EwlStrategy(tb, 0))
                assert pa == pytest.approx(expected_payoff(game, x, y, "A"), abs=1e-12)
                assert pb == pytest.approx(expected_payoff(game, x, y, "B"), abs=1e-12)

    def test_against_oracle_and_normalization(self, rng):
        for _ in range(50):
            gamma = rng.uniform(0, np.pi / 2)
            sa = EwlStrategy(rng.uniform(0, np.pi), rng.uniform(0, np.pi / 2))
            sb = EwlStrategy(rng.uniform(0, np.pi), rng.uniform(0, np.pi / 2))
            spec = EwlSpec(gamma=gamma)
            assert ewl_probabilities(spec, sa, sb).sum() == pytest.approx(1, abs=1e-12)
            assert ewl_payoffs(spec, sa, sb) == pytest.approx(oracle_payoffs(gamma, sa, sb), abs=1e-12)
            pa, pb = ewl_payoffs(spec, sa, sb)
            assert ewl_payoffs(spec, sb, sa) == pytest.approx((pb, pa), abs=1e-12)

    def test_payoff_matrix_matches_pointwise(self):
        spec = EwlSpec(gamma=1.0)
        th, ph, pa = ewl_payoff_matrix(spec, 5, chunk=7)
        _, _, threaded = ewl_payoff_matrix(spec, 5, threads=3, chunk=7)
        np.testing.assert_array_equal(pa, threaded)
        for i, j in [(0, 0), (3, 17), (24, 5), (12, 12)]:
            sa, sb = EwlStrategy(th[i], ph[i]), EwlStrategy(th[j], ph[j])
            assert pa[i, j] == pytest.approx(ewl_payoffs(spec, sa, sb)[0], abs=1e-12)

    def test_surface(self):
        rows = ewl_payoff_surface(EwlSpec(gamma=0.0), 3)
        assert rows.shape == (9, 4)
        first = rows[0]
        assert first == pytest.approx([0, 0, 3, 3])
        last = rows[-1]
        assert last == pytest.approx([np.pi, np.pi, 1, 1])


class TestEwlScan:
    def test_classical_limit(self):
        eq = ewl_nash_scan(EwlSpec(gamma=0.0), 32)
        assert [(e.a.name, e.b.name) for e in eq] == [("D", "D")]
        assert (eq[0].payoff_a, eq[0].payoff_b) == pytest.approx((1, 1), abs=1e-9)
        assert eq[0].cells == 32 * 32

    def test_maximal_entanglement(self):
        eq = ewl_nash_scan(EwlSpec(), 32)
        names = [(e.a.name, e.b.name) for e in eq]
        assert ("Q", "Q") in names and ("D", "D") not in names
        qq = eq[names.index(("Q", "Q"))]
        assert (qq.payoff_a, qq.payoff_b) == pytest.approx((3, 3), abs=1e-9)

    def test_refinement_keeps_qq(self):
        spec = EwlSpec()
        assert is_grid_equilibrium(spec, QUANTUM, QUANTUM, 64)
        assert is_grid_equilibrium(spec, QUANTUM, QUANTUM, 128)
        assert not is_grid_equilibrium(spec, DEFECT, DEFECT, 64)
        assert is_grid_equilibrium(EwlSpec(gamma=0.0), DEFECT, DEFECT, 128)

    def test_small_grid_rejected(self):
        with pytest.raises(ValidationError):
            ewl_nash_scan(EwlSpec(), 16)


class TestInvasion:
    def test_same_strategy(self):
        w_inc, w_mut = ewl_invasion_fitness(EwlSpec(), DEFECT, DEFECT, 0.1)
        assert w_inc == w_mut

    def test_below_threshold(self):
        w_inc, w_mut = ewl_invasion_fitness(EwlSpec(), EwlStrategy(0, 0.40), DEFECT, 0.01)
        assert w_inc > w_mut

    def test_above_threshold(self):
        w_inc, w_mut = ewl_invasion_fitness(EwlSpec(), EwlStrategy(0, 0.55), DEFECT, 0.01)
        assert w_mut > w_inc

    def test_mixture_formula(self):
        spec, m = EwlSpec(), EwlStrategy(0.3, 0.9)
        eps = 0.2
        w_inc, w_mut = ewl_invasion_fitness(spec, m, DEFECT, eps)
        p = lambda s, o: oracle_payoffs(np.pi / 2, s, o)[0]  # noqa: E731
        assert w_inc == pytest.approx(0.8 * p(DEFECT, DEFECT) + 0.2 * p(DEFECT, m), abs=1e-12)
        assert w_mut == pytest.approx(0.8 * p(m, DEFECT) + 0.2 * p(m, m), abs=1e-12)

    @pytest.mark.parametrize("eps", [0, 0.5, -0.1])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ValidationError):
            ewl_invasion_fitness(EwlSpec(), DEFECT, DEFECT, eps)

    def test_threshold(self):
        phi = invasion_threshold(EwlSpec())
        assert abs(phi - np.arcsin(1 / np.sqrt(5))) < 1e-4

    def test_payoff_against_defector_closed_form(self):
        # P_A(U(0, phi), D) = 5 sin^2(phi) at maximal entanglement
        for phi in np.linspace(0, np.pi / 2, 7):
            assert ewl_payoffs(EwlSpec(), EwlStrategy(0, phi), DEFECT)[0] == pytest.approx(5 * np.sin(phi) ** 2, abs=1e-12)


def mw_oracle_payoff_a(initial, coeffs, p, q):
    """Sum over 4 tactic pairs x 4 outer-product terms |i><j| of rho_0, kept as dense 4x4 terms."""
    rho = np.zeros((4, 4), dtype=complex)
    weights = {(0, 0): p * q, (0, 1): p * (1 - q), (1, 0): (1 - p) * q, (1, 1): (1 - p) * (1 - q)}
    for (fa, fb), w in weights.items():
        mask = (fa << 1) | fb
        for i in range(4):
            for j in range(4):
                term = np.zeros((4, 4), dtype=complex)
                term[i ^ mask, j ^ mask] = initial[i] * np.conj(initial[j])
                rho += w * term
    return float(np.real(np.trace(np.diag(coeffs) @ rho)))


class TestMarinattoWeber:
    def test_final_state_examples(self):
        spec = MwSpec(KET00, BOS_A, BOS_B)
        np.testing.assert_allclose(mw_final_state(spec, 1, 1), np.outer(KET00, KET00))
        np.testing.assert_allclose(mw_final_state(spec, 0, 0), np.diag([0, 0, 0, 1]))
        np.testing.assert_allclose(mw_final_state(spec, 1, 0), np.diag([0, 1, 0, 0]))

    def test_final_state_is_density(self, rng):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        spec = MwSpec(psi / np.linalg.norm(psi), BOS_A, BOS_B)
        rho = mw_final_state(spec, 0.3, 0.8)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-15)
        assert np.trace(rho).real == pytest.approx(1)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_classical_embedding(self):
        spec = MwSpec(KET00, BOS_A, BOS_B)
        game = BimatrixGame([[2, 0], [0, 1]], [[1, 0], [0, 2]])
        for p, q in itertools.product(np.linspace(0, 1, 11), repeat=2):
            x, y = np.array([p, 1 - p]), np.array([q, 1 - q])
            pa, pb = mw_payoffs(spec, p, q)
            assert pa == pytest.approx(expected_payoff(game, x, y, "A"), abs=1e-12)
            assert pb == pytest.approx(expected_payoff(game, x, y, "B"), abs=1e-12)

    def test_constant_coefficients(self, rng):
        spec = MwSpec(BELL, (2.5,) * 4, (2.5,) * 4)
        for p, q in rng.random((10, 2)):
            assert mw_payoffs(spec, p, q) == pytest.approx((2.5, 2.5), abs=1e-12)

    def test_sixteen_term_expansion(self):
        a, b = np.sqrt(0.8), np.sqrt(0.2)
        initial = np.array([a, 0, 0, b], dtype=complex)
        spec = MwSpec(initial, BOS_A, BOS_B)
        for p, q in itertools.product([0, 0.5, 1], repeat=2):
            assert mw_payoffs(spec, p, q)[0] == pytest.approx(mw_oracle_payoff_a(initial, BOS_A, p, q), abs=1e-12)
            assert mw_payoffs(spec, p, q)[1] == pytest.approx(mw_oracle_payoff_a(initial, BOS_B, p, q), abs=1e-12)

    def test_grids_match_pointwise(self):
        spec = MwSpec(np.array([0.6, 0, 0, 0.8]), BOS_A, BOS_B)
        ps, pa, pb = mw_payoff_grids(spec, 5)
        for i, j in itertools.product(range(5), repeat=2):
            assert (pa[i, j], pb[i, j]) == pytest.approx(mw_payoffs(spec, ps[i], ps[j]), abs=1e-12)

    def test_bad_probability(self):
        with pytest.raises(ValidationError):
            mw_final_state(MwSpec(KET00, BOS_A, BOS_B), 1.2, 0)

    def test_bad_spec(self):
        with pytest.raises(ValidationError):
            MwSpec([1, 1, 0, 0], BOS_A, BOS_B)
        with pytest.raises(ValidationError):
            MwSpec(KET00, (1, 2, 3), BOS_B)


class TestMwScan:
    def test_product_state(self):
        eq = mw_nash_scan(MwSpec(KET00, BOS_A, BOS_B))
        assert sorted((e.p, e.q) for e in eq) == [(0.0, 0.0), (1.0, 1.0)]
        by_cell = {(e.p, e.q): (e.payoff_a, e.payoff_b) for e in eq}
        assert by_cell[(1.0, 1.0)] == pytest.approx((2, 1))
        assert by_cell[(0.0, 0.0)] == pytest.approx((1, 2))

    def test_entangled_state(self):
        eq = mw_nash_scan(MwSpec(BELL, BOS_A, BOS_B))
        assert eq
        for e in eq:
            assert abs(e.payoff_a - e.payoff_b) < 1e-9
        assert {(e.p, e.q) for e in eq} == {(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)}

    def test_constant_every_cell(self):
        eq = mw_nash_scan(MwSpec(BELL, (1,) * 4, (1,) * 4))
        assert len(eq) == 101 * 101

    def test_small_grid_rejected(self):
        with pytest.raises(ValidationError):
            mw_nash_scan(MwSpec(KET00, BOS_A, BOS_B), 50)
