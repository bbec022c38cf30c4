import itertools
import math

import numpy as np
import pytest

from scotsim import adversary, bounds, quantum
from scotsim.adversary import (
    Strategy,
    cheat_probability_exact,
    cheat_probability_gamma,
    compose_shuffles,
    honest_single_branch_strategy,
    intercept_strategy,
    omega_weight,
    random_branching_strategy,
    random_measurement,
    random_strategy,
    seesaw_optimize,
    strategy_hash,
    verify_sandwich_norm,
    verify_procedure_equivalence,
)
from scotsim.dqacm import DqacmConfig, enumerate_permutations
from scotsim.errors import CapacityError
from scotsim.quantum import bb84_family, equal_spaced_family, planar_basis_family

BOUND_2_1 = 0.853553390593273762200422181052


class TestShuffleAlgebra:
    def test_composition(self):
        s = ((2, 0, 1),)
        v = ((1, 2, 0),)
        assert compose_shuffles(s, v) == ((0, 1, 2),)

    def test_identity_is_neutral(self):
        s = ((1, 0), (0, 1))
        ident = ((0, 1), (0, 1))
        assert compose_shuffles(s, ident) == s

    def test_round_count_must_match(self):
        with pytest.raises(ValueError):
            compose_shuffles(((0, 1),), ((0, 1), (1, 0)))

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            compose_shuffles(((0, 1),), ((0, 0),))

    @pytest.mark.parametrize("m,n", [(2, 1), (2, 2), (3, 1), (3, 2)])
    def test_distinct_v_give_distinct_composites(self, m, n, rng):
        perms = enumerate_permutations(m)
        for _ in range(20):
            s = tuple(tuple(rng.permutation(m).tolist()) for _ in range(n))
            seen = {compose_shuffles(s, v) for v in itertools.product(perms, repeat=n)}
            assert len(seen) == len(perms) ** n


class TestOmegaWeight:
    def test_swap_aliases_every_round(self):
        probe = ((0, 1), (1, 0))
        assert omega_weight(((1, 0), (1, 0)), 0, 1, probe) == 2
        assert omega_weight(((0, 1), (0, 1)), 0, 1, probe) == 0
        assert omega_weight(((1, 0), (0, 1)), 0, 1, probe) == 1

    def test_probe_independence(self):
        v = ((1, 2, 0), (2, 0, 1), (0, 1, 2))
        probes = [
            ((0, 1, 2),) * 3,
            ((2, 1, 0),) * 3,
            ((1, 2, 0), (0, 2, 1), (2, 0, 1)),
        ]
        weights = {omega_weight(v, 0, 2, p) for p in probes}
        assert len(weights) == 1

    def test_weight_distribution_matches_counting(self):
        perms = enumerate_permutations(3)
        probe = (tuple(range(3)),) * 2
        tally: dict[int, int] = {}
        for v in itertools.product(perms, repeat=2):
            w = omega_weight(v, 0, 1, probe)
            tally[w] = tally.get(w, 0) + 1
        assert tally == {w: bounds.count_omega(3, 2, w) for w in (0, 1, 2)}

    def test_equal_targets_rejected(self):
        with pytest.raises(ValueError):
            omega_weight(((0, 1),), 1, 1, ((0, 1),))


class TestClosedFormStrategies:
    @pytest.mark.parametrize(
        "m,n,expect", [(2, 1, 0.5), (2, 2, 0.25), (3, 1, 0.5)]
    )
    def test_honest_single_branch(self, m, n, expect):
        cfg = DqacmConfig(m=m, n=n, family=equal_spaced_family(m))
        strat = honest_single_branch_strategy(cfg, (0, 1))
        assert cheat_probability_exact(cfg, strat) == pytest.approx(expect, abs=1e-12)

    def test_honest_single_branch_gamma_ball(self, bb84):
        # a radius-1 ball around the all-zero guess covers 3 of 4 rows
        cfg = DqacmConfig(m=2, n=2, family=bb84)
        strat = honest_single_branch_strategy(cfg, (0, 1))
        assert cheat_probability_gamma(cfg, strat, 0.5) == pytest.approx(
            0.75, abs=1e-12
        )

    @pytest.mark.parametrize("theta,n", [(math.pi / 2, 1), (math.pi / 3, 1), (math.pi / 3, 2)])
    def test_intercept_matches_angle_formula(self, theta, n):
        fam = planar_basis_family(2, (theta,))
        cfg = DqacmConfig(m=2, n=n, family=fam)
        strat = intercept_strategy(cfg, (0, 1))
        expect = math.cos(theta / 2.0) ** (2 * n)
        assert cheat_probability_exact(cfg, strat) == pytest.approx(expect, abs=1e-9)

    def test_intercept_m3(self, equal3):
        cfg = DqacmConfig(m=3, n=1, family=equal3)
        strat = intercept_strategy(cfg, (0, 2))
        expect = math.cos(math.pi / 3.0) ** 2
        assert cheat_probability_exact(cfg, strat) == pytest.approx(expect, abs=1e-9)

    def test_closed_forms_respect_bound(self, bb84):
        cfg = DqacmConfig(m=2, n=2, family=bb84)
        bound = bounds.epsilon_bob(2, 0.5, 2)
        for strat in (
            honest_single_branch_strategy(cfg, (0, 1)),
            intercept_strategy(cfg, (0, 1)),
        ):
            assert cheat_probability_exact(cfg, strat) <= bound + 1e-9


class TestRandomStrategies:
    def test_deterministic_per_seed(self, cfg21):
        a = random_strategy(cfg21, (0, 1), rng=7)
        b = random_strategy(cfg21, (0, 1), rng=7)
        c = random_strategy(cfg21, (0, 1), rng=8)
        assert strategy_hash(a) == strategy_hash(b)
        assert strategy_hash(a) != strategy_hash(c)

    def test_evaluations_stay_sound(self, cfg21):
        bound = bounds.epsilon_bob(2, 0.5, 1)
        for seed in range(30):
            strat = random_strategy(cfg21, (0, 1), rng=seed)
            p = cheat_probability_exact(cfg21, strat)
            assert 0.0 <= p <= bound + 1e-9

    def test_gamma_never_below_exact(self, cfg21, cfg32):
        for cfg, gamma in ((cfg21, 0.5), (cfg32, 0.5), (cfg32, 0.25)):
            for seed in range(5):
                strat = random_strategy(cfg, (0, 1), rng=seed)
                p = cheat_probability_exact(cfg, strat)
                pg = cheat_probability_gamma(cfg, strat, gamma)
                assert pg >= p - 1e-12

    def test_zero_radius_ball_equals_exact(self, cfg21):
        # floor(n * gamma) = 0 keeps only the exact answer in the ball
        strat = random_strategy(cfg21, (0, 1), rng=3)
        p = cheat_probability_exact(cfg21, strat)
        assert cheat_probability_gamma(cfg21, strat, 0.49) == pytest.approx(
            p, abs=1e-12
        )

    def test_targets_recorded(self, cfg32):
        strat = random_strategy(cfg32, (2, 0), rng=0)
        assert strat.targets == (2, 0)


class TestStrategyValidation:
    def test_bad_state_norm(self, cfg21):
        good = random_strategy(cfg21, (0, 1), rng=0)
        with pytest.raises(ValueError):
            Strategy(
                targets=good.targets,
                ancilla_dims=good.ancilla_dims,
                ancilla_state=np.array([2.0, 0.0]),
                unitary=good.unitary,
                split=good.split,
                measurements=good.measurements,
                qudit_count=good.qudit_count,
            )

    def test_non_unitary_rejected(self, cfg21):
        good = random_strategy(cfg21, (0, 1), rng=0)
        with pytest.raises(ValueError):
            Strategy(
                targets=good.targets,
                ancilla_dims=good.ancilla_dims,
                ancilla_state=good.ancilla_state,
                unitary=np.ones_like(good.unitary),
                split=good.split,
                measurements=good.measurements,
                qudit_count=good.qudit_count,
            )

    def test_split_must_partition(self, cfg21):
        good = random_strategy(cfg21, (0, 1), rng=0)
        with pytest.raises(ValueError):
            Strategy(
                targets=good.targets,
                ancilla_dims=good.ancilla_dims,
                ancilla_state=good.ancilla_state,
                unitary=good.unitary,
                split=(good.split[0], ()),
                measurements=good.measurements,
                qudit_count=good.qudit_count,
            )

    def test_capacity_cap(self, cfg21):
        with pytest.raises(CapacityError):
            random_strategy(cfg21, (0, 1), ancilla_dim=2048, rng=0)

    def test_round_cap(self, bb84):
        cfg = DqacmConfig(m=2, n=4, family=bb84)
        with pytest.raises(CapacityError):
            honest_single_branch_strategy(cfg, (0, 1))

    def test_basis_count_cap(self):
        cfg = DqacmConfig(m=4, n=1, family=equal_spaced_family(4))
        with pytest.raises(CapacityError):
            honest_single_branch_strategy(cfg, (0, 1))


class TestSeesaw:
    def test_reaches_known_optimum(self, cfg21):
        best = 0.0
        for seed in range(4):
            res = seesaw_optimize(cfg21, (0, 1), iterations=60, seed=seed)
            assert res.trace == tuple(sorted(res.trace))
            best = max(best, res.p_exact)
        assert best == pytest.approx(BOUND_2_1, abs=1e-6)

    def test_result_strategy_is_consistent(self, cfg21):
        res = seesaw_optimize(cfg21, (0, 1), iterations=40, seed=1)
        again = cheat_probability_exact(cfg21, res.strategy)
        assert again == pytest.approx(res.p_exact, abs=1e-12)

    def test_deterministic_per_seed(self, cfg21):
        a = seesaw_optimize(cfg21, (0, 1), iterations=25, seed=5)
        b = seesaw_optimize(cfg21, (0, 1), iterations=25, seed=5)
        assert a.p_exact == b.p_exact
        assert strategy_hash(a.strategy) == strategy_hash(b.strategy)

    def test_monotone_on_m3(self, equal3):
        cfg = DqacmConfig(m=3, n=1, family=equal3)
        res = seesaw_optimize(cfg, (0, 1), iterations=25, seed=0)
        assert res.trace == tuple(sorted(res.trace))
        lam = quantum.overlap_lambda(equal3)
        assert res.p_exact <= bounds.epsilon_bob(3, lam, 1) + 1e-9


class TestSandwichNormLemma:
    def test_all_v_at_n1(self, cfg21, rng):
        s = ((0, 1),)
        for v in (((0, 1),), ((1, 0),)):
            for _ in range(5):
                res = verify_sandwich_norm(
                    cfg21,
                    s,
                    v,
                    random_measurement(2, 2, rng),
                    random_measurement(2, 2, rng),
                )
                assert res.ok
                assert res.omega == (1 if v[0] == (1, 0) else 0)
                assert res.sandwich_norm <= res.bound + 1e-9
                assert res.product_norm**2 == pytest.approx(res.sandwich_norm, abs=1e-8)

    def test_n2_spot_check(self, bb84, rng):
        cfg = DqacmConfig(m=2, n=2, family=bb84)
        s = ((1, 0), (0, 1))
        v = ((1, 0), (1, 0))
        res = verify_sandwich_norm(
            cfg, s, v, random_measurement(4, 4, rng), random_measurement(4, 4, rng)
        )
        assert res.ok and res.omega == 2
        assert res.bound == pytest.approx(0.25)

    def test_requires_rank_one_measurements(self, cfg21, rng):
        coarse = random_measurement(2, 1, rng)  # single rank-2 outcome
        with pytest.raises(ValueError):
            verify_sandwich_norm(cfg21, ((0, 1),), ((0, 1),), coarse, coarse)


class TestProcedureEquivalence:
    def test_random_branching_strategies_agree(self, cfg21):
        for seed in range(3):
            strat = random_branching_strategy(cfg21, (0, 1), rng=seed)
            res = verify_procedure_equivalence(cfg21, strat, seed=seed, n_inputs=4)
            assert res.ok
            assert res.max_tv < 1e-9

    def test_branch_count(self, cfg21):
        strat = random_branching_strategy(cfg21, (0, 1), rng=0)
        # m * m * (m - 1) intermediate outcomes
        assert strat.intermediate.n_outcomes == 4
        assert set(strat.conditioned) == set(range(4))

    def test_result_is_truthy(self, cfg21):
        strat = random_branching_strategy(cfg21, (0, 1), rng=1)
        assert bool(verify_procedure_equivalence(cfg21, strat, n_inputs=2))
