"""Adversarial strategies against the delegated-measurement game.

A dishonest receiver who must answer in two separated regions is
modelled by a split of their system into two halves, an ancilla, a
joint pre-processing unitary, and per-shuffle projective measurements
on each half.  The cheating probability averages, over all shuffle
tuples s and bit matrices r, the chance that half 0 outputs the row
named by target index l0 while half 1 simultaneously outputs the row
named by l1.  Everything is evaluated by exact enumeration over the
(m!)**n shuffle tuples and l**(m n) bit matrices, which caps problem
sizes at m in {2, 3}, n at most 3, and 2**12 total dimensions.

The see-saw optimizer alternates closed-form coordinate updates:
pairwise projector exchanges driven by per-outcome score operators for
each half, then a polar-decomposition update of the unitary.  Each
step is individually non-decreasing, and guards revert any numerically
regressive update, so the reported trace is monotone.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dqacm import DqacmConfig, enumerate_permutations, sample_inputs
from .errors import CapacityError
from .quantum import (
    MAX_TOTAL_DIM,
    ProjectiveMeasurement,
    overlap_lambda,
    prepare_product_state,
    spectral_norm,
)

__all__ = [
    "Strategy",
    "BranchingStrategy",
    "SeesawResult",
    "SandwichNormResult",
    "EquivalenceResult",
    "cheat_probability_exact",
    "cheat_probability_gamma",
    "seesaw_optimize",
    "random_strategy",
    "random_measurement",
    "honest_single_branch_strategy",
    "intercept_strategy",
    "omega_weight",
    "compose_shuffles",
    "verify_sandwich_norm",
    "verify_procedure_equivalence",
    "random_branching_strategy",
    "strategy_hash",
]

MAX_N = 3
_UNITARY_TOL = 1e-9


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_measurement(
    dim: int, n_outcomes: int, rng, ranks: Sequence[int] | None = None
) -> ProjectiveMeasurement:
    """Haar-random projective measurement with the given rank profile.

    Default ranks split ``dim`` as evenly as possible over the outcomes;
    when ``dim < n_outcomes`` the surplus outcomes get rank-0 (all-zero)
    projectors, which the game treats as outcomes never produced.
    """
    rng = _as_rng(rng)
    if ranks is None:
        base, rem = divmod(dim, n_outcomes)
        ranks = [base + (1 if k < rem else 0) for k in range(n_outcomes)]
    ranks = [int(x) for x in ranks]
    if len(ranks) != n_outcomes or any(x < 0 for x in ranks) or sum(ranks) != dim:
        raise ValueError(f"rank profile {ranks} does not resolve dimension {dim}")
    u = _haar_unitary(dim, rng)
    projs = []
    start = 0
    for rk in ranks:
        cols = u[:, start : start + rk]
        projs.append(cols @ cols.conj().T)
        start += rk
    return ProjectiveMeasurement(projs)


def compose_shuffles(
    s: Sequence[Sequence[int]], v: Sequence[Sequence[int]]
) -> tuple[tuple[int, ...], ...]:
    """Round-wise composition: the shuffle whose row i sits where s put row v[j][i].

    Returns the tuple with entries ``s[j][v[j][i]]``.
    """
    if len(s) != len(v):
        raise ValueError("s and v must have the same number of rounds")
    out = []
    for sj, vj in zip(s, v):
        if sorted(vj) != list(range(len(sj))):
            raise ValueError(f"{vj} is not a permutation of range({len(sj)})")
        out.append(tuple(sj[vj[i]] for i in range(len(sj))))
    return tuple(out)


def omega_weight(
    v: Sequence[Sequence[int]], l0: int, l1: int, s_probe: Sequence[Sequence[int]]
) -> int:
    """Number of rounds of ``v`` that alias target l1 onto target l0.

    Defined through position collisions: round j counts when the
    composed shuffle places row l1 where the probe shuffle placed row
    l0.  The count does not depend on the probe (positions cancel), so
    it is evaluated at ``s_probe`` and at a second internally chosen
    probe and the two counts are asserted equal.
    """
    m = len(v[0])
    if l0 == l1 or not (0 <= l0 < m and 0 <= l1 < m):
        raise ValueError(f"targets ({l0}, {l1}) invalid for m={m}")

    def count(probe) -> int:
        sv = compose_shuffles(probe, v)
        return sum(1 for j in range(len(v)) if sv[j][l1] == probe[j][l0])

    alt_perm = tuple(reversed(range(m)))
    alt = tuple(alt_perm for _ in v)
    if tuple(tuple(p) for p in s_probe) == alt:
        alt = tuple(tuple(range(m)) for _ in v)
    w1, w2 = count(tuple(tuple(p) for p in s_probe)), count(alt)
    assert w1 == w2, "weight must not depend on the probe shuffle"
    return w1


class _Game:
    """Precomputed enumeration data for one (config, targets) pair.

    For every shuffle tuple s this caches the encoding isometry whose
    column ``col`` is the product state of the bit matrix with bits read
    off ``col`` slot-major, the two decoded values e0/e1 per column, and
    the columns grouped by the (e0, e1) pair for batched contraction.
    """

    def __init__(self, config: DqacmConfig, targets: tuple[int, int]):
        m, n, l = config.m, config.n, config.l
        l0, l1 = targets
        if m not in (2, 3):
            raise CapacityError(f"adversarial enumeration supports m in {{2, 3}}, got {m}")
        if n > MAX_N:
            raise CapacityError(f"adversarial enumeration supports n <= {MAX_N}, got {n}")
        if l ** (m * n) > MAX_TOTAL_DIM:
            raise CapacityError("state space exceeds the dense-enumeration cap")
        if l0 == l1 or not (0 <= l0 < m and 0 <= l1 < m):
            raise ValueError(f"targets ({l0}, {l1}) must be distinct indices below {m}")
        self.config = config
        self.targets = (l0, l1)
        self.m, self.n, self.l = m, n, l
        self.dim_a = l ** (m * n)
        self.n_out = l**n
        self.s_tuples = tuple(
            itertools.product(enumerate_permutations(m), repeat=n)
        )

        cols = np.arange(self.dim_a)
        mn = m * n
        # bit of slot k in column col, slots ordered round-major, big-endian
        bit = [(cols >> (mn - 1 - k)) & 1 for k in range(mn)]
        self.encoders = []
        self.e0 = []
        self.e1 = []
        self.groups = []
        for s in self.s_tuples:
            b = np.ones((1, 1), dtype=np.complex128)
            for j in range(n):
                inv = np.argsort(s[j])
                for p in range(m):
                    b = np.kron(b, config.family.bases[inv[p]].T)
            self.encoders.append(b)
            e0 = np.zeros(self.dim_a, dtype=np.int64)
            e1 = np.zeros(self.dim_a, dtype=np.int64)
            for j in range(n):
                e0 |= bit[j * m + s[j][l0]] << (n - 1 - j)
                e1 |= bit[j * m + s[j][l1]] << (n - 1 - j)
            self.e0.append(e0)
            self.e1.append(e1)
            key = e0 * self.n_out + e1
            order = np.argsort(key, kind="stable")
            grouped = []
            for k in np.unique(key):
                sel = order[key[order] == k]
                grouped.append((int(k) // self.n_out, int(k) % self.n_out, sel))
            self.groups.append(grouped)

    def ball_lists(self, gamma: float) -> list[np.ndarray]:
        """Outcome sets accepted as close enough to each decoded value."""
        out = []
        for e in range(self.n_out):
            members = [
                ep
                for ep in range(self.n_out)
                if bin(e ^ ep).count("1") <= self.n * gamma
            ]
            out.append(np.asarray(members))
        return out


_GAME_CACHE: dict[tuple, _Game] = {}


def _game_for(config: DqacmConfig, targets: tuple[int, int]) -> _Game:
    key = (config.m, config.n, tuple(targets), config.family.bases.tobytes())
    game = _GAME_CACHE.get(key)
    if game is None:
        game = _Game(config, targets)
        if len(_GAME_CACHE) > 32:
            _GAME_CACHE.clear()
        _GAME_CACHE[key] = game
    return game


@dataclass(frozen=True, eq=False)
class Strategy:
    """A two-branch cheating strategy.

    ``split`` partitions the tensor factors (m*n message qudits followed
    by the ancilla factors) into the branch-0 and branch-1 subsystems.
    ``measurements`` maps ``(branch, s)`` to the projective measurement
    that branch applies once the shuffle tuple s is announced; each has
    ``l**n`` outcomes interpreted as the guessed row value.
    """

    targets: tuple[int, int]
    ancilla_dims: tuple[int, ...]
    ancilla_state: np.ndarray
    unitary: np.ndarray
    split: tuple[tuple[int, ...], tuple[int, ...]]
    measurements: Mapping[tuple[int, tuple], ProjectiveMeasurement]
    qudit_count: int
    local_dim: int = 2

    def __init__(
        self,
        targets,
        ancilla_dims,
        ancilla_state,
        unitary,
        split,
        measurements,
        qudit_count,
        local_dim=2,
    ):
        targets = (int(targets[0]), int(targets[1]))
        ancilla_dims = tuple(int(d) for d in ancilla_dims)
        chi = np.asarray(ancilla_state, dtype=np.complex128).reshape(-1)
        if chi.size != math.prod(ancilla_dims):
            raise ValueError("ancilla state does not match ancilla_dims")
        if abs(np.linalg.norm(chi) - 1.0) > 1e-10:
            raise ValueError("ancilla state must be normalized")
        u = np.asarray(unitary, dtype=np.complex128)
        total = local_dim**qudit_count * math.prod(ancilla_dims)
        if total > MAX_TOTAL_DIM:
            raise CapacityError(f"strategy dimension {total} exceeds {MAX_TOTAL_DIM}")
        if u.shape != (total, total):
            raise ValueError(f"unitary shape {u.shape} does not match dimension {total}")
        if not np.allclose(
            u.conj().T @ u, np.eye(total), atol=_UNITARY_TOL, rtol=0.0
        ):
            raise ValueError("strategy unitary fails the unitarity check")
        factors = (local_dim,) * qudit_count + ancilla_dims
        idx0 = tuple(int(i) for i in split[0])
        idx1 = tuple(int(i) for i in split[1])
        if sorted(idx0 + idx1) != list(range(len(factors))):
            raise ValueError("split must partition all tensor factors")
        d0 = math.prod(factors[i] for i in idx0)
        d1 = math.prod(factors[i] for i in idx1)
        meas = dict(measurements)
        for (branch, _s), pm in meas.items():
            want = d0 if branch == 0 else d1
            if pm.dim != want:
                raise ValueError(f"branch {branch} measurement has dim {pm.dim}, want {want}")
        chi.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "ancilla_dims", ancilla_dims)
        object.__setattr__(self, "ancilla_state", chi)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "split", (idx0, idx1))
        object.__setattr__(self, "measurements", meas)
        object.__setattr__(self, "qudit_count", int(qudit_count))
        object.__setattr__(self, "local_dim", int(local_dim))

    @property
    def factors(self) -> tuple[int, ...]:
        return (self.local_dim,) * self.qudit_count + self.ancilla_dims

    @property
    def d0(self) -> int:
        return math.prod(self.factors[i] for i in self.split[0])

    @property
    def d1(self) -> int:
        return math.prod(self.factors[i] for i in self.split[1])

    @property
    def total_dim(self) -> int:
        return math.prod(self.factors)


def _permute_rows(mat: np.ndarray, factors: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the row tensor factors of a (rows, cols) matrix."""
    cols = mat.shape[1]
    t = mat.reshape(tuple(factors) + (cols,))
    return t.transpose(tuple(perm) + (len(factors),)).reshape(-1, cols)


def _branch_views(game: _Game, strategy: Strategy):
    """Iterate (si, W) with W the split-ordered tensor (d0, d1, columns)."""
    chi = strategy.ancilla_state.reshape(-1, 1)
    perm = strategy.split[0] + strategy.split[1]
    d0, d1 = strategy.d0, strategy.d1
    for si in range(len(game.s_tuples)):
        inp = np.kron(game.encoders[si], chi)
        v = strategy.unitary @ inp
        vp = _permute_rows(v, strategy.factors, perm)
        yield si, vp.reshape(d0, d1, game.dim_a)


def _projector_stacks(game: _Game, strategy: Strategy, si: int):
    s = game.s_tuples[si]
    p0 = np.stack(strategy.measurements[(0, s)].projectors)
    p1 = np.stack(strategy.measurements[(1, s)].projectors)
    return p0, p1


def _check_compat(game: _Game, strategy: Strategy) -> None:
    if strategy.qudit_count != game.m * game.n:
        raise ValueError("strategy qudit count does not match the game")
    if strategy.targets != game.targets:
        raise ValueError("strategy was built for different targets")
    for s in game.s_tuples:
        for branch in (0, 1):
            pm = strategy.measurements.get((branch, s))
            if pm is None:
                raise ValueError(f"strategy lacks a measurement for branch {branch} at {s}")
            if pm.n_outcomes != game.n_out:
                raise ValueError("measurement outcome count must be l**n")


def _evaluate(game: _Game, strategy: Strategy, balls: list[np.ndarray] | None) -> float:
    total = 0.0
    for si, w in _branch_views(game, strategy):
        p0, p1 = _projector_stacks(game, strategy, si)
        if balls is not None:
            p0 = np.stack([p0[b].sum(axis=0) for b in balls])
            p1 = np.stack([p1[b].sum(axis=0) for b in balls])
        for e0v, e1v, cols in game.groups[si]:
            wb = w[:, :, cols]
            y = np.tensordot(p0[e0v], wb, axes=(1, 0))
            z = np.einsum("ack,dc->adk", y, p1[e1v])
            total += float(np.real(np.einsum("adk,adk->", wb.conj(), z)))
    return total / (game.dim_a * len(game.s_tuples))


def cheat_probability_exact(config: DqacmConfig, strategy: Strategy) -> float:
    """Average probability that both branches output their exact target rows."""
    game = _game_for(config, strategy.targets)
    _check_compat(game, strategy)
    return _evaluate(game, strategy, None)


def cheat_probability_gamma(
    config: DqacmConfig, strategy: Strategy, gamma: float
) -> float:
    """Cheating probability that credits answers within relative distance gamma.

    A branch's answer is accepted when it differs from the true row on
    at most ``n * gamma`` rounds; the comparison is exact, so any gamma
    below 1/n reduces to the exact game.
    """
    if not 0.0 <= gamma <= 0.5:
        raise ValueError(f"gamma={gamma} outside [0, 0.5]")
    game = _game_for(config, strategy.targets)
    _check_compat(game, strategy)
    return _evaluate(game, strategy, game.ball_lists(gamma))


def _score_ops(
    game: _Game, si: int, w: np.ndarray, other_projs: np.ndarray, branch: int, dim: int
) -> np.ndarray:
    """Per-outcome score operators for one branch, holding the other fixed.

    The branch objective is ``sum_e tr(P_e S_e)``; maximizing it over
    complete projector families is the measurement update subproblem.
    """
    scores = np.zeros((game.n_out, dim, dim), dtype=np.complex128)
    for e0v, e1v, cols in game.groups[si]:
        wb = w[:, :, cols]
        if branch == 0:
            a = np.einsum("ack,dc->adk", wb, other_projs[e1v])
            scores[e0v] += np.einsum("adk,bdk->ab", a, wb.conj())
        else:
            pw = np.tensordot(other_projs[e0v], wb, axes=(1, 0))
            scores[e1v] += np.einsum("abk,adk->bd", wb.conj(), pw).T
    return scores


def _exchange_update(
    projs: np.ndarray, scores: np.ndarray, sweeps: int = 1
) -> np.ndarray:
    """Pairwise projector exchanges toward larger ``sum_e tr(P_e S_e)``.

    Each pair keeps its joint subspace fixed and re-splits it along the
    sign of the compressed score difference, the optimal two-outcome
    split, so every exchange is non-decreasing.
    """
    out = [p.copy() for p in projs]
    k = len(out)
    for _ in range(sweeps):
        for a in range(k):
            for b in range(a + 1, k):
                q = out[a] + out[b]
                w, vec = np.linalg.eigh(q)
                keep = w > 0.5
                if not keep.any():
                    continue
                basis = vec[:, keep]
                delta = basis.conj().T @ (scores[a] - scores[b]) @ basis
                delta = 0.5 * (delta + delta.conj().T)
                w2, v2 = np.linalg.eigh(delta)
                pos = v2[:, w2 > 0.0]
                new_a = basis @ pos @ pos.conj().T @ basis.conj().T
                new_b = q - new_a
                out[a] = 0.5 * (new_a + new_a.conj().T)
                out[b] = 0.5 * (new_b + new_b.conj().T)
    return np.stack(out)


@dataclass(frozen=True, eq=False)
class SeesawResult:
    strategy: Strategy
    p_exact: float
    trace: tuple[float, ...]
    converged: bool


def seesaw_optimize(
    config: DqacmConfig,
    targets: tuple[int, int],
    ancilla_dim: int = 2,
    iterations: int = 60,
    seed: int = 0,
    tol: float = 1e-9,
) -> SeesawResult:
    """Alternating maximization of the exact cheating probability.

    One restart from a Haar-random unitary and random measurements.
    Branch measurements are updated one branch at a time with scores
    recomputed in between, then the unitary moves to the polar factor
    of its linear gradient; any update that fails to improve the
    evaluated objective is reverted.  Stops early once the gain per
    iteration falls below ``tol``; ``converged`` reports whether that
    happened within the iteration budget.
    """
    rng = _as_rng(seed)
    game = _game_for(config, targets)
    mn = config.m * config.n
    d_a = game.dim_a
    total = d_a * ancilla_dim
    if total > MAX_TOTAL_DIM:
        raise CapacityError(f"seesaw dimension {total} exceeds {MAX_TOTAL_DIM}")

    factors = (2,) * mn + (ancilla_dim,)
    split0 = tuple(range(mn))
    split1 = (mn,)
    d0, d1 = d_a, ancilla_dim
    chi = np.zeros(ancilla_dim, dtype=np.complex128)
    chi[0] = 1.0
    unitary = _haar_unitary(total, rng)
    p0s = {}
    p1s = {}
    for s in game.s_tuples:
        p0s[s] = np.stack(random_measurement(d0, game.n_out, rng).projectors)
        p1s[s] = np.stack(random_measurement(d1, game.n_out, rng).projectors)

    perm = split0 + split1
    inv_perm = np.argsort(perm)
    perm_factors = [factors[i] for i in perm]

    def views():
        for si in range(len(game.s_tuples)):
            inp = np.kron(game.encoders[si], chi.reshape(-1, 1))
            v = unitary @ inp
            yield si, inp, _permute_rows(v, factors, perm).reshape(d0, d1, d_a)

    def evaluate() -> float:
        total_p = 0.0
        for si, _inp, w in views():
            s = game.s_tuples[si]
            for e0v, e1v, cols in game.groups[si]:
                wb = w[:, :, cols]
                y = np.tensordot(p0s[s][e0v], wb, axes=(1, 0))
                z = np.einsum("ack,dc->adk", y, p1s[s][e1v])
                total_p += float(np.real(np.einsum("adk,adk->", wb.conj(), z)))
        return total_p / (d_a * len(game.s_tuples))

    p = evaluate()
    trace = [p]
    converged = False
    for _ in range(iterations):
        for branch in (0, 1):
            store = p0s if branch == 0 else p1s
            backup = {s: store[s] for s in game.s_tuples}
            for si, _inp, w in views():
                s = game.s_tuples[si]
                other = p1s[s] if branch == 0 else p0s[s]
                dim = d0 if branch == 0 else d1
                scores = _score_ops(game, si, w, other, branch, dim)
                store[s] = _exchange_update(store[s], scores)
            p_new = evaluate()
            if p_new < p - 1e-12:
                store.update(backup)
            else:
                p = p_new

        grad = np.zeros_like(unitary)
        for si, inp, w in views():
            s = game.s_tuples[si]
            y = np.zeros((d0 * d1, d_a), dtype=np.complex128)
            for e0v, e1v, cols in game.groups[si]:
                wb = w[:, :, cols]
                t = np.tensordot(p0s[s][e0v], wb, axes=(1, 0))
                t = np.einsum("ack,dc->adk", t, p1s[s][e1v])
                y[:, cols] = t.reshape(d0 * d1, -1)
            grad += _permute_rows(y, perm_factors, inv_perm) @ inp.conj().T
        u_backup = unitary
        uu, _sv, vh = np.linalg.svd(grad)
        unitary = uu @ vh
        p_new = evaluate()
        if p_new < p - 1e-12:
            unitary = u_backup
        else:
            p = p_new

        assert p >= trace[-1] - 1e-10, "seesaw trace must be monotone"
        trace.append(p)
        if len(trace) >= 4 and trace[-1] - trace[-4] < tol:
            converged = True
            break

    measurements = {}
    for s in game.s_tuples:
        measurements[(0, s)] = ProjectiveMeasurement(list(p0s[s]))
        measurements[(1, s)] = ProjectiveMeasurement(list(p1s[s]))
    strategy = Strategy(
        targets=targets,
        ancilla_dims=(ancilla_dim,),
        ancilla_state=chi,
        unitary=unitary,
        split=(split0, split1),
        measurements=measurements,
        qudit_count=mn,
    )
    return SeesawResult(strategy, p, tuple(trace), converged)


def random_strategy(
    config: DqacmConfig,
    targets: tuple[int, int],
    ancilla_dim: int = 2,
    rng=0,
) -> Strategy:
    """Draw a strategy with Haar unitary, Haar measurements, random split.

    Half the draws use the canonical split (all qudits against the
    ancilla); the rest scatter the qudits over both branches, keeping
    the ancilla on branch 1 and branch 0 nonempty.
    """
    rng = _as_rng(rng)
    game = _game_for(config, targets)
    mn = config.m * config.n
    total = game.dim_a * ancilla_dim
    if total > MAX_TOTAL_DIM:
        raise CapacityError(f"strategy dimension {total} exceeds {MAX_TOTAL_DIM}")
    factors = (2,) * mn + (ancilla_dim,)
    if rng.random() < 0.5:
        split0 = tuple(range(mn))
    else:
        mask = rng.random(mn) < 0.5
        if not mask.any():
            mask[int(rng.integers(mn))] = True
        split0 = tuple(int(i) for i in np.nonzero(mask)[0])
    split1 = tuple(i for i in range(mn + 1) if i not in split0)
    d0 = math.prod(factors[i] for i in split0)
    d1 = math.prod(factors[i] for i in split1)

    chi = rng.standard_normal(ancilla_dim) + 1j * rng.standard_normal(ancilla_dim)
    chi /= np.linalg.norm(chi)
    measurements = {}
    for s in game.s_tuples:
        measurements[(0, s)] = random_measurement(d0, game.n_out, rng)
        measurements[(1, s)] = random_measurement(d1, game.n_out, rng)
    return Strategy(
        targets=targets,
        ancilla_dims=(ancilla_dim,),
        ancilla_state=chi,
        unitary=_haar_unitary(total, rng),
        split=(split0, split1),
        measurements=measurements,
        qudit_count=mn,
    )


def _decode_projectors(config: DqacmConfig, basis_idx: int, s, target: int) -> list[np.ndarray]:
    """Product measurement reading the target row off the decode slots.

    Outcome e projects the decode slot of round j onto basis vector
    ``e_j`` of ``basis_idx`` and leaves every other slot untouched.
    """
    m, n, l = config.m, config.n, config.l
    eye = np.eye(l, dtype=np.complex128)
    projs = []
    for e in range(l**n):
        p = np.ones((1, 1), dtype=np.complex128)
        for j in range(n):
            bit = (e >> (n - 1 - j)) & 1
            for pos in range(m):
                if pos == s[j][target]:
                    v = config.family.bases[basis_idx, bit]
                    p = np.kron(p, np.outer(v, v.conj()))
                else:
                    p = np.kron(p, eye)
        projs.append(p)
    return projs


def honest_single_branch_strategy(
    config: DqacmConfig, targets: tuple[int, int]
) -> Strategy:
    """Branch 0 decodes honestly; branch 1 holds nothing and guesses 0.

    Its exact cheating probability is ``l**(-n)`` in closed form: the
    honest branch always succeeds while the guess matches a uniform row.
    """
    game = _game_for(config, targets)
    mn = config.m * config.n
    measurements = {}
    guess = [np.zeros((1, 1), dtype=np.complex128) for _ in range(game.n_out)]
    guess[0] = np.ones((1, 1), dtype=np.complex128)
    for s in game.s_tuples:
        measurements[(0, s)] = ProjectiveMeasurement(
            _decode_projectors(config, targets[0], s, targets[0])
        )
        measurements[(1, s)] = ProjectiveMeasurement(guess)
    return Strategy(
        targets=targets,
        ancilla_dims=(1,),
        ancilla_state=np.ones(1),
        unitary=np.eye(game.dim_a),
        split=(tuple(range(mn)), (mn,)),
        measurements=measurements,
        qudit_count=mn,
    )


def intercept_strategy(config: DqacmConfig, targets: tuple[int, int]) -> Strategy:
    """Copy every slot in the branch-0 target basis, then split.

    Branch 0 keeps the (undisturbed) message qudits and decodes its
    target row exactly; branch 1 keeps the copies and reads the other
    row's decode positions through the copying basis.  For planar
    families this evaluates to ``cos((t1 - t0) / 2) ** (2 n)`` with
    t the two target angles, an independent closed form used in tests.
    """
    game = _game_for(config, targets)
    l0, l1 = targets
    m, n, l = config.m, config.n, config.l
    mn = m * n
    total = l ** (2 * mn)
    if total > MAX_TOTAL_DIM:
        raise CapacityError(f"intercept dimension {total} exceeds {MAX_TOTAL_DIM}")

    # One copying unitary per slot: rotate to the target basis, CNOT
    # into the matching ancilla qubit, rotate back.
    b = config.family.bases[l0]
    copy = np.zeros((l * l, l * l), dtype=np.complex128)
    for r in range(l):
        proj = np.outer(b[r], b[r].conj())
        shift = np.zeros((l, l))
        for a in range(l):
            shift[(a + r) % l, a] = 1.0
        copy += np.kron(proj, shift)
    unitary = np.eye(1, dtype=np.complex128)
    for _ in range(mn):
        unitary = np.kron(unitary, copy)
    # Factors above interleave (qudit, ancilla) per slot; reorder so all
    # qudits come first to match the strategy layout.
    interleaved = [x for k in range(mn) for x in (k, mn + k)]
    unitary = _permute_rows(unitary, (l,) * (2 * mn), np.argsort(interleaved))
    unitary = _permute_rows(unitary.conj().T, (l,) * (2 * mn), np.argsort(interleaved)).conj().T

    eye = np.eye(l, dtype=np.complex128)
    comp = np.eye(l, dtype=np.complex128)
    measurements = {}
    for s in game.s_tuples:
        measurements[(0, s)] = ProjectiveMeasurement(
            _decode_projectors(config, l0, s, l0)
        )
        projs1 = []
        for e in range(game.n_out):
            p = np.ones((1, 1), dtype=np.complex128)
            for j in range(n):
                bit = (e >> (n - 1 - j)) & 1
                for pos in range(m):
                    if pos == s[j][l1]:
                        p = np.kron(p, np.outer(comp[bit], comp[bit].conj()))
                    else:
                        p = np.kron(p, eye)
            projs1.append(p)
        measurements[(1, s)] = ProjectiveMeasurement(projs1)
    chi = np.zeros(l**mn)
    chi[0] = 1.0
    return Strategy(
        targets=targets,
        ancilla_dims=(l,) * mn,
        ancilla_state=chi,
        unitary=unitary,
        split=(tuple(range(mn)), tuple(range(mn, 2 * mn))),
        measurements=measurements,
        qudit_count=mn,
    )


@dataclass(frozen=True, eq=False)
class SandwichNormResult:
    omega: int
    bound: float
    sandwich_norm: float
    product_norm: float
    ok: bool


def verify_sandwich_norm(
    config: DqacmConfig,
    s,
    v,
    meas0: ProjectiveMeasurement,
    meas1: ProjectiveMeasurement,
    targets: tuple[int, int] = (0, 1),
    tol: float = 1e-9,
) -> SandwichNormResult:
    """Numerically check the projected-overlap norm bound for one (s, v).

    On the space (message register) x (branch 0) x (branch 1), the first
    projector pairs each branch-0 outcome with the span of the register
    encodings under s that decode to it; the second does the same for
    branch 1 under the composed shuffle.  Distinct shuffles encode into
    non-orthogonal spans, which is where the overlap parameter enters:
    the sandwich norm (first-second-first) must not exceed lam to the
    power of the aliasing weight of v, and equals the squared norm of
    the plain product since both factors are projectors.  Measurements
    must be rank-1 with ``l**n`` outcomes on an ``l**n``-dimensional
    branch space, mirroring an honest decoder's resolution.
    """
    game = _game_for(config, targets)
    s = tuple(tuple(p) for p in s)
    v = tuple(tuple(p) for p in v)
    l0, l1 = game.targets
    n_out = game.n_out
    if meas0.n_outcomes != n_out or meas1.n_outcomes != n_out:
        raise ValueError("measurements must have l**n outcomes")
    if meas0.dim != n_out or meas1.dim != n_out:
        raise ValueError("branch spaces must have dimension l**n")
    for pm in (meas0, meas1):
        for p in pm.projectors:
            if abs(np.trace(p).real - 1.0) > 1e-9:
                raise ValueError("measurements must be rank-1")

    sv = compose_shuffles(s, v)
    omega = omega_weight(v, l0, l1, s)
    lam = overlap_lambda(config.family)
    si = game.s_tuples.index(s)
    svi = game.s_tuples.index(sv)

    d_a = game.dim_a
    eye0 = np.eye(n_out)
    eye1 = np.eye(n_out)
    b_s = game.encoders[si]
    b_sv = game.encoders[svi]
    proj0 = np.zeros((d_a * n_out * n_out,) * 2, dtype=np.complex128)
    proj1 = np.zeros_like(proj0)
    for e in range(n_out):
        cols0 = b_s[:, game.e0[si] == e]
        cols1 = b_sv[:, game.e1[svi] == e]
        proj0 += np.kron(
            cols0 @ cols0.conj().T, np.kron(np.asarray(meas0.projectors[e]), eye1)
        )
        proj1 += np.kron(
            cols1 @ cols1.conj().T, np.kron(eye0, np.asarray(meas1.projectors[e]))
        )

    sandwich = spectral_norm(proj0 @ proj1 @ proj0)
    product = spectral_norm(proj0 @ proj1)
    bound = lam**omega
    ok = sandwich <= bound + tol and abs(product * product - sandwich) <= 1e-8
    return SandwichNormResult(omega, bound, sandwich, product, ok)


@dataclass(frozen=True, eq=False)
class BranchingStrategy:
    """A strategy whose branches act only after a shared branching measurement.

    The branching measurement has one outcome per element of the
    intermediate outcome set, of size ``m**2 (m - 1)``, and acts on the
    split-ordered joint space.  Each outcome g selects one product
    measurement pair for the two branches.
    """

    intermediate: ProjectiveMeasurement
    conditioned: Mapping[int, tuple[ProjectiveMeasurement, ProjectiveMeasurement]]
    unitary: np.ndarray
    ancilla_dims: tuple[int, ...]
    ancilla_state: np.ndarray
    split: tuple[tuple[int, ...], tuple[int, ...]]
    qudit_count: int
    local_dim: int = 2

    def __init__(
        self,
        intermediate,
        conditioned,
        unitary,
        ancilla_dims,
        ancilla_state,
        split,
        qudit_count,
        local_dim=2,
    ):
        object.__setattr__(self, "intermediate", intermediate)
        object.__setattr__(self, "conditioned", dict(conditioned))
        u = np.asarray(unitary, dtype=np.complex128)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "ancilla_dims", tuple(int(d) for d in ancilla_dims))
        chi = np.asarray(ancilla_state, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "ancilla_state", chi)
        object.__setattr__(
            self, "split", (tuple(split[0]), tuple(split[1]))
        )
        object.__setattr__(self, "qudit_count", int(qudit_count))
        object.__setattr__(self, "local_dim", int(local_dim))

    @property
    def factors(self) -> tuple[int, ...]:
        return (self.local_dim,) * self.qudit_count + self.ancilla_dims

    @property
    def d0(self) -> int:
        return math.prod(self.factors[i] for i in self.split[0])

    @property
    def d1(self) -> int:
        return math.prod(self.factors[i] for i in self.split[1])


def random_branching_strategy(
    config: DqacmConfig,
    targets: tuple[int, int],
    ancilla_dim: int = 2,
    rng=0,
) -> BranchingStrategy:
    """Haar-random branching strategy over the canonical split."""
    rng = _as_rng(rng)
    game = _game_for(config, targets)
    mn = config.m * config.n
    total = game.dim_a * ancilla_dim
    n_gamma = config.m**2 * (config.m - 1)
    chi = rng.standard_normal(ancilla_dim) + 1j * rng.standard_normal(ancilla_dim)
    chi /= np.linalg.norm(chi)
    conditioned = {}
    for g in range(n_gamma):
        conditioned[g] = (
            random_measurement(game.dim_a, game.n_out, rng),
            random_measurement(ancilla_dim, game.n_out, rng),
        )
    return BranchingStrategy(
        intermediate=random_measurement(total, n_gamma, rng),
        conditioned=conditioned,
        unitary=_haar_unitary(total, rng),
        ancilla_dims=(ancilla_dim,),
        ancilla_state=chi,
        split=(tuple(range(mn)), (mn,)),
        qudit_count=mn,
    )


@dataclass(frozen=True, eq=False)
class EquivalenceResult:
    ok: bool
    max_tv: float

    def __bool__(self) -> bool:
        return self.ok


def verify_procedure_equivalence(
    config: DqacmConfig,
    strategy: BranchingStrategy,
    seed: int = 0,
    n_inputs: int = 10,
) -> EquivalenceResult:
    """Compare destructive branching against coherent record-keeping.

    Procedure 1 applies the branching measurement destructively and then
    the selected product measurements, marginalizing the branch point.
    Procedure 2 records the branch outcome coherently into one register
    per party and lets each branch condition on its own register only.
    For each of ``n_inputs`` random honest input states the two outcome
    distributions must agree within total variation 1e-9.
    """
    rng = _as_rng(seed)
    n_gamma = strategy.intermediate.n_outcomes
    d0, d1 = strategy.d0, strategy.d1
    n_out = config.l**config.n
    perm = strategy.split[0] + strategy.split[1]
    max_tv = 0.0
    for _ in range(n_inputs):
        inputs = sample_inputs(config, rng)
        base = prepare_product_state(config.family, inputs.r, inputs.s).amplitudes
        chi = strategy.ancilla_state
        psi = np.kron(base, chi)
        y = strategy.unitary @ psi
        yp = _permute_rows(y.reshape(-1, 1), strategy.factors, perm).reshape(-1)

        blocks = [
            (np.asarray(rg) @ yp).reshape(d0, d1)
            for rg in strategy.intermediate.projectors
        ]

        p1 = np.zeros((n_out, n_out))
        for g, z in enumerate(blocks):
            m0, m1 = strategy.conditioned[g]
            for e0 in range(n_out):
                t = np.asarray(m0.projectors[e0]) @ z
                for e1 in range(n_out):
                    w = t @ np.asarray(m1.projectors[e1]).T
                    p1[e0, e1] += float(np.sum(np.abs(w) ** 2))

        # registers: axis 2 referee, axis 3 branch 0, axis 4 branch 1
        rec = np.zeros((d0, d1, n_gamma, n_gamma, n_gamma), dtype=np.complex128)
        for g, z in enumerate(blocks):
            rec[:, :, g, g, g] = z
        p2 = np.zeros((n_out, n_out))
        for e0 in range(n_out):
            a = np.zeros_like(rec)
            for g0 in range(n_gamma):
                m0 = np.asarray(strategy.conditioned[g0][0].projectors[e0])
                a[:, :, :, g0, :] = np.tensordot(m0, rec[:, :, :, g0, :], axes=(1, 0))
            for e1 in range(n_out):
                b = np.zeros_like(a)
                for g1 in range(n_gamma):
                    m1 = np.asarray(strategy.conditioned[g1][1].projectors[e1])
                    b[:, :, :, :, g1] = np.moveaxis(
                        np.tensordot(m1, a[:, :, :, :, g1], axes=(1, 1)), 0, 1
                    )
                p2[e0, e1] = float(np.sum(np.abs(b) ** 2))

        tv = 0.5 * float(np.abs(p1 - p2).sum())
        max_tv = max(max_tv, tv)
    return EquivalenceResult(max_tv < 1e-9, max_tv)


def strategy_hash(strategy: Strategy) -> str:
    """Stable content hash of a strategy, for report provenance."""
    h = hashlib.sha256()
    h.update(repr(strategy.targets).encode())
    h.update(repr(strategy.ancilla_dims).encode())
    h.update(repr(strategy.split).encode())
    h.update(np.round(strategy.ancilla_state, 12).tobytes())
    h.update(np.round(strategy.unitary, 12).tobytes())
    for key in sorted(strategy.measurements.keys()):
        h.update(repr(key).encode())
        for p in strategy.measurements[key].projectors:
            h.update(np.round(p, 12).tobytes())
    return h.hexdigest()
