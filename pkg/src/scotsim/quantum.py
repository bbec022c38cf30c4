"""Finite-dimensional quantum states and projective measurements.

The protocols encode classical bits into slot-wise product states drawn
from a family of local bases.  This module provides the planar basis
family constructors, product-state preparation under round-wise
position permutations, Born-rule measurement of whole states or chosen
subsystems, and a couple of dense linear-algebra helpers.  Everything
is dense numpy; preparation is capped at 2**12 total dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError

__all__ = [
    "ORTHONORMALITY_TOL",
    "PROJECTOR_TOL",
    "MAX_TOTAL_DIM",
    "BasisFamily",
    "PureState",
    "ProjectiveMeasurement",
    "MeasureResult",
    "planar_basis_family",
    "bb84_family",
    "equal_spaced_family",
    "overlap_lambda",
    "prepare_product_state",
    "basis_measurement",
    "measure",
    "full_distribution",
    "spectral_norm",
]

ORTHONORMALITY_TOL = 1e-10
PROJECTOR_TOL = 1e-9
MAX_TOTAL_DIM = 2**12


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class BasisFamily:
    """A family of orthonormal bases of a common local dimension.

    ``bases[i][r]`` is the r-th vector of basis ``i`` as a complex row.
    Basis 0 plays the role of the computational basis in all named
    constructors.  Orthonormality of every basis is enforced to
    ``ORTHONORMALITY_TOL`` at construction.
    """

    bases: np.ndarray

    def __init__(self, bases) -> None:
        arr = np.asarray(bases, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"bases must have shape (m, l, l), got {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("a family needs at least two bases")
        eye = np.eye(arr.shape[1])
        for i, b in enumerate(arr):
            gram = b.conj() @ b.T
            if not np.allclose(gram, eye, atol=ORTHONORMALITY_TOL, rtol=0.0):
                raise ValueError(f"basis {i} is not orthonormal")
        arr.setflags(write=False)
        object.__setattr__(self, "bases", arr)

    @property
    def m(self) -> int:
        """Number of bases."""
        return self.bases.shape[0]

    @property
    def l(self) -> int:
        """Local Hilbert-space dimension."""
        return self.bases.shape[1]

    def vector(self, i: int, r: int) -> np.ndarray:
        return self.bases[i, r]


def planar_basis_family(m: int, thetas: Sequence[float]) -> BasisFamily:
    """Family of ``m`` real qubit bases at the given rotation angles.

    Basis 0 is computational.  For 1 <= i < m with angle ``thetas[i-1]``
    the vectors are ``[cos(t/2), sin(t/2)]`` and ``[sin(t/2), -cos(t/2)]``.
    Angles must be strictly increasing inside (0, pi), which keeps all
    pairwise overlaps strictly below 1.  Every family built here shares
    the same maximally entangled state: summing ``v (x) v`` over the two
    vectors of any one basis gives ``|00> + |11>`` exactly.
    """
    thetas = tuple(float(t) for t in thetas)
    if m < 2:
        raise ValueError("m must be at least 2")
    if len(thetas) != m - 1:
        raise ValueError(f"need {m - 1} angles for m={m}, got {len(thetas)}")
    prev = 0.0
    for t in thetas:
        if not prev < t < math.pi:
            raise ValueError("angles must be strictly increasing within (0, pi)")
        prev = t
    bases = np.empty((m, 2, 2), dtype=np.complex128)
    bases[0] = np.eye(2)
    for i, t in enumerate(thetas, start=1):
        c, s = math.cos(t / 2.0), math.sin(t / 2.0)
        bases[i, 0] = (c, s)
        bases[i, 1] = (s, -c)
    fam = BasisFamily(bases)
    # The shared entangled state is exact for real planar vectors; guard anyway.
    target = np.array([1.0, 0.0, 0.0, 1.0])
    for i in range(m):
        acc = sum(np.kron(bases[i, r].conj(), bases[i, r]) for r in range(2))
        assert np.allclose(acc, target, atol=ORTHONORMALITY_TOL, rtol=0.0)
    return fam


def bb84_family() -> BasisFamily:
    """Computational plus diagonal basis, the two-basis family at pi/2."""
    return planar_basis_family(2, (math.pi / 2.0,))


def equal_spaced_family(m: int) -> BasisFamily:
    """The m-basis planar family at equally spaced angles ``i*pi/m``."""
    return planar_basis_family(m, tuple(i * math.pi / m for i in range(1, m)))


def overlap_lambda(family: BasisFamily) -> float:
    """Worst-case squared overlap between vectors of distinct bases.

    ``max |<v|w>|**2`` over all pairs drawn from different bases.  This
    is the figure of merit entering every security bound; it is 1/2 for
    the two-basis pi/2 family and ``cos(pi/(2m))**2`` for the equally
    spaced m-basis family.
    """
    b = family.bases
    best = 0.0
    for i in range(family.m):
        for k in range(i + 1, family.m):
            ov = np.abs(b[i].conj() @ b[k].T) ** 2
            best = max(best, float(ov.max()))
    return best


@dataclass(frozen=True, eq=False)
class PureState:
    """A normalized pure state over an ordered tuple of subsystems."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims: Sequence[int]) -> None:
        vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        dims = tuple(int(d) for d in dims)
        if math.prod(dims) != vec.size:
            raise ValueError(f"dims {dims} inconsistent with amplitude length {vec.size}")
        nrm = np.linalg.norm(vec)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state norm {nrm} deviates from 1")
        vec = vec.copy()
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return self.amplitudes.size


def prepare_product_state(
    family: BasisFamily, r, s: Sequence[Sequence[int]]
) -> PureState:
    """Slot-wise product state encoding bit matrix ``r`` under shuffles ``s``.

    ``r`` has shape (m, n): row ``i`` holds the bits carried by basis
    ``i`` over the n rounds.  ``s`` lists one permutation of range(m)
    per round; ``s[j][i]`` is the slot position inside round ``j`` where
    the basis-``i`` carrier sits.  Slots are ordered round-major, so
    slot ``j*m + p`` holds the basis-``inv(s[j])(p)`` vector for that
    round.  Raises :class:`CapacityError` above ``MAX_TOTAL_DIM``.
    """
    r = np.asarray(r, dtype=np.int64)
    m, l = family.m, family.l
    if r.ndim != 2 or r.shape[0] != m:
        raise ValueError(f"r must have shape (m, n) with m={m}, got {r.shape}")
    n = r.shape[1]
    if np.any((r < 0) | (r >= l)):
        raise ValueError("bit values must lie in range(l)")
    if len(s) != n:
        raise ValueError(f"need one permutation per round, got {len(s)} for n={n}")
    if l ** (m * n) > MAX_TOTAL_DIM:
        raise CapacityError(
            f"product state dimension {l}**{m * n} exceeds {MAX_TOTAL_DIM}"
        )
    vec = np.ones(1, dtype=np.complex128)
    for j in range(n):
        perm = tuple(s[j])
        if sorted(perm) != list(range(m)):
            raise ValueError(f"s[{j}]={perm} is not a permutation of range({m})")
        inv = [0] * m
        for i, p in enumerate(perm):
            inv[p] = i
        for p in range(m):
            vec = np.kron(vec, family.bases[inv[p], r[inv[p], j]])
    return PureState(vec, (l,) * (m * n))


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """A complete family of mutually orthogonal projectors.

    ``subsystems`` restricts the action to the listed tensor factors of
    the measured state (None means the whole space).  Projector checks
    (hermiticity, idempotence, orthogonality, completeness) run at
    construction with tolerance ``PROJECTOR_TOL``.
    """

    projectors: tuple[np.ndarray, ...]
    subsystems: tuple[int, ...] | None = None

    def __init__(self, projectors, subsystems=None) -> None:
        projs = tuple(np.asarray(p, dtype=np.complex128) for p in projectors)
        if not projs:
            raise ValueError("measurement needs at least one outcome")
        d = projs[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for k, p in enumerate(projs):
            if p.shape != (d, d):
                raise ValueError("projectors must share one square shape")
            if not np.allclose(p, p.conj().T, atol=PROJECTOR_TOL, rtol=0.0):
                raise ValueError(f"projector {k} is not Hermitian")
            if not np.allclose(p @ p, p, atol=PROJECTOR_TOL, rtol=0.0):
                raise ValueError(f"projector {k} is not idempotent")
            total += p
        if not np.allclose(total, np.eye(d), atol=PROJECTOR_TOL, rtol=0.0):
            raise ValueError("projectors do not sum to the identity")
        for a in range(len(projs)):
            for b in range(a + 1, len(projs)):
                if not np.allclose(
                    projs[a] @ projs[b], 0.0, atol=PROJECTOR_TOL, rtol=0.0
                ):
                    raise ValueError(f"projectors {a} and {b} are not orthogonal")
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(
            self,
            "subsystems",
            None if subsystems is None else tuple(int(i) for i in subsystems),
        )

    @property
    def n_outcomes(self) -> int:
        return len(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


def basis_measurement(
    family: BasisFamily, i: int, subsystems: tuple[int, ...] | None = None
) -> ProjectiveMeasurement:
    """Rank-1 measurement in basis ``i`` of the family."""
    vecs = family.bases[i]
    projs = [np.outer(v, v.conj()) for v in vecs]
    return ProjectiveMeasurement(projs, subsystems)


def _measured_matrix(state: PureState, meas: ProjectiveMeasurement):
    """Reshape amplitudes to (measured block, rest), plus undo metadata."""
    if meas.subsystems is None:
        subs = tuple(range(len(state.dims)))
    else:
        subs = meas.subsystems
        if len(set(subs)) != len(subs) or any(
            not 0 <= i < len(state.dims) for i in subs
        ):
            raise ValueError(f"bad subsystem selection {subs}")
    rest = tuple(i for i in range(len(state.dims)) if i not in subs)
    d_meas = math.prod(state.dims[i] for i in subs)
    if meas.dim != d_meas:
        raise ValueError(
            f"measurement dimension {meas.dim} does not match subsystems ({d_meas})"
        )
    tensor = state.amplitudes.reshape(state.dims)
    mat = tensor.transpose(subs + rest).reshape(d_meas, -1)
    return mat, subs, rest


@dataclass(frozen=True, eq=False)
class MeasureResult:
    outcome: int
    probability: float
    post_state: PureState


def full_distribution(state: PureState, meas: ProjectiveMeasurement) -> np.ndarray:
    """Born probabilities of every outcome, in projector order."""
    mat, _, _ = _measured_matrix(state, meas)
    probs = np.array(
        [float(np.sum(np.abs(p @ mat) ** 2)) for p in meas.projectors]
    )
    # Completeness of the projector family keeps the total at 1.
    return probs / probs.sum()


def measure(state: PureState, meas: ProjectiveMeasurement, rng) -> MeasureResult:
    """Sample one outcome and return it with the collapsed state."""
    rng = _as_rng(rng)
    mat, subs, rest = _measured_matrix(state, meas)
    probs = full_distribution(state, meas)
    outcome = int(rng.choice(len(probs), p=probs))
    collapsed = meas.projectors[outcome] @ mat
    collapsed /= np.linalg.norm(collapsed)
    meas_dims = tuple(state.dims[i] for i in subs)
    rest_dims = tuple(state.dims[i] for i in rest)
    tensor = collapsed.reshape(meas_dims + rest_dims)
    inverse = np.argsort(subs + rest)
    post = PureState(tensor.transpose(inverse).reshape(-1), state.dims)
    return MeasureResult(outcome, float(probs[outcome]), post)


def spectral_norm(op) -> float:
    """Largest singular value of a dense operator (capped at 2**12 rows)."""
    arr = np.asarray(op, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError("spectral_norm expects a matrix")
    if max(arr.shape) > MAX_TOTAL_DIM:
        raise CapacityError(f"operator size {arr.shape} exceeds {MAX_TOTAL_DIM}")
    return float(np.linalg.norm(arr, 2))
