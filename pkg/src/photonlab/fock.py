"""Truncated multimode bosonic Fock space.

States are sparse maps from occupation-number basis states to complex
amplitudes.  A ``FockSpace`` fixes the mode set and a hard truncation
``n_max`` on the *total* photon number; every operation is a pure
function returning a new state, so values can be shared freely across
parameter sweeps.

Conventions:

* ladder action:  a|n> = sqrt(n) |n-1>,  a^dag|n> = sqrt(n+1) |n+1>
* amplitudes with magnitude below ``PRUNE_EPS`` are dropped after each
  operation to keep the maps sparse
* basis states order lexicographically over their canonical occupation
  lists, so serialized states are bit-stable across runs
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

PRUNE_EPS = 1e-15
HERMITICITY_TOL = 1e-12
IMAG_RESIDUE_TOL = 1e-10
SCHMIDT_TOL = 1e-10


class FockError(Exception):
    """Base class for Fock-space errors."""


class TruncationOverflowError(FockError):
    """A populated component would exceed the space truncation."""


class ModeNotInSpaceError(FockError):
    """An operation addressed a mode the space does not contain."""


class NonHermitianError(FockError):
    """A Hermitian observable was required but not provided."""


class ModeKind(str, Enum):
    """Degree of freedom a mode index refers to."""

    PATH = "path"
    OAM = "oam"
    FREQ = "frequency-bin"
    LEVEL = "two-level"


@dataclass(frozen=True, order=True)
class ModeLabel:
    """A distinguishable optical mode.

    ``index`` identifies the mode within its kind (OAM topological
    charge, path number, frequency bin, atomic level).  ``channel``
    distinguishes parallel copies of the same degree of freedom, e.g.
    the same OAM charge in two interferometer arms, or the signal and
    idler sides of a biphoton.  Labels are totally ordered and hashable;
    two labels are equal iff all three fields agree.
    """

    kind: ModeKind
    index: int
    channel: int = 0

    def __repr__(self) -> str:
        if self.channel:
            return f"{self.kind.value}({self.index};ch{self.channel})"
        return f"{self.kind.value}({self.index})"


def path(index: int) -> ModeLabel:
    return ModeLabel(ModeKind.PATH, index)


def oam(charge: int, channel: int = 0) -> ModeLabel:
    return ModeLabel(ModeKind.OAM, charge, channel)


def freq_bin(index: int, channel: int = 0) -> ModeLabel:
    return ModeLabel(ModeKind.FREQ, index, channel)


def level(index: int) -> ModeLabel:
    return ModeLabel(ModeKind.LEVEL, index)


class BasisState:
    """Occupation-number basis state |n_1, n_2, ...>.

    Canonical form: pairs ``(mode, n)`` sorted by mode, zero counts
    omitted.  Instances are immutable and hashable.
    """

    __slots__ = ("occ", "_hash")

    def __init__(self, occupations: Mapping[ModeLabel, int] | Iterable[tuple[ModeLabel, int]]):
        items = occupations.items() if isinstance(occupations, Mapping) else occupations
        canon = []
        for mode, n in sorted(items):
            if n < 0:
                raise ValueError(f"negative occupation {n} for {mode}")
            if n > 0:
                canon.append((mode, int(n)))
        object.__setattr__(self, "occ", tuple(canon))
        object.__setattr__(self, "_hash", hash(self.occ))

    def __setattr__(self, *_):
        raise AttributeError("BasisState is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return isinstance(other, BasisState) and self.occ == other.occ

    def __lt__(self, other: "BasisState") -> bool:
        return self.occ < other.occ

    @property
    def total(self) -> int:
        return sum(n for _, n in self.occ)

    def n(self, mode: ModeLabel) -> int:
        for m, cnt in self.occ:
            if m == mode:
                return cnt
        return 0

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self.occ)

    def replace(self, mode: ModeLabel, n: int) -> "BasisState":
        d = self.as_dict()
        if n:
            d[mode] = n
        else:
            d.pop(mode, None)
        return BasisState(d)

    def restrict(self, modes: frozenset[ModeLabel]) -> tuple[tuple[ModeLabel, int], ...]:
        return tuple((m, n) for m, n in self.occ if m in modes)

    def __repr__(self) -> str:
        if not self.occ:
            return "|vac>"
        inner = ", ".join(f"{m}:{n}" for m, n in self.occ)
        return f"|{inner}>"


VACUUM = BasisState({})


class FockSpace:
    """Mode set plus a hard truncation on the total photon number.

    ``n_max`` bounds the *total* N of any populated basis state.  For
    states prepared with ladder operators, choosing n_max at twice the
    largest prepared photon number keeps every ladder action exact.
    """

    def __init__(self, modes: Sequence[ModeLabel], n_max: int):
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
        mode_tuple = tuple(sorted(set(modes)))
        if len(mode_tuple) != len(tuple(modes)):
            raise ValueError("duplicate mode labels")
        self.modes = mode_tuple
        self.n_max = int(n_max)
        self._mode_set = frozenset(mode_tuple)

    def __contains__(self, mode: ModeLabel) -> bool:
        return mode in self._mode_set

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FockSpace)
            and self.modes == other.modes
            and self.n_max == other.n_max
        )

    def __hash__(self) -> int:
        return hash((self.modes, self.n_max))

    @property
    def dimension(self) -> int:
        # number of occupation lists with total <= n_max over M modes
        m = len(self.modes)
        return math.comb(self.n_max + m, m)

    def require(self, mode: ModeLabel) -> None:
        if mode not in self._mode_set:
            raise ModeNotInSpaceError(f"{mode} not in space")

    def contains_state(self, bs: BasisState) -> bool:
        return bs.total <= self.n_max and all(m in self._mode_set for m, _ in bs.occ)

    def basis_state(self, occupations: Mapping[ModeLabel, int]) -> BasisState:
        bs = BasisState(occupations)
        if not self.contains_state(bs):
            raise TruncationOverflowError(f"{bs} not in space (n_max={self.n_max})")
        return bs

    def enumerate_basis(self) -> Iterator[BasisState]:
        """All basis states, lexicographic over canonical occupation lists."""

        def gen(i: int, left: int, acc: list[tuple[ModeLabel, int]]):
            if i == len(self.modes):
                yield BasisState(acc)
                return
            for n in range(left + 1):
                yield from gen(i + 1, left - n, acc + [(self.modes[i], n)])

        yield from sorted(gen(0, self.n_max, []))

    def __repr__(self) -> str:
        return f"FockSpace({list(self.modes)}, n_max={self.n_max})"


class StateVector:
    """Complex amplitudes over the occupation basis of one FockSpace.

    Instances are immutable.  Construction does not normalize unless
    asked; norm-preserving elements keep <psi|psi> = 1 to 1e-12.
    """

    __slots__ = ("space", "_amp")

    def __init__(
        self,
        space: FockSpace,
        amplitudes: Mapping[BasisState, complex],
        normalize: bool = False,
        prune: bool = True,
    ):
        amp: dict[BasisState, complex] = {}
        for bs, a in amplitudes.items():
            if not space.contains_state(bs):
                raise TruncationOverflowError(f"{bs} outside {space}")
            a = complex(a)
            if not prune or abs(a) > PRUNE_EPS:
                amp[bs] = amp.get(bs, 0) + a
        if normalize:
            nrm = math.sqrt(sum(abs(a) ** 2 for a in amp.values()))
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            amp = {bs: a / nrm for bs, a in amp.items()}
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "_amp", amp)

    def __setattr__(self, *_):
        raise AttributeError("StateVector is immutable")

    def amplitude(self, bs: BasisState) -> complex:
        return self._amp.get(bs, 0j)

    def items(self) -> list[tuple[BasisState, complex]]:
        """Amplitudes in fixed lexicographic order (bit-stable)."""
        return sorted(self._amp.items(), key=lambda kv: kv[0])

    def support(self) -> list[BasisState]:
        return sorted(self._amp)

    @property
    def num_terms(self) -> int:
        return len(self._amp)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._amp.values()))

    def normalized(self) -> "StateVector":
        return StateVector(self.space, self._amp, normalize=True)

    def inner(self, other: "StateVector") -> complex:
        """<self|other> over the smaller support."""
        a, b = self._amp, other._amp
        if len(b) < len(a):
            return sum(a[bs].conjugate() * amp for bs, amp in b.items() if bs in a)
        return sum(amp.conjugate() * b[bs] for bs, amp in a.items() if bs in b)

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.inner(other))

    def map_amplitudes(self, fn) -> "StateVector":
        """New state with ``fn(bs, amp) -> amp``; for phase-type maps."""
        return StateVector(self.space, {bs: fn(bs, a) for bs, a in self._amp.items()})

    def __add__(self, other: "StateVector") -> "StateVector":
        if other.space != self.space:
            raise ValueError("states live in different spaces")
        amp = dict(self._amp)
        for bs, a in other._amp.items():
            amp[bs] = amp.get(bs, 0) + a
        return StateVector(self.space, amp)

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.space, {bs: factor * a for bs, a in self._amp.items()})

    def __repr__(self) -> str:
        terms = ", ".join(f"{a:.4g}*{bs}" for bs, a in self.items()[:6])
        more = "" if self.num_terms <= 6 else f", ... ({self.num_terms} terms)"
        return f"StateVector({terms}{more})"


def basis_vector(space: FockSpace, occupations: Mapping[ModeLabel, int]) -> StateVector:
    return StateVector(space, {space.basis_state(occupations): 1.0})


def vacuum_state(space: FockSpace) -> StateVector:
    return StateVector(space, {VACUUM: 1.0})


# ---------------------------------------------------------------------------
# ladder operators


def create(state: StateVector, mode: ModeLabel) -> StateVector:
    """Apply a^dag on ``mode``:  n -> n+1 with factor sqrt(n+1).

    The result is not renormalized; ladder action is linear, not
    unitary.  Raises TruncationOverflowError if any populated component
    would exceed the space truncation.
    """
    state.space.require(mode)
    amp: dict[BasisState, complex] = {}
    for bs, a in state._amp.items():
        if bs.total + 1 > state.space.n_max:
            raise TruncationOverflowError(
                f"a^dag on {bs} exceeds n_max={state.space.n_max}"
            )
        n = bs.n(mode)
        amp[bs.replace(mode, n + 1)] = a * math.sqrt(n + 1)
    return StateVector(state.space, amp)


def annihilate(state: StateVector, mode: ModeLabel) -> StateVector:
    """Apply a on ``mode``:  n -> n-1 with factor sqrt(n).

    The n = 0 component maps to the zero vector; this is not an error.
    """
    state.space.require(mode)
    amp: dict[BasisState, complex] = {}
    for bs, a in state._amp.items():
        n = bs.n(mode)
        if n == 0:
            continue
        tgt = bs.replace(mode, n - 1)
        amp[tgt] = amp.get(tgt, 0) + a * math.sqrt(n)
    return StateVector(state.space, amp)


def number_expectation(state: StateVector, mode: ModeLabel) -> float:
    """<N_mode> for a normalized state."""
    state.space.require(mode)
    return sum(bs.n(mode) * abs(a) ** 2 for bs, a in state._amp.items())


def total_number_expectation(state: StateVector) -> float:
    return sum(bs.total * abs(a) ** 2 for bs, a in state._amp.items())


# ---------------------------------------------------------------------------
# observables


class Observable:
    """Sparse linear operator: map (bra basis state, ket basis state) -> entry.

    If built with ``hermitian=True`` the entries are checked to satisfy
    M[a,b] = conj(M[b,a]) to within 1e-12.
    """

    __slots__ = ("space", "entries", "hermitian")

    def __init__(
        self,
        space: FockSpace,
        entries: Mapping[tuple[BasisState, BasisState], complex],
        hermitian: bool = True,
    ):
        ent = {k: complex(v) for k, v in entries.items() if v != 0}
        for (bra, ket) in ent:
            if not (space.contains_state(bra) and space.contains_state(ket)):
                raise TruncationOverflowError("observable entry outside space")
        if hermitian:
            for (bra, ket), v in ent.items():
                if abs(v - ent.get((ket, bra), 0j).conjugate()) > HERMITICITY_TOL:
                    raise NonHermitianError(
                        f"entry ({bra},{ket}) breaks Hermiticity by more than {HERMITICITY_TOL}"
                    )
        self.space = space
        self.entries = ent
        self.hermitian = hermitian

    def apply(self, state: StateVector) -> StateVector:
        """O|psi> (unnormalized)."""
        amp: dict[BasisState, complex] = {}
        for (bra, ket), v in self.entries.items():
            a = state._amp.get(ket)
            if a is not None:
                amp[bra] = amp.get(bra, 0) + v * a
        return StateVector(self.space, amp)

    def dagger(self) -> "Observable":
        ent = {(k, b): v.conjugate() for (b, k), v in self.entries.items()}
        return Observable(self.space, ent, hermitian=self.hermitian)

    def support(self) -> list[BasisState]:
        s = set()
        for bra, ket in self.entries:
            s.add(bra)
            s.add(ket)
        return sorted(s)

    def matrix(self, basis: Sequence[BasisState]) -> np.ndarray:
        idx = {bs: i for i, bs in enumerate(basis)}
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        for (bra, ket), v in self.entries.items():
            if bra in idx and ket in idx:
                m[idx[bra], idx[ket]] = v
        return m

    def max_hermiticity_defect(self) -> float:
        defect = 0.0
        for (bra, ket), v in self.entries.items():
            defect = max(defect, abs(v - self.entries.get((ket, bra), 0j).conjugate()))
        return defect

    def eigensystem(self, state: StateVector) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and Born probabilities of measuring on ``state``.

        The matrix is diagonalized on the span of the operator support
        plus the state support; everything outside the operator support
        lies in its kernel, so the restriction is exact.
        """
        if not self.hermitian:
            raise NonHermitianError("projective measurement needs a Hermitian observable")
        basis = sorted(set(self.support()) | set(state.support()))
        m = self.matrix(basis)
        evals, evecs = np.linalg.eigh(m)
        psi = np.array([state.amplitude(bs) for bs in basis])
        probs = np.abs(evecs.conj().T @ psi) ** 2
        total = probs.sum()
        if total > 0:
            probs = probs / total
        return evals, probs


def identity_observable(space: FockSpace, basis: Iterable[BasisState]) -> Observable:
    return Observable(space, {(bs, bs): 1.0 for bs in basis})


def dyad_sum(
    space: FockSpace,
    dyads: Iterable[tuple[BasisState, BasisState, complex]],
    hermitian: bool = True,
) -> Observable:
    """Observable from |bra><ket| terms."""
    ent: dict[tuple[BasisState, BasisState], complex] = {}
    for bra, ket, coeff in dyads:
        key = (bra, ket)
        ent[key] = ent.get(key, 0) + coeff
    return Observable(space, ent, hermitian=hermitian)


def expectation(state: StateVector, obs: Observable) -> float:
    """<psi|O|psi> for a Hermitian O on a normalized state.

    The imaginary residue must be below 1e-10 and is discarded.
    """
    if not obs.hermitian:
        raise NonHermitianError("expectation requires a Hermitian observable")
    val = state.inner(obs.apply(state))
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise FockError(f"imaginary residue {val.imag:.2e} exceeds {IMAG_RESIDUE_TOL}")
    return val.real


def variance_and_uncertainty(state: StateVector, obs: Observable) -> tuple[float, float]:
    """(Delta O)^2 and Delta O = sqrt(<O^2> - <O>^2), round-off clamped.

    <O^2> is evaluated as <O psi|O psi>, avoiding an explicit operator
    square.
    """
    mean = expectation(state, obs)
    ophi = obs.apply(state)
    second = ophi.inner(ophi).real
    var = second - mean * mean
    return var, math.sqrt(max(var, 0.0))


def susskind_glogower(space: FockSpace) -> tuple[Observable, Observable]:
    """Ladder-phase operator pair on a single-mode space.

    Returns ``(S, A)`` where S = sum_n |n><n+1| (non-Hermitian) and
    A = S + S^dag (Hermitian).  On the truncated space S coincides
    entrywise with (N+1)^(-1/2) a; truncated to {|0>,|1>} the Hermitian
    A is the first Pauli matrix.
    """
    if len(space.modes) != 1:
        raise ValueError("susskind_glogower expects a single-mode space")
    if space.n_max < 1:
        raise ValueError("need n_max >= 1")
    mode = space.modes[0]
    levels = [space.basis_state({mode: n} if n else {}) for n in range(space.n_max + 1)]
    s_ent = {(levels[n], levels[n + 1]): 1.0 for n in range(space.n_max)}
    s = Observable(space, s_ent, hermitian=False)
    # cross-check the sum form against the ladder form (N+1)^(-1/2) a
    for n in range(1, space.n_max + 1):
        ladder = annihilate(StateVector(space, {levels[n]: 1.0}), mode).scaled(
            1 / math.sqrt(n)
        )
        defect = (s.apply(StateVector(space, {levels[n]: 1.0})) + ladder.scaled(-1)).norm()
        if defect > 1e-12:
            raise FockError(f"ladder-phase identity broken at n={n}: defect {defect:.2e}")
    a_ent = dict(s_ent)
    for n in range(space.n_max):
        a_ent[(levels[n + 1], levels[n])] = 1.0
    a = Observable(space, a_ent, hermitian=True)
    return s, a


def number_observable(space: FockSpace, mode: ModeLabel) -> Observable:
    """N_mode as a diagonal sparse observable (small spaces only)."""
    space.require(mode)
    ent = {}
    for bs in space.enumerate_basis():
        n = bs.n(mode)
        if n:
            ent[(bs, bs)] = float(n)
    return Observable(space, ent)


def truncated_phase_state(space: FockSpace, phi: float) -> StateVector:
    """Normalized partial sum sum_{n<=n_max} e^{i n phi} |n> / sqrt(n_max+1).

    Phase states are non-normalizable; only truncated partial sums are
    representable.  S acts on the partial sum as e^{i phi} times the
    same state up to a truncation tail of norm 1/sqrt(n_max+1).
    """
    if len(space.modes) != 1:
        raise ValueError("phase states are single-mode")
    mode = space.modes[0]
    k = space.n_max
    amp = {
        space.basis_state({mode: n} if n else {}): cmath.exp(1j * n * phi) / math.sqrt(k + 1)
        for n in range(k + 1)
    }
    return StateVector(space, amp)


# ---------------------------------------------------------------------------
# entanglement


def schmidt_values(
    state: StateVector,
    partition: tuple[Sequence[ModeLabel], Sequence[ModeLabel]],
) -> np.ndarray:
    """Singular values of the amplitude matrix under a mode bipartition.

    The state amplitudes are reshaped into a matrix indexed by the
    occupation pattern on each side; the singular values squared are the
    Schmidt coefficients.  Rank 1 (one value above 1e-10) iff the state
    is separable across the partition.
    """
    side_a, side_b = (frozenset(p) for p in partition)
    if not side_a or not side_b:
        raise ValueError("partition sides must be nonempty")
    if side_a & side_b:
        raise ValueError("partition sides overlap")
    if (side_a | side_b) != frozenset(state.space.modes):
        raise ValueError("partition must cover all modes of the space")
    rows: dict[tuple, int] = {}
    cols: dict[tuple, int] = {}
    coords = []
    for bs, a in state.items():
        ka = bs.restrict(side_a)
        kb = bs.restrict(side_b)
        i = rows.setdefault(ka, len(rows))
        j = cols.setdefault(kb, len(cols))
        coords.append((i, j, a))
    m = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, j, a in coords:
        m[i, j] = a
    return np.linalg.svd(m, compute_uv=False)


def schmidt_rank(
    state: StateVector,
    partition: tuple[Sequence[ModeLabel], Sequence[ModeLabel]],
    tol: float = SCHMIDT_TOL,
) -> tuple[int, np.ndarray]:
    """Schmidt rank and singular values; rank 1 iff separable."""
    svals = schmidt_values(state, partition)
    return int(np.sum(svals > tol)), svals
