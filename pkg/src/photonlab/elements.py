"""Unitary optical elements acting on Fock-space states.

Beam splitter convention (symmetric, i on reflection):

    a_A -> cos(kappa) a_A + i sin(kappa) a_B
    a_B -> i sin(kappa) a_A + cos(kappa) a_B

with kappa = pi/4 for the 50:50 case.  Reflection phases are a fixed
convention here; fringe formulas in the tests are stated in it.  The
Dove prism is modeled purely as the charge flip l -> -l with phase
e^{i 2 l theta} per photon; polarization and tight-focus corrections
are ignored.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .fock import (
    BasisState,
    FockError,
    FockSpace,
    ModeKind,
    ModeLabel,
    StateVector,
)


class MissingMirrorModeError(FockError):
    """A charge flip needs the opposite-charge mode, which is absent."""


class ElementKind(str, Enum):
    BEAM_SPLITTER = "beam-splitter"
    PHASE_SHIFT = "phase-shift"
    DOVE_PRISM = "dove-prism"
    MIRROR = "mirror"
    SWAP = "swap"


@dataclass(frozen=True)
class ElementSpec:
    """Declarative description of one optical element.

    Beam splitters and swaps target exactly two modes; phase shifts
    exactly one; Dove prisms and mirrors target the set of OAM modes in
    the arm they sit in.  Angles are radians and must be finite.
    """

    kind: ElementKind
    targets: tuple[ModeLabel, ...]
    parameter: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.parameter):
            raise ValueError("element parameter must be finite")
        n = len(self.targets)
        if self.kind in (ElementKind.BEAM_SPLITTER, ElementKind.SWAP) and n != 2:
            raise ValueError(f"{self.kind.value} targets exactly two modes")
        if self.kind == ElementKind.PHASE_SHIFT and n != 1:
            raise ValueError("phase-shift targets exactly one mode")
        if self.kind in (ElementKind.DOVE_PRISM, ElementKind.MIRROR) and n == 0:
            raise ValueError(f"{self.kind.value} needs at least one target mode")


def beam_splitter(mode_a: ModeLabel, mode_b: ModeLabel, kappa: float = math.pi / 4) -> ElementSpec:
    return ElementSpec(ElementKind.BEAM_SPLITTER, (mode_a, mode_b), kappa)


def phase_shift(mode: ModeLabel, phi: float) -> ElementSpec:
    return ElementSpec(ElementKind.PHASE_SHIFT, (mode,), phi)


def dove_prism(arm_modes: Iterable[ModeLabel], theta: float) -> ElementSpec:
    return ElementSpec(ElementKind.DOVE_PRISM, tuple(sorted(arm_modes)), theta)


def mirror(arm_modes: Iterable[ModeLabel]) -> ElementSpec:
    return ElementSpec(ElementKind.MIRROR, tuple(sorted(arm_modes)))


def swap(mode_a: ModeLabel, mode_b: ModeLabel) -> ElementSpec:
    return ElementSpec(ElementKind.SWAP, (mode_a, mode_b))


# ---------------------------------------------------------------------------
# element actions


def apply_beam_splitter(
    state: StateVector,
    mode_a: ModeLabel,
    mode_b: ModeLabel,
    kappa: float = math.pi / 4,
) -> StateVector:
    """Two-mode mixer; kappa = pi/4 gives the 50:50 splitter.

    Each occupation pair (m, n) on the targets is re-expanded through
    the binomial theorem on the transformed creation operators.  Total
    photon number is conserved, so truncation cannot overflow.
    """
    space = state.space
    space.require(mode_a)
    space.require(mode_b)
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    c, s = math.cos(kappa), math.sin(kappa)
    is_ = 1j * s
    out: dict[BasisState, complex] = {}
    for bs, amp in state.items():
        m, n = bs.n(mode_a), bs.n(mode_b)
        if m == 0 and n == 0:
            out[bs] = out.get(bs, 0) + amp
            continue
        base = bs.replace(mode_a, 0).replace(mode_b, 0)
        norm_in = math.sqrt(math.factorial(m) * math.factorial(n))
        # (c aA^ + i s aB^)^m (i s aA^ + c aB^)^n on |base>
        for j in range(m + 1):
            cj = math.comb(m, j) * (c ** j) * (is_ ** (m - j))
            for k in range(n + 1):
                ck = math.comb(n, k) * (is_ ** k) * (c ** (n - k))
                na, nb = j + k, (m - j) + (n - k)
                w = math.sqrt(math.factorial(na) * math.factorial(nb)) / norm_in
                tgt = base.replace(mode_a, na).replace(mode_b, nb)
                out[tgt] = out.get(tgt, 0) + amp * cj * ck * w
    return StateVector(space, out)


def apply_phase_shift(state: StateVector, mode: ModeLabel, phi: float) -> StateVector:
    """Each basis state gains e^{i n phi}, n the occupation of ``mode``."""
    state.space.require(mode)
    if phi == 0.0:
        return state
    ph = cmath.exp(1j * phi)
    return state.map_amplitudes(lambda bs, a: a * ph ** bs.n(mode))


def _flip_charges(
    state: StateVector,
    arm_modes: Iterable[ModeLabel],
    theta: float,
) -> StateVector:
    space = state.space
    arm = set()
    for m in arm_modes:
        space.require(m)
        if m.kind is not ModeKind.OAM:
            raise ValueError(f"charge flip acts on OAM modes, got {m}")
        arm.add(m)
    out: dict[BasisState, complex] = {}
    for bs, amp in state.items():
        occ = {}
        phase = 1.0 + 0j
        for mode, n in bs.occ:
            if mode in arm:
                target = ModeLabel(ModeKind.OAM, -mode.index, mode.channel)
                if target not in space:
                    raise MissingMirrorModeError(
                        f"flip of {mode} needs {target}, absent from the space"
                    )
                occ[target] = occ.get(target, 0) + n
                if theta != 0.0 and mode.index != 0:
                    phase *= cmath.exp(2j * mode.index * theta * n)
            else:
                occ[mode] = occ.get(mode, 0) + n
        tgt = BasisState(occ)
        out[tgt] = out.get(tgt, 0) + amp * phase
    return StateVector(space, out)


def apply_dove_prism(
    state: StateVector,
    arm_modes: Iterable[ModeLabel],
    theta: float,
) -> StateVector:
    """Dove prism rotated by theta on the OAM modes of one arm.

    Amplitude on charge l moves to charge -l with phase e^{i 2 l theta}
    per photon; the mirror mode -l must exist in the space for every
    populated charge.  Applying the prism twice at the same angle is the
    identity.
    """
    return _flip_charges(state, arm_modes, theta)


def apply_mirror(state: StateVector, arm_modes: Iterable[ModeLabel]) -> StateVector:
    """Plane-mirror reflection: the phase-free charge flip l -> -l."""
    return _flip_charges(state, arm_modes, 0.0)


def apply_swap(state: StateVector, mode_a: ModeLabel, mode_b: ModeLabel) -> StateVector:
    """Exchange the occupations of two modes."""
    state.space.require(mode_a)
    state.space.require(mode_b)
    out: dict[BasisState, complex] = {}
    for bs, amp in state.items():
        na, nb = bs.n(mode_a), bs.n(mode_b)
        tgt = bs.replace(mode_a, nb).replace(mode_b, na)
        out[tgt] = out.get(tgt, 0) + amp
    return StateVector(state.space, out)


def apply_element(state: StateVector, spec: ElementSpec) -> StateVector:
    k = spec.kind
    if k is ElementKind.BEAM_SPLITTER:
        return apply_beam_splitter(state, spec.targets[0], spec.targets[1], spec.parameter)
    if k is ElementKind.PHASE_SHIFT:
        return apply_phase_shift(state, spec.targets[0], spec.parameter)
    if k is ElementKind.DOVE_PRISM:
        return apply_dove_prism(state, spec.targets, spec.parameter)
    if k is ElementKind.MIRROR:
        return apply_mirror(state, spec.targets)
    if k is ElementKind.SWAP:
        return apply_swap(state, spec.targets[0], spec.targets[1])
    raise ValueError(f"unknown element kind {k}")


@dataclass(frozen=True)
class Interferometer:
    """Reusable composite transform: sequential element application.

    Immutable and shareable across concurrent sweep workers.  The
    composition of unitaries is unitary; ``apply`` preserves the norm of
    any input state to 1e-12.
    """

    elements: tuple[ElementSpec, ...] = field(default_factory=tuple)

    def apply(self, state: StateVector) -> StateVector:
        for spec in self.elements:
            state = apply_element(state, spec)
        return state

    def __call__(self, state: StateVector) -> StateVector:
        return self.apply(state)

    def then(self, *specs: ElementSpec) -> "Interferometer":
        return Interferometer(self.elements + tuple(specs))


def build_interferometer(elements: Sequence[ElementSpec]) -> Interferometer:
    """Compose an ordered element list; the empty list is the identity."""
    return Interferometer(tuple(elements))


def mach_zehnder(
    mode_a: ModeLabel,
    mode_b: ModeLabel,
    phi: float,
    kappa: float = math.pi / 4,
) -> Interferometer:
    """BS, phase phi on mode_a, BS.

    Single-photon output intensities are (sin^2(phi/2), cos^2(phi/2)) on
    (mode_a, mode_b) in this reflection-phase convention.
    """
    return build_interferometer(
        [
            beam_splitter(mode_a, mode_b, kappa),
            phase_shift(mode_a, phi),
            beam_splitter(mode_a, mode_b, kappa),
        ]
    )
