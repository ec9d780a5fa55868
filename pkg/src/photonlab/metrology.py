"""Estimation protocols: interferometric phase, entangled-pair angular
displacement, and Ramsey frequency readout.

Analytic fringe/uncertainty laws live beside Monte Carlo sampling of the
same protocols, so the shot-noise 1/sqrt(N) and entangled 1/N scalings
can be checked both ways.  Estimator inversion uses the principal branch
of arccos with the working point assumed inside the first fringe; the
branch ambiguity is documented, not resolved adaptively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import elements, sources
from .fock import (
    FockError,
    FockSpace,
    ModeLabel,
    Observable,
    StateVector,
    dyad_sum,
    expectation,
    level,
    oam,
    path,
)

DERIVATIVE_FLOOR = 1e-8
FD_STEP = 1e-6


class StationaryPointError(FockError):
    """The mean curve is flat here; the working point carries no
    first-order information about the parameter."""


class DegenerateGridError(FockError):
    """A scaling fit needs at least four distinct resource counts."""


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of one estimation run.

    ``resources`` counts photons (or atoms) consumed; ``clamped`` marks
    a finite-sample mean that fell outside the estimator domain and was
    clipped to the boundary.  A zero uncertainty is legal only for the
    eigenstate (zero-variance) case.
    """

    estimate: float
    uncertainty: float
    resources: int
    method: str
    seed: int | None = None
    clamped: bool = False

    def __post_init__(self):
        if self.uncertainty < 0:
            raise ValueError("uncertainty must be nonnegative")
        if self.resources < 1:
            raise ValueError("resources must be >= 1")
        if self.method not in ("analytic", "monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class ScalingFit:
    """Log-log fit of uncertainty against resource count."""

    points: tuple[tuple[float, float], ...]
    slope: float
    slope_stderr: float


def fit_loglog(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Least-squares slope of log(delta) vs log(N) with standard error."""
    pts = tuple((float(n), float(d)) for n, d in points)
    if len(pts) < 4:
        raise DegenerateGridError("need at least 4 grid points")
    if any(d <= 0 for _, d in pts) or any(n <= 0 for n, _ in pts):
        raise DegenerateGridError("all points must be positive")
    x = np.log(np.array([n for n, _ in pts]))
    y = np.log(np.array([d for _, d in pts]))
    if float(np.ptp(x)) == 0.0:
        raise DegenerateGridError("resource grid is degenerate")
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return ScalingFit(pts, float(coeffs[0]), float(math.sqrt(max(cov[0, 0], 0.0))))


# ---------------------------------------------------------------------------
# observables


def observable_A(space: FockSpace) -> Observable:
    """sigma_x on the {|0>,|1>} occupation qubit of a single-mode space.

    This is the Hermitian part of the ladder-phase operator truncated to
    one photon; its expectation on (|0> + e^{i phi}|1>)/sqrt(2) is the
    interference fringe cos(phi).
    """
    if len(space.modes) != 1:
        raise ValueError("observable_A lives on a single-mode space")
    if space.n_max < 1:
        raise ValueError("need n_max >= 1")
    mode = space.modes[0]
    zero = space.basis_state({})
    one = space.basis_state({mode: 1})
    return dyad_sum(space, [(zero, one, 1.0), (one, zero, 1.0)])


def observable_B(space: FockSpace, mode_a: ModeLabel, mode_b: ModeLabel, n: int) -> Observable:
    """|0,N><N,0| + |N,0><0,N| on the two-mode NOON subspace.

    Rank 2, zero outside the NOON subspace; its square is the projector
    onto that subspace, so the expectation on a phased NOON state is
    cos(N phi) with second moment 1.
    """
    if n < 1:
        raise ValueError("need N >= 1")
    n0 = space.basis_state({mode_a: n})
    on = space.basis_state({mode_b: n})
    return dyad_sum(space, [(n0, on, 1.0), (on, n0, 1.0)])


def observable_R(
    space: FockSpace,
    l: int,
    detector_channels: tuple[int, int] = (0, 1),
) -> Observable:
    """Opposite-charge coincidence projector for detectors (a, b).

    Projects onto the two events where charge +l arrives at one detector
    and -l at the other.  It is a projector, so its second moment equals
    its mean on any state.
    """
    if l == 0:
        raise ValueError("need l != 0")
    ch_a, ch_b = detector_channels
    ev1 = space.basis_state({oam(l, ch_a): 1, oam(-l, ch_b): 1})
    ev2 = space.basis_state({oam(-l, ch_a): 1, oam(l, ch_b): 1})
    return dyad_sum(space, [(ev1, ev1, 1.0), (ev2, ev2, 1.0)])


# ---------------------------------------------------------------------------
# uncertainty propagation


def propagate_uncertainty(
    mean: Callable[[float], float],
    spread: Callable[[float], float],
    at: float,
    dmean: Callable[[float], float] | None = None,
    floor: float = DERIVATIVE_FLOOR,
) -> float:
    """Delta x = Delta O / |d<O>/dx| at the working point.

    The derivative is taken from ``dmean`` when the curve has a known
    analytic form, otherwise from a central difference with step 1e-6.
    Below the derivative floor the working point is stationary and the
    formula is singular; that raises instead of returning a huge value,
    so sweeps cannot be silently poisoned.
    """
    slope = dmean(at) if dmean is not None else (mean(at + FD_STEP) - mean(at - FD_STEP)) / (2 * FD_STEP)
    if abs(slope) < floor:
        raise StationaryPointError(
            f"|d<O>/dx| = {abs(slope):.2e} < {floor:.0e} at x = {at}"
        )
    return abs(spread(at)) / abs(slope)


# ---------------------------------------------------------------------------
# protocols


class Protocol:
    """Common estimation-protocol surface.

    A protocol prepares a parameter-dependent probe state, names the
    observable read out on it, and knows its analytic fringe: mean(x),
    single-shot spread(x), the derivative dmean(x), and the inverse of
    the mean curve on the principal branch.
    """

    name: str = ""
    photons_per_trial: int = 1

    def state(self, x: float) -> StateVector:
        raise NotImplementedError

    @property
    def observable(self) -> Observable:
        raise NotImplementedError

    def mean(self, x: float) -> float:
        raise NotImplementedError

    def dmean(self, x: float) -> float:
        raise NotImplementedError

    def spread(self, x: float) -> float:
        raise NotImplementedError

    def invert_mean(self, m: float) -> tuple[float, bool]:
        raise NotImplementedError

    def analytic_uncertainty(self, x: float, trials: int = 1) -> float:
        """Error-propagated Delta x after ``trials`` ensemble repetitions."""
        root = math.sqrt(trials)
        return propagate_uncertainty(
            self.mean, lambda t: self.spread(t) / root, x, dmean=self.dmean
        )


def _clamped_arccos(m: float) -> tuple[float, bool]:
    if -1.0 <= m <= 1.0:
        return math.acos(m), False
    return math.acos(max(-1.0, min(1.0, m))), True


class SinglePhotonPhaseProtocol(Protocol):
    """One photon per trial through a balanced interferometer.

    The probe is the upper-branch occupation qubit
    (|0> + e^{i phi}|1>)/sqrt(2) with the sigma_x readout, fringe
    cos(phi).  Repeating N times gives the shot-noise phase uncertainty
    1/sqrt(N): the |sin phi| spread cancels against the slope.
    """

    name = "single-photon-mz"
    photons_per_trial = 1

    def __init__(self, mode: ModeLabel | None = None):
        self._mode = mode if mode is not None else path(0)
        self._space = FockSpace([self._mode], n_max=1)
        self._obs = observable_A(self._space)

    @property
    def space(self) -> FockSpace:
        return self._space

    @property
    def observable(self) -> Observable:
        return self._obs

    def state(self, phi: float) -> StateVector:
        ground = StateVector(
            self._space,
            {
                self._space.basis_state({}): 1 / math.sqrt(2),
                self._space.basis_state({self._mode: 1}): 1 / math.sqrt(2),
            },
        )
        return elements.apply_phase_shift(ground, self._mode, phi)

    def mean(self, phi: float) -> float:
        return math.cos(phi)

    def dmean(self, phi: float) -> float:
        return -math.sin(phi)

    def spread(self, phi: float) -> float:
        return abs(math.sin(phi))

    def invert_mean(self, m: float) -> tuple[float, bool]:
        return _clamped_arccos(m)


class NoonPhaseProtocol(Protocol):
    """N entangled photons per trial: (|N,0> + |0,N>)/sqrt(2) probe.

    The phase shifts of the N photons act collectively, so one pass
    imprints e^{i N phi} and the readout fringe is cos(N phi).  The
    single-shot uncertainty 1/N saturates the fundamental bound; the
    fringe period 2 pi / N is the matching super-resolution signature.
    """

    name = "noon"

    def __init__(self, n: int, mode_a: ModeLabel | None = None, mode_b: ModeLabel | None = None):
        if n < 1:
            raise ValueError("need N >= 1")
        self.n = n
        self.photons_per_trial = n
        self._mode_a = mode_a if mode_a is not None else path(0)
        self._mode_b = mode_b if mode_b is not None else path(1)
        self._space = FockSpace([self._mode_a, self._mode_b], n_max=n)
        self._obs = observable_B(self._space, self._mode_a, self._mode_b, n)

    @property
    def space(self) -> FockSpace:
        return self._space

    @property
    def observable(self) -> Observable:
        return self._obs

    def state(self, phi: float) -> StateVector:
        probe = sources.noon_state(self._space, self._mode_a, self._mode_b, self.n)
        return elements.apply_phase_shift(probe, self._mode_a, phi)

    def mean(self, phi: float) -> float:
        return math.cos(self.n * phi)

    def dmean(self, phi: float) -> float:
        return -self.n * math.sin(self.n * phi)

    def spread(self, phi: float) -> float:
        return abs(math.sin(self.n * phi))

    def invert_mean(self, m: float) -> tuple[float, bool]:
        phi, clamped = _clamped_arccos(m)
        return phi / self.n, clamped


class AngularDisplacementProtocol(Protocol):
    """Charge +/-l entangled pair through a prism interferometer.

    The apparatus: the pair enters the two input ports of a balanced
    interferometer whose upper arm holds a Dove prism rotated by theta
    and whose lower arm holds the reference reflection.  Both arms flip
    the topological charge; the prism adds e^{i 2 l theta} per photon.
    With the pair prepared with a relative pi between its two charge
    assignments (the convention under which this element model gives the
    ideal fringe), the opposite-charge coincidence rate is
    cos^2(2 l theta), oscillating 2l times faster than an intensity
    fringe and with visibility 1, beyond the classical 71% bound.

    ``n_photons`` generalizes analytically to the N-photon two-branch
    probe with fringe cos^2(N l theta) and Delta theta = 1/(2 N l); the
    element-level simulation backs the pair case n_photons = 2.
    """

    name = "angular"

    def __init__(self, l: int, n_photons: int = 2):
        if l == 0:
            raise ValueError("need l != 0")
        if n_photons < 1:
            raise ValueError("need n_photons >= 1")
        self.l = abs(l)
        self.n_photons = n_photons
        self.photons_per_trial = n_photons
        self._space = sources.spdc_space(self.l, n_max=2)
        self._obs = observable_R(self._space, self.l)

    @property
    def space(self) -> FockSpace:
        return self._space

    @property
    def observable(self) -> Observable:
        return self._obs

    def input_state(self) -> StateVector:
        spectrum = sources.SpdcOamSpectrum.filtered_pair(self.l, relative_phase=math.pi)
        return sources.spdc_oam_pair(self._space, spectrum)

    def state(self, theta: float) -> StateVector:
        if self.n_photons != 2:
            raise NotImplementedError(
                "element-level simulation covers the two-photon pair; "
                "higher photon numbers are analytic"
            )
        upper = [oam(self.l, 0), oam(-self.l, 0)]
        lower = [oam(self.l, 1), oam(-self.l, 1)]
        st = self.input_state()
        for m in (self.l, -self.l):
            st = elements.apply_beam_splitter(st, oam(m, 0), oam(m, 1))
        st = elements.apply_dove_prism(st, upper, theta)
        st = elements.apply_mirror(st, lower)
        for m in (self.l, -self.l):
            st = elements.apply_beam_splitter(st, oam(m, 0), oam(m, 1))
        return st

    def mean(self, theta: float) -> float:
        return math.cos(self.n_photons * self.l * theta) ** 2

    def dmean(self, theta: float) -> float:
        nl = self.n_photons * self.l
        return -nl * math.sin(2 * nl * theta)

    def spread(self, theta: float) -> float:
        return 0.5 * abs(math.sin(2 * self.n_photons * self.l * theta))

    def invert_mean(self, m: float) -> tuple[float, bool]:
        arg = 2.0 * m - 1.0
        clamped = not (-1.0 <= arg <= 1.0)
        arg = max(-1.0, min(1.0, arg))
        return math.acos(arg) / (2 * self.n_photons * self.l), clamped


def angular_sql_uncertainty(l: int, n_photons: int) -> float:
    """Shot-noise angular bound 1/(2 sqrt(N) l) for N independent photons."""
    proto = AngularDisplacementProtocol(l, n_photons=1)
    theta = math.pi / (8 * abs(l))
    return proto.analytic_uncertainty(theta, trials=n_photons)


# ---------------------------------------------------------------------------
# Monte Carlo sampling


def _sample_run(
    protocol: Protocol,
    evals: np.ndarray,
    probs: np.ndarray,
    trials: int,
    rng: np.random.Generator,
) -> tuple[float, float, bool]:
    outcomes = rng.choice(evals, size=trials, p=probs)
    m = float(outcomes.mean())
    estimate, clamped = protocol.invert_mean(m)
    sample_std = float(outcomes.std(ddof=1)) if trials > 1 else 0.0
    return estimate, sample_std, clamped


def run_monte_carlo(
    protocol: Protocol,
    true_value: float,
    trials: int,
    seed: int,
    repetitions: int = 1,
) -> EstimationResult:
    """Projective-measurement sampling of a protocol at a fixed truth.

    Each repetition draws ``trials`` outcomes from the Born probabilities
    of the protocol observable in the protocol state, inverts the sample
    mean through the fringe (principal branch), and reports:

    * estimate: mean of the per-repetition estimates;
    * uncertainty: standard deviation across repetitions when there are
      several (ensemble spread), otherwise the within-run spread of the
      mean propagated through the fringe slope.

    Out-of-domain sample means are clamped and flagged.  Repetition
    seeds are spawned from the root seed, so results do not depend on
    evaluation order.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    if repetitions < 1:
        raise ValueError("need repetitions >= 1")
    evals, probs = protocol.observable.eigensystem(protocol.state(true_value))
    children = np.random.SeedSequence(seed).spawn(repetitions)
    estimates = np.empty(repetitions)
    stds = np.empty(repetitions)
    clamped_any = False
    for r in range(repetitions):
        rng = np.random.default_rng(children[r])
        estimates[r], stds[r], c = _sample_run(protocol, evals, probs, trials, rng)
        clamped_any = clamped_any or c
    estimate = float(estimates.mean())
    if repetitions > 1:
        uncertainty = float(estimates.std(ddof=1))
    elif stds[0] == 0.0:
        # eigenstate: every outcome identical, the estimate is exact
        uncertainty = 0.0
    else:
        slope = abs(protocol.dmean(estimate))
        if slope < DERIVATIVE_FLOOR:
            raise StationaryPointError(f"estimate {estimate} sits on a stationary point")
        uncertainty = (stds[0] / math.sqrt(trials)) / slope
    return EstimationResult(
        estimate=estimate,
        uncertainty=uncertainty,
        resources=trials * protocol.photons_per_trial,
        method="monte-carlo",
        seed=seed,
        clamped=clamped_any,
    )


def scaling_experiment(
    family: str,
    n_grid: Sequence[int],
    repetitions: int,
    seed: int,
    working_point: float | None = None,
    shots_per_estimate: int = 256,
) -> ScalingFit:
    """Empirical uncertainty against resources, fitted log-log.

    ``independent-photons``: each grid entry N is the trial count of the
    single-photon protocol; one estimate per repetition uses N shots.
    The fitted slope approaches -1/2 (shot noise).  The default working
    point pi/2 sits at the fringe's steepest, best-conditioned spot.

    ``noon``: each grid entry is the photon number N of the entangled
    probe, read out with a fixed number of shots per estimate; the
    per-estimate uncertainty is 1/(N sqrt(shots)), so the slope against
    N approaches -1 (the entangled bound).  The default working point
    0.4 keeps N * phi inside the principal branch for N <= 5.

    Outcome sampling reduces to binomial draws on the two-valued
    observables, so the sweep is vectorized; per-N seeds are spawned
    from the root seed.
    """
    grid = [int(n) for n in n_grid]
    if any(n < 1 for n in grid):
        raise DegenerateGridError("resource counts must be >= 1")
    children = np.random.SeedSequence(seed).spawn(len(grid))
    points = []
    if family == "independent-photons":
        if working_point is None:
            working_point = math.pi / 2
        proto = SinglePhotonPhaseProtocol()
        p = 0.5 * (1.0 + proto.mean(working_point))
        for n, child in zip(grid, children):
            rng = np.random.default_rng(child)
            ks = rng.binomial(n, p, size=repetitions)
            means = 2.0 * ks / n - 1.0
            phis = np.arccos(np.clip(means, -1.0, 1.0))
            points.append((n, float(phis.std(ddof=1))))
    elif family == "noon":
        if working_point is None:
            working_point = 0.4
        for n, child in zip(grid, children):
            proto = NoonPhaseProtocol(n)
            p = 0.5 * (1.0 + proto.mean(working_point))
            rng = np.random.default_rng(child)
            ks = rng.binomial(shots_per_estimate, p, size=repetitions)
            means = 2.0 * ks / shots_per_estimate - 1.0
            phis = np.arccos(np.clip(means, -1.0, 1.0)) / n
            points.append((n, float(phis.std(ddof=1))))
    else:
        raise ValueError(f"unknown protocol family {family!r}")
    return fit_loglog(points)


# ---------------------------------------------------------------------------
# Ramsey frequency readout


def ramsey_fringe(omega: float, t: float) -> float:
    """<A> for a two-level atom after free evolution: cos(omega t).

    The pulse-interrogation sequence maps onto the balanced
    interferometer with phi = omega t, so the fringe is read out from
    the same occupation qubit, here on an atomic-level mode.
    """
    if t <= 0:
        raise ValueError("free-evolution time must be positive")
    space = FockSpace([level(0)], n_max=1)
    st = StateVector(
        space,
        {
            space.basis_state({}): 1 / math.sqrt(2),
            space.basis_state({level(0): 1}): 1 / math.sqrt(2),
        },
    )
    st = elements.apply_phase_shift(st, level(0), omega * t)
    return expectation(st, observable_A(space))


def ramsey_frequency_estimate(
    omega: float,
    t: float,
    atoms: int = 1,
    trials: int = 1,
    seed: int | None = None,
    method: str = "analytic",
) -> EstimationResult:
    """Transition-frequency estimate from interrogation time t.

    Delegates to the phase machinery with phi = omega t and divides the
    phase uncertainty by t: one entangled bunch of N atoms reaches
    Delta omega = 1/(N t), and doubling t halves Delta omega at fixed N.
    """
    if t <= 0:
        raise ValueError("free-evolution time must be positive")
    if atoms < 1:
        raise ValueError("need atoms >= 1")
    proto: Protocol
    proto = NoonPhaseProtocol(atoms) if atoms > 1 else SinglePhotonPhaseProtocol(level(0))
    phi = omega * t
    if method == "analytic":
        dphi = proto.analytic_uncertainty(phi, trials=trials)
        return EstimationResult(
            estimate=omega,
            uncertainty=dphi / t,
            resources=atoms * trials,
            method="analytic",
        )
    if method == "monte-carlo":
        if seed is None:
            raise ValueError("stochastic estimation needs an explicit seed")
        res = run_monte_carlo(proto, phi, trials, seed)
        return EstimationResult(
            estimate=res.estimate / t,
            uncertainty=res.uncertainty / t,
            resources=res.resources,
            method="monte-carlo",
            seed=seed,
            clamped=res.clamped,
        )
    raise ValueError(f"unknown method {method!r}")
