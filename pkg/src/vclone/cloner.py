"""Dual-rail 1->2 qubit cloning on the 4-mode variational device.

Logical frame (0-based mode indices of the 4-mode core):

    input qubit   |0> = mode 1, |1> = mode 2   (photon injected on mode 1)
    ancilla qubit |0> = mode 3, |1> = mode 0   (photon injected on mode 3)
    clone 1       |0> = mode 0, |1> = mode 1
    clone 2       |0> = mode 2, |1> = mode 3

A run prepares the two-photon input, applies the 12-phase variational
mesh, and post-selects on a two-fold coincidence: exactly one photon in
the clone-1 rail pair and one in the clone-2 rail pair.  Clone fidelities
come either from reduced density matrices of the post-selected joint
state, or from the projective measurement stage; both paths agree in the
noiseless simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import FockAmplitudes, PostselectionRule, evolve, postselect
from .mesh import MeshSpec, build_mesh, wrap_phases

#: Optimal symmetric equatorial-cloning fidelity, 1/2 + 1/sqrt(8).
OPTIMAL_EQUATORIAL_FIDELITY = 0.5 + 1.0 / math.sqrt(8.0)

#: Average fidelity of the best measure-and-prepare strategy on the equator.
SEMICLASSICAL_FIDELITY = 0.750

#: Upper bound on simultaneous symmetric cloning fidelity for arbitrary qubits.
UNIVERSAL_BOUND = 5.0 / 6.0

#: Bloch phases of the four equatorial training states (X and Y eigenstates).
TRAINING_PHASES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)

_HERMITIAN_TOL = 1e-8
_EQUATOR_THETA = math.pi / 4


@dataclass(frozen=True)
class QubitState:
    """Pure qubit cos(theta)|0> + sin(theta) e^{i phi}|1> (no half-angles)."""

    theta: float
    phi: float

    def amplitudes(self) -> np.ndarray:
        return np.array(
            [math.cos(self.theta), math.sin(self.theta) * np.exp(1j * self.phi)],
            dtype=complex,
        )

    def projector(self) -> np.ndarray:
        a = self.amplitudes()
        return np.outer(a, a.conj())

    @classmethod
    def equatorial(cls, phi: float) -> "QubitState":
        """State on the Bloch equator: (|0> + e^{i phi}|1>) / sqrt(2)."""
        return cls(theta=_EQUATOR_THETA, phi=phi)

    @classmethod
    def zero(cls) -> "QubitState":
        return cls(theta=0.0, phi=0.0)


@dataclass(frozen=True)
class RailMap:
    """Mode assignment of the four dual-rail roles; (|0> rail, |1> rail) each."""

    clone1_rails: tuple[int, int] = (0, 1)
    clone2_rails: tuple[int, int] = (2, 3)
    input_rails: tuple[int, int] = (1, 2)
    ancilla_rails: tuple[int, int] = (3, 0)

    def __post_init__(self) -> None:
        for rails in (self.clone1_rails, self.clone2_rails, self.input_rails, self.ancilla_rails):
            if rails[0] == rails[1]:
                raise ValueError(f"rail pair {rails} must use distinct modes")
        modes = set(self.clone1_rails) | set(self.clone2_rails)
        modes |= set(self.input_rails) | set(self.ancilla_rails)
        if modes != set(range(4)):
            raise ValueError("rail pairs must jointly cover modes 0..3")

    def input_occupation(self) -> tuple[int, ...]:
        """Two-photon injection pattern: one photon on each |0> injection rail."""
        occ = [0, 0, 0, 0]
        occ[self.input_rails[0]] += 1
        occ[self.ancilla_rails[0]] += 1
        return tuple(occ)

    def coincidence_rule(self) -> PostselectionRule:
        return PostselectionRule.coincidence(self.clone1_rails, self.clone2_rails)

    def swapped_clones(self) -> "RailMap":
        """Exchange the roles of clone 1 and clone 2."""
        return RailMap(
            clone1_rails=self.clone2_rails,
            clone2_rails=self.clone1_rails,
            input_rails=self.input_rails,
            ancilla_rails=self.ancilla_rails,
        )


DEFAULT_RAILS = RailMap()


@dataclass(frozen=True)
class CloningOutcome:
    """Clone fidelities and post-selection probability for one input state."""

    f1: float
    f2: float
    p_post: float


def _embed_pair(block: np.ndarray, rails: tuple[int, int], m: int) -> np.ndarray:
    # Rails are given in logical order (|0> rail first) and need not be
    # adjacent or sorted; scatter the block accordingly.
    u = np.eye(m, dtype=complex)
    idx = np.array(rails)
    u[np.ix_(idx, idx)] = block
    return u


@dataclass(frozen=True)
class PrepPhases:
    """Preparation stage: |0> -> cos(theta)|0> + sin(theta) e^{i phi}|1>."""

    theta: float
    phi: float
    rails: tuple[int, int] = DEFAULT_RAILS.input_rails

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        e = np.exp(1j * self.phi)
        return np.array([[c, -s / e], [s * e, c]], dtype=complex)

    def stage_unitary(self, m: int = 4) -> np.ndarray:
        return _embed_pair(self.rotation(), self.rails, m)


@dataclass(frozen=True)
class MeasPhases:
    """Measurement stage: rotate the target state onto the |0> rail of each clone pair."""

    theta: float
    phi: float
    clone1_rails: tuple[int, int] = DEFAULT_RAILS.clone1_rails
    clone2_rails: tuple[int, int] = DEFAULT_RAILS.clone2_rails

    def rotation(self) -> np.ndarray:
        # Unitary with first row <psi|, so psi maps to the |0> rail.
        c, s = math.cos(self.theta), math.sin(self.theta)
        e = np.exp(1j * self.phi)
        return np.array([[c, s / e], [-s * e, c]], dtype=complex)

    def stage_unitary(self, m: int = 4) -> np.ndarray:
        w = self.rotation()
        return _embed_pair(w, self.clone2_rails, m) @ _embed_pair(w, self.clone1_rails, m)


def prep_phases(psi: QubitState, rails: RailMap = DEFAULT_RAILS) -> PrepPhases:
    """Preparation settings writing psi on the input rails (ancilla untouched)."""
    return PrepPhases(theta=psi.theta, phi=psi.phi, rails=rails.input_rails)


def measurement_phases(psi: QubitState, rails: RailMap = DEFAULT_RAILS) -> MeasPhases:
    """Measurement settings projecting each clone pair onto the psi basis."""
    return MeasPhases(
        theta=psi.theta,
        phi=psi.phi,
        clone1_rails=rails.clone1_rails,
        clone2_rails=rails.clone2_rails,
    )


def _coincidence_patterns(rails: RailMap) -> list[tuple[int, ...]]:
    # Logical order (a, b): a = clone-1 bit, b = clone-2 bit.
    patterns = []
    for a in (0, 1):
        for b in (0, 1):
            occ = [0, 0, 0, 0]
            occ[rails.clone1_rails[a]] += 1
            occ[rails.clone2_rails[b]] += 1
            patterns.append(tuple(occ))
    return patterns


def run_cloner(
    params: np.ndarray | list[float],
    psi: QubitState,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
) -> tuple[FockAmplitudes | None, CloningOutcome]:
    """Evolve the two-photon input and post-select on the coincidence rule.

    Returns the normalized post-selected joint state (None on zero support)
    and the cloning outcome.  Zero-support configurations report
    P_post = 0 with both fidelities 0, keeping cost functions finite.
    """
    spec = spec or MeshSpec.four_mode_core()
    u = build_mesh(spec, params) @ prep_phases(psi, rails).stage_unitary(spec.mode_count)
    state = evolve(rails.input_occupation(), u)
    joint, p_post = postselect(state, rails.coincidence_rule())
    if joint is None:
        return None, CloningOutcome(f1=0.0, f2=0.0, p_post=0.0)
    rho1 = reduced_clone(joint, 1, rails)
    rho2 = reduced_clone(joint, 2, rails)
    return joint, CloningOutcome(
        f1=fidelity(rho1, psi), f2=fidelity(rho2, psi), p_post=p_post
    )


def joint_logical_state(joint: FockAmplitudes, rails: RailMap = DEFAULT_RAILS) -> np.ndarray:
    """Post-selected joint state as a 2x2 amplitude array psi[a, b].

    Index a is the clone-1 logical bit, b the clone-2 bit.  Raises if the
    joint state has support outside the coincidence patterns.
    """
    patterns = _coincidence_patterns(rails)
    amps = np.array([joint.amplitude(p) for p in patterns]).reshape(2, 2)
    support = float(np.sum(np.abs(amps) ** 2))
    if abs(support - joint.total_probability()) > 1e-10:
        raise ValueError("joint state has support outside the coincidence patterns")
    return amps


def reduced_clone(
    joint: FockAmplitudes, which: int, rails: RailMap = DEFAULT_RAILS
) -> np.ndarray:
    """Reduced density matrix of one clone (partial trace over the other)."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    psi2 = joint_logical_state(joint, rails)
    if which == 1:
        return psi2 @ psi2.conj().T
    return psi2.T @ psi2.conj()


def _validate_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("density matrix must be 2x2")
    if np.max(np.abs(rho - rho.conj().T)) > _HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > _HERMITIAN_TOL:
        raise ValueError("density matrix trace is not 1")
    if np.min(np.linalg.eigvalsh(rho)) < -_HERMITIAN_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def fidelity(rho: np.ndarray, psi: QubitState) -> float:
    """Fidelity <psi|rho|psi> of a clone with the pure target state."""
    rho = _validate_density(rho)
    a = psi.amplitudes()
    value = float(np.real(a.conj() @ rho @ a))
    return min(max(value, 0.0), 1.0)


def measurement_path_probabilities(
    params: np.ndarray | list[float],
    psi: QubitState,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
) -> np.ndarray:
    """Coincidence-pattern probabilities with the measurement stage applied.

    Returns the four unnormalized probabilities p[a, b] flattened in logical
    order (00, 01, 10, 11); a or b = 0 means the corresponding clone photon
    exits its success rail.  Their sum is P_post; the remainder to 1 is the
    rejected-event probability.
    """
    spec = spec or MeshSpec.four_mode_core()
    m = spec.mode_count
    u = (
        measurement_phases(psi, rails).stage_unitary(m)
        @ build_mesh(spec, params)
        @ prep_phases(psi, rails).stage_unitary(m)
    )
    state = evolve(rails.input_occupation(), u)
    return np.array([state.probability(p) for p in _coincidence_patterns(rails)])


def measurement_path_outcome(
    params: np.ndarray | list[float],
    psi: QubitState,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
) -> CloningOutcome:
    """Noiseless outcome computed through the measurement stage.

    F_i is the conditional probability that the pair-i photon exits the
    success rail given a coincidence; equals the density-matrix path.
    """
    probs = measurement_path_probabilities(params, psi, spec, rails)
    p_post = float(probs.sum())
    if p_post < 1e-12:
        return CloningOutcome(f1=0.0, f2=0.0, p_post=0.0)
    f1 = float((probs[0] + probs[1]) / p_post)
    f2 = float((probs[0] + probs[2]) / p_post)
    return CloningOutcome(f1=f1, f2=f2, p_post=min(p_post, 1.0))


def _symmetric_terms(f1: float, f2: float) -> float:
    return (1.0 - f1) ** 2 + (1.0 - f2) ** 2 + (f1 - f2) ** 2


def cost_pc(
    params: np.ndarray | list[float],
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
) -> float:
    """Equatorial-cloning cost over the four-phase training set.

    Sum over training phases of (1-F1)^2 + (1-F2)^2 + (F1-F2)^2; the four
    X/Y eigenstates average second moments exactly as the full equator.
    """
    total = 0.0
    for phi in TRAINING_PHASES:
        _, out = run_cloner(params, QubitState.equatorial(phi), spec, rails)
        total += _symmetric_terms(out.f1, out.f2)
    return total


def cost_sd(
    params: np.ndarray | list[float],
    psi_a: QubitState,
    psi_b: QubitState,
    lam: float = 1.0,
    spec: MeshSpec | None = None,
    rails: RailMap = DEFAULT_RAILS,
) -> float:
    """Two-state cloning cost with success-probability regularization.

    Six fidelity terms for the two states plus
    lam * [(1-P_A)^2 + (1-P_B)^2 + (P_A-P_B)^2].
    """
    if lam < 0:
        raise ValueError("regularization weight must be non-negative")
    _, out_a = run_cloner(params, psi_a, spec, rails)
    _, out_b = run_cloner(params, psi_b, spec, rails)
    total = _symmetric_terms(out_a.f1, out_a.f2) + _symmetric_terms(out_b.f1, out_b.f2)
    total += lam * _symmetric_terms(out_a.p_post, out_b.p_post)
    return total


def equatorial_fidelity_profile(rho: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """<psi_phi|rho|psi_phi> for equatorial states, vectorized over phi."""
    rho = np.asarray(rho, dtype=complex)
    return 0.5 * np.real(rho[0, 0] + rho[1, 1] + 2.0 * rho[0, 1] * np.exp(1j * phis))


def design_identity_check(
    rho: np.ndarray, quadrature_points: int = 10_000
) -> tuple[float, float]:
    """Compare the equator average of (1-F_phi)^2 with its 4-point average.

    For a fixed clone state the four X/Y eigenstates form an exact planar
    2-design, so both sides agree up to quadrature error.
    """
    if quadrature_points < 100:
        raise ValueError("need at least 100 quadrature points")
    rho = _validate_density(rho)
    phis = np.linspace(0.0, 2.0 * math.pi, quadrature_points + 1)
    integrand = (1.0 - equatorial_fidelity_profile(rho, phis)) ** 2
    lhs = float(np.trapezoid(integrand, phis) / (2.0 * math.pi))
    four = (1.0 - equatorial_fidelity_profile(rho, np.array(TRAINING_PHASES))) ** 2
    rhs = float(np.mean(four))
    return lhs, rhs


def semiclassical_baseline() -> float:
    """Average fidelity of the optimal equatorial measure-and-prepare strategy."""
    return SEMICLASSICAL_FIDELITY


def semiclassical_monte_carlo(trials: int, seed: int = 0) -> float:
    """Monte-Carlo estimate of the measure-and-prepare average fidelity.

    Each trial draws a random equatorial input and measurement basis,
    samples the outcome, and prepares copies in the measured basis state.
    """
    rng = np.random.default_rng(seed)
    phi_in = rng.uniform(0.0, 2.0 * math.pi, trials)
    phi_basis = rng.uniform(0.0, 2.0 * math.pi, trials)
    # P(outcome along the basis state) for equatorial input and basis.
    p = np.cos((phi_in - phi_basis) / 2.0) ** 2
    outcome_along = rng.random(trials) < p
    # Copies are the basis state or its antipode; fidelity with the input.
    fid_along = p
    fid_against = 1.0 - p
    return float(np.mean(np.where(outcome_along, fid_along, fid_against)))


def fixed_basis_measure_and_prepare(phi_in: float, phi_basis: float) -> float:
    """Expected copy fidelity when measuring along one fixed equatorial basis."""
    p = math.cos((phi_in - phi_basis) / 2.0) ** 2
    return p * p + (1.0 - p) * (1.0 - p)


#: Default state pairs for two-state cloning runs, as (psi_A, psi_B).
#: Chosen to span equatorial, real-amplitude and off-equator pairs with
#: non-orthogonal overlaps; angles in radians.
DEFAULT_SD_PAIRS: tuple[tuple[QubitState, QubitState], ...] = (
    (QubitState(math.pi / 4, 0.0), QubitState(math.pi / 4, math.pi / 2)),
    (QubitState(math.pi / 8, 0.0), QubitState(3 * math.pi / 8, 0.0)),
    (QubitState(math.pi / 8, 0.0), QubitState(math.pi / 8, math.pi)),
    (QubitState(math.pi / 6, math.pi / 4), QubitState(math.pi / 3, 5 * math.pi / 4)),
)


def wrap_params(params: np.ndarray | list[float]) -> np.ndarray:
    """Reduce a phase vector into the fundamental torus cell [0, 2*pi)^d."""
    return wrap_phases(params)
