"""Certification of nonce sets and computation of the attack-fidelity
ceiling R(s).

A usable nonce set must be *recoverable* (every |<s|psi>| equals 1/2, so
the honest parties regenerate s with certainty), *secret* (Eve's reduced
share averaged over secrets is maximally mixed for every nonce) and
*IMR-protected* (the grand average over nonces and secrets is maximally
mixed).  R(s) is the largest average fidelity any single-qubit fake share
can achieve against Bob's true reduced shares; it upper-bounds the
probability that an intercept-fake-resend attack forces s to be recovered,
and the bound is attained constructively via Uhlmann's theorem (see
``adversary.synthesize_plan``).

Operator deviations are reported in entrywise max-norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import (
    TOL,
    bloch_from_density,
    density_from_bloch,
    fidelity,
    is_pure,
    partial_trace_E,
    pure_density,
    validate_state,
)
from .nonces import NonceSet, SECRETS, basis_state, reflection, share_state

_GRID_STEP = 0.01
_grid_cache: dict = {}


# ---------------------------------------------------------------------------
# Recoverability (including arbitrary two-qubit quantum secrets)

@dataclass
class PairOverlap:
    nonce_index: int            # 1-based
    secret: str
    overlap: float              # |<s|psi>|
    recovery_probability: float


@dataclass
class RecoverabilityReport:
    pairs: list
    passed: bool
    worst_overlap_deviation: float
    worst_recovery_deviation: float


def _secret_state(secret) -> tuple[str, np.ndarray]:
    if isinstance(secret, str):
        return secret, basis_state(secret)
    vec = validate_state(secret, dim=4, what="quantum secret")
    return "custom", vec


def check_recoverability(nonce_set: NonceSet, secrets=None, tol: float = TOL) -> RecoverabilityReport:
    """Check |<s|psi>| = 1/2 for every pair, and verify the recovery chain.

    ``secrets`` may mix 2-bit strings and normalized two-qubit state
    vectors; it defaults to the four classical secrets.  The recovery
    probability |<s| U_psi U_s |psi>|^2 is computed directly as well, so
    the report witnesses both sides of the equivalence.
    """
    if secrets is None:
        secrets = SECRETS
    pairs = []
    worst_overlap = 0.0
    worst_recovery = 0.0
    for label_secret in secrets:
        label, s_vec = _secret_state(label_secret)
        u_s = reflection(s_vec)
        for i, psi in enumerate(nonce_set.states):
            overlap = float(abs(np.vdot(s_vec, psi)))
            recovered = reflection(psi) @ (u_s @ psi)
            prob = float(abs(np.vdot(s_vec, recovered)) ** 2)
            pairs.append(PairOverlap(i + 1, label, overlap, prob))
            worst_overlap = max(worst_overlap, abs(overlap - 0.5))
            worst_recovery = max(worst_recovery, abs(prob - 1.0))
    return RecoverabilityReport(
        pairs=pairs,
        passed=bool(worst_overlap < tol),
        worst_overlap_deviation=worst_overlap,
        worst_recovery_deviation=worst_recovery,
    )


def recovery_amplitude(overlap_sq: float) -> float:
    """Recovery probability as a function of x = |<s|psi>|^2: x (3 - 4x)^2.

    Equals the exact |<s| U_psi U_s |psi>|^2 for any pure psi with that
    overlap; it reaches 1 only at x = 1/4 and at the degenerate x = 1.
    """
    x = float(overlap_sq)
    if not 0.0 <= x <= 1.0 + TOL:
        raise ValidationError(f"overlap_sq must lie in [0, 1], got {x}")
    return x * (3.0 - 4.0 * x) ** 2


# ---------------------------------------------------------------------------
# Secrecy and intercept-measure-resend protection

def _max_norm(delta: np.ndarray) -> float:
    return float(np.abs(delta).max())


def check_secrecy(nonce_set: NonceSet) -> dict:
    """Max-norm deviation of (1/4) sum_s |psi_{i,s}><psi_{i,s}| from I/4, per nonce.

    Keys are 1-based nonce indices.
    """
    eye4 = np.eye(4, dtype=complex) / 4.0
    out = {}
    for i, psi in enumerate(nonce_set.states):
        avg = sum(pure_density(share_state(psi, s)) for s in SECRETS) / 4.0
        out[i + 1] = _max_norm(avg - eye4)
    return out


def check_imr(nonce_set: NonceSet) -> float:
    """Max-norm deviation of the grand share average from I/4."""
    eye4 = np.eye(4, dtype=complex) / 4.0
    k = len(nonce_set)
    avg = sum(
        pure_density(share_state(psi, s))
        for psi in nonce_set.states
        for s in SECRETS
    ) / (4.0 * k)
    return _max_norm(avg - eye4)


# ---------------------------------------------------------------------------
# R(s): the optimal average fidelity of a single-qubit fake share

def _bloch_grid() -> tuple[np.ndarray, np.ndarray]:
    """Dense lexicographic grid over the Bloch ball (step 0.01), cached."""
    if "pts" not in _grid_cache:
        xs = np.linspace(-1.0, 1.0, int(round(2.0 / _GRID_STEP)) + 1)
        pts = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
        inside = (pts * pts).sum(axis=1) <= 1.0 + 1e-12
        pts = pts[inside]
        _grid_cache["pts"] = pts
        _grid_cache["root"] = np.sqrt(np.maximum(1.0 - (pts * pts).sum(axis=1), 0.0))
    return _grid_cache["pts"], _grid_cache["root"]


def _objective_coeffs(sigmas) -> tuple[np.ndarray, float]:
    """Average qubit fidelity against ``sigmas`` at Bloch point p reads
    1/2 + (p . b_mean)/2 + c_mean * sqrt(1 - |p|^2)."""
    blochs = np.array([bloch_from_density(s) for s in sigmas])
    dets = np.array([max(np.linalg.det(np.asarray(s)).real, 0.0) for s in sigmas])
    return blochs.mean(axis=0), float(np.sqrt(dets).mean())


def _objective_at(points: np.ndarray, b_mean: np.ndarray, c_mean: float) -> np.ndarray:
    norms_sq = (points * points).sum(axis=-1)
    root = np.sqrt(np.maximum(1.0 - norms_sq, 0.0))
    return 0.5 + 0.5 * (points @ b_mean) + c_mean * root


def _project_to_ball(points: np.ndarray) -> np.ndarray:
    norms = np.sqrt((points * points).sum(axis=-1, keepdims=True))
    return points / np.maximum(norms, 1.0)


def _grid_maximize(sigmas) -> tuple[float, np.ndarray]:
    b_mean, c_mean = _objective_coeffs(sigmas)
    pts, root = _bloch_grid()
    values = 0.5 + 0.5 * (pts @ b_mean) + c_mean * root
    best = int(values.argmax())
    p = pts[best]
    value = float(values[best])
    # Pattern search: poll a local grid at a fixed step until no move
    # improves the (concave) objective, then shrink the step.  Unlike plain
    # step-halving this does not bound the total travel, which matters when
    # the optimum sits on the sphere and the coarse argmax is off in angle.
    step = _GRID_STEP
    offsets = np.stack(
        np.meshgrid(*([np.arange(-2, 3)] * 3), indexing="ij"), axis=-1
    ).reshape(-1, 3).astype(float)
    while step > 1e-9:
        for _ in range(10_000):
            local = _project_to_ball(p + offsets * step)
            vals = _objective_at(local, b_mean, c_mean)
            j = int(vals.argmax())
            if vals[j] <= value:
                break
            p, value = local[j], float(vals[j])
        step /= 2.0
    center = float(0.5 + c_mean)
    if center >= value - TOL:
        # Tie policy: prefer the maximally mixed state.
        return center, np.zeros(3)
    return value, p


def max_average_fidelity(sigmas, method: str = "auto") -> tuple[float, np.ndarray]:
    """Maximize (1/k) sum_i F(sigma_i, rho) over single-qubit states rho.

    Returns (value, optimizer density matrix).  With all-pure ``sigmas``
    the analytic fast path applies: the average fidelity is
    (1 + p . b_mean)/2, maximized at the unit vector along the mean Bloch
    vector, or at the maximally mixed state when the mean vanishes.  The
    general path scans a dense Bloch-ball grid (step 0.01) and refines
    locally; both paths agree on pure inputs.
    """
    sigmas = [np.asarray(s, dtype=complex) for s in sigmas]
    if not sigmas:
        raise ValidationError("need at least one state")
    all_pure = all(is_pure(s) for s in sigmas)
    if method not in ("auto", "fast", "grid"):
        raise ValidationError(f"unknown method {method!r}")
    if method == "fast" and not all_pure:
        raise ValidationError("fast path requires pure states")
    if method in ("fast", "auto") and all_pure:
        b_mean = np.array([bloch_from_density(s) for s in sigmas]).mean(axis=0)
        norm = float(np.linalg.norm(b_mean))
        if norm < 1e-12:
            return 0.5, density_from_bloch(np.zeros(3))
        return 0.5 * (1.0 + norm), density_from_bloch(b_mean / norm)
    value, p = _grid_maximize(sigmas)
    return value, density_from_bloch(p)


def bob_reduced_shares(nonce_set: NonceSet, s: str) -> list:
    """Bob-side reduced density matrices of every share state for secret s."""
    return [
        partial_trace_E(pure_density(share_state(psi, s)))
        for psi in nonce_set.states
    ]


def r_of_s(nonce_set: NonceSet, s: str, method: str = "auto") -> tuple[float, np.ndarray]:
    """R(s) and an attaining fake share for the given nonce set."""
    return max_average_fidelity(bob_reduced_shares(nonce_set, s), method=method)


# ---------------------------------------------------------------------------
# The Bloch-mean construction behind the universal detection ceiling

def bloch_mean_bound(states) -> float:
    """Average fidelity of pure single-qubit states against their Bloch mean.

    Requires pure inputs; mixed collections are served by
    ``max_average_fidelity``.  Note the value is (1 + |mean|^2)/2, which can
    drop to 1/2 for balanced collections; the quantity the mean provably
    keeps above 3/4 is the Bloch-distance surrogate, see
    ``bloch_mean_distance_bound``.
    """
    blochs = _pure_blochs(states)
    mean = blochs.mean(axis=0)
    gamma = density_from_bloch(mean)
    return float(np.mean([fidelity(np.asarray(s, dtype=complex), gamma) for s in states]))


def bloch_mean_distance_bound(states) -> float:
    """(1/k) sum_i (1 - |b_i - mean|^2 / 4) = 3/4 + |mean|^2 / 4 >= 3/4.

    This is the Euclidean bound the Bloch mean attains: no other point in
    the ball gives a smaller average squared distance to the input vectors.
    """
    blochs = _pure_blochs(states)
    mean = blochs.mean(axis=0)
    sq = ((blochs - mean) ** 2).sum(axis=1)
    return float(np.mean(1.0 - 0.25 * sq))


def _pure_blochs(states) -> np.ndarray:
    mats = [np.asarray(s, dtype=complex) for s in states]
    if not mats:
        raise ValidationError("need at least one state")
    for s in mats:
        if s.shape != (2, 2):
            raise ValidationError("expected single-qubit density matrices")
        if not is_pure(s):
            raise ValidationError("bloch_mean_bound requires pure states")
    return np.array([bloch_from_density(s) for s in mats])


# ---------------------------------------------------------------------------
# Detection bounds and the certification report

def detection_bounds(nonce_set: NonceSet, mode_prior: float = 0.5) -> dict:
    """Exact detection floor/ceiling over the shipped attack policies.

    ``ceiling`` is 1 - (probability of a SECRET-mode round) times the
    probability that the fixed-target plan forces an opposite-bit outcome;
    ``floor`` is the smallest exact detection probability among the shipped
    plan policies.  Requires a recoverable nonce set.
    """
    from . import adversary
    from .protocol import SECRET, outcome_distribution

    per_policy = {}
    success01 = 0.0
    for policy in (adversary.POLICY_TARGET_SECRET, adversary.POLICY_TARGET_01):
        plan = adversary.synthesize_plan(nonce_set, policy)
        strat = adversary.ifr_strategy(plan, nonce_set)
        dist = outcome_distribution(nonce_set, strat, mode_prior=mode_prior)
        per_policy[policy] = dist.p_detect
        if policy == adversary.POLICY_TARGET_01 and mode_prior > 0.0:
            mass = sum(
                p for (mode, s, i, b), p in dist.table.items()
                if mode == SECRET and b in ("01", "10")
            )
            success01 = mass / mode_prior
    return {
        "floor": min(per_policy.values()),
        "ceiling": 1.0 - mode_prior * success01,
        "per_policy": per_policy,
    }


@dataclass
class CertificationReport:
    """Certification verdicts and deviations for one nonce set."""

    nonce_set_name: str
    recoverable: bool
    recoverable_deviation: float
    secret: bool
    secrecy_deviation: float
    secrecy_per_nonce: dict = field(repr=False)
    imr_protected: bool
    imr_deviation: float
    r_of_s: dict
    detection_bounds: dict | None

    @property
    def all_passed(self) -> bool:
        return self.recoverable and self.secret and self.imr_protected

    def to_json_dict(self) -> dict:
        return {
            "nonce_set_name": self.nonce_set_name,
            "recoverable": self.recoverable,
            "recoverable_deviation": self.recoverable_deviation,
            "secret": self.secret,
            "secrecy_deviation": self.secrecy_deviation,
            "secrecy_per_nonce": {str(k): v for k, v in self.secrecy_per_nonce.items()},
            "imr_protected": self.imr_protected,
            "imr_deviation": self.imr_deviation,
            "r_of_s": dict(self.r_of_s),
            "detection_bounds": self.detection_bounds,
            "all_passed": self.all_passed,
        }


def certify(nonce_set: NonceSet, tol: float = TOL) -> CertificationReport:
    """Run every certification; detection bounds only for recoverable sets."""
    recov = check_recoverability(nonce_set, tol=tol)
    per_nonce = check_secrecy(nonce_set)
    secrecy_dev = max(per_nonce.values())
    imr_dev = check_imr(nonce_set)
    r_values = {s: r_of_s(nonce_set, s)[0] for s in SECRETS}
    bounds = detection_bounds(nonce_set) if recov.passed else None
    return CertificationReport(
        nonce_set_name=nonce_set.name,
        recoverable=recov.passed,
        recoverable_deviation=recov.worst_overlap_deviation,
        secret=bool(secrecy_dev < tol),
        secrecy_deviation=secrecy_dev,
        secrecy_per_nonce=per_nonce,
        imr_protected=bool(imr_dev < tol),
        imr_deviation=imr_dev,
        r_of_s=r_values,
        detection_bounds=bounds,
    )


# ---------------------------------------------------------------------------
# Plain-text rendering in the layout of the share/reduced-share tables

_NAMED_QUBITS = {
    "|+>": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "|->": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "|+i>": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "|-i>": np.array([1, -1j], dtype=complex) / np.sqrt(2),
    "|0>": np.array([1, 0], dtype=complex),
    "|1>": np.array([0, 1], dtype=complex),
}


def _label_qubit_state(rho: np.ndarray) -> str:
    for label, vec in _NAMED_QUBITS.items():
        if abs(np.vdot(vec, rho @ vec).real - 1.0) < 1e-6:
            return label + "<" + label[1:-1] + "|"
    x, y, z = bloch_from_density(rho)
    return f"bloch({x:+.3f},{y:+.3f},{z:+.3f})"


def format_certification(nonce_set: NonceSet, report: CertificationReport) -> str:
    """Human-readable summary plus a secrets-by-nonces reduced-share table."""
    lines = [f"nonce set: {report.nonce_set_name} (k={len(nonce_set)})"]
    for label, ok, dev in (
        ("recoverable", report.recoverable, report.recoverable_deviation),
        ("secret", report.secret, report.secrecy_deviation),
        ("imr-protected", report.imr_protected, report.imr_deviation),
    ):
        lines.append(f"  {label:<14} {'PASS' if ok else 'FAIL'}   max deviation {dev:.3e}")
    lines.append("  R(s): " + "  ".join(f"{s}={report.r_of_s[s]:.9f}" for s in SECRETS))
    if report.detection_bounds is not None:
        b = report.detection_bounds
        lines.append(f"  detection floor={b['floor']:.9f}  ceiling={b['ceiling']:.9f}")
    lines.append("")
    lines.append("Bob-side reduced share states (rows: s, columns: nonces)")
    width = 22
    header = " " * 6 + "".join(f"psi_{i + 1:<2}".ljust(width) for i in range(len(nonce_set)))
    lines.append(header)
    for s in SECRETS:
        cells = []
        for psi in nonce_set.states:
            rho = partial_trace_E(pure_density(share_state(psi, s)))
            cells.append(_label_qubit_state(rho).ljust(width))
        lines.append(f"s={s}  " + "".join(cells))
    return "\n".join(lines) + "\n"
