"""Adversary strategies: honest baseline, intercept-measure-resend with a
nonce guess, and intercept-fake-resend driven by attack plans.

Each strategy implements three hooks used by the protocol engine:

* ``intercept(share, rng)``      -- receives the dealer's in-flight joint
  state (Eve's qubit first) and returns the joint state that survives to
  Stage III;
* ``nonce_announced(i, rng)``    -- Stage II; may return one single-qubit
  unitary to apply to the Eve-side factor;
* ``exact_branches(nonce_set, i, s)`` -- the same behaviour expressed as a
  finite list of ``(probability, joint_state, learned_secret)`` branches,
  consumed by the exact enumeration engine.

``learned_secret`` is whatever 2-bit string Eve has reconstructed this
round, or None.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import CertificationError, PlanIncompleteError, ValidationError
from .linalg import (
    canonical_purification,
    max_overlap_unitary,
    partial_trace_E,
    pure_density,
    state_fidelity,
    validate_state,
    validate_unitary,
)
from .nonces import NonceSet, SECRETS, reflection, share_state, validate_secret

POLICY_TARGET_SECRET = "target-secret"
POLICY_TARGET_01 = "target-01"
POLICY_CUSTOM = "custom"
POLICIES = (POLICY_TARGET_SECRET, POLICY_TARGET_01, POLICY_CUSTOM)

_EYE2 = np.eye(2, dtype=complex)


def _measure_secret(state: np.ndarray, u_psi: np.ndarray, rng) -> str:
    """Apply a reflection to a joint state and measure both qubits."""
    amps = u_psi @ state
    probs = np.abs(amps) ** 2
    probs = probs / probs.sum()
    u = rng.random()
    acc = 0.0
    idx = 3
    for j in range(4):
        acc += probs[j]
        if u < acc:
            idx = j
            break
    return SECRETS[idx]


class HonestStrategy:
    """No tampering: forwards Bob's qubit unchanged, learns nothing."""

    name = "honest"

    def __init__(self):
        self.learned_secret = None

    def begin_round(self):
        self.learned_secret = None

    def intercept(self, share, rng):
        return share

    def nonce_announced(self, i, rng):
        return None

    def exact_branches(self, nonce_set, i, s):
        return [(1.0, share_state(nonce_set.states[i], s), None)]


class ImrGuessStrategy:
    """Intercept-measure-resend based on a guess of the nonce.

    Eve intercepts both qubits, applies the reflection about her guessed
    nonce, measures to obtain s', and resends the reconstruction
    U_{s'}|psi_guess>, keeping its Eve-side qubit for Stage III.  The guess
    is a fixed 0-based index or "uniform-random" for a fresh draw per
    round.
    """

    def __init__(self, guess: int | str = "uniform-random", nonce_set: NonceSet | None = None):
        if guess != "uniform-random" and not isinstance(guess, (int, np.integer)):
            raise ValidationError(f"guess must be an index or 'uniform-random', got {guess!r}")
        self.guess = guess
        self.nonce_set = None
        self.learned_secret = None
        self._round_guess = None
        self.name = f"imr-guess:{guess if guess == 'uniform-random' else int(guess) + 1}"
        if nonce_set is not None:
            self._bind(nonce_set)

    def _bind(self, nonce_set: NonceSet):
        if self.nonce_set is None:
            self.nonce_set = nonce_set
        if self.guess != "uniform-random" and not 0 <= self.guess < len(self.nonce_set):
            raise ValidationError(
                f"guess index {self.guess} out of range for nonce set of size {len(self.nonce_set)}"
            )

    def begin_round(self):
        self.learned_secret = None
        self._round_guess = None

    def intercept(self, share, rng):
        if self.nonce_set is None:
            raise ValidationError("ImrGuessStrategy needs a nonce set; pass one at construction")
        j = self.guess
        if j == "uniform-random":
            j = int(rng.integers(0, len(self.nonce_set)))
        self._round_guess = j
        s_prime = _measure_secret(share, self.nonce_set.reflections[j], rng)
        self.learned_secret = s_prime
        return share_state(self.nonce_set.states[j], s_prime)

    def nonce_announced(self, i, rng):
        return None

    def exact_branches(self, nonce_set, i, s):
        self._bind(nonce_set)
        share = share_state(nonce_set.states[i], s)
        guesses = (
            [(1.0, self.guess)]
            if self.guess != "uniform-random"
            else [(1.0 / len(nonce_set), j) for j in range(len(nonce_set))]
        )
        branches = []
        for pj, j in guesses:
            probs = np.abs(nonce_set.reflections[j] @ share) ** 2
            for idx, p in enumerate(probs):
                if p <= 1e-30:
                    continue
                s_prime = SECRETS[idx]
                branches.append((pj * float(p), share_state(nonce_set.states[j], s_prime), s_prime))
        return branches


@dataclass(eq=False)
class AttackPlan:
    """Eve's committed fake state plus her table of steering unitaries.

    ``v_table`` maps (0-based nonce index, computed secret) to the 2x2
    unitary Eve applies to her half of ``alpha`` once she has reconstructed
    the secret at Stage II.
    """

    alpha: np.ndarray = field(repr=False)
    v_table: dict = field(repr=False)
    policy: str = POLICY_TARGET_SECRET

    def __post_init__(self):
        self.alpha = validate_state(self.alpha, dim=4, what="alpha")
        if self.policy not in POLICIES:
            raise ValidationError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        checked = {}
        for key, v in self.v_table.items():
            i, s = key
            validate_secret(s)
            checked[(int(i), s)] = validate_unitary(v, dim=2)
        self.v_table = checked

    def lookup(self, i: int, s: str) -> np.ndarray:
        try:
            return self.v_table[(i, s)]
        except KeyError:
            raise PlanIncompleteError(
                f"attack plan has no unitary for nonce {i + 1}, secret {s}"
            ) from None

    def validate_for(self, nonce_set: NonceSet) -> None:
        missing = [
            (i + 1, s)
            for i in range(len(nonce_set))
            for s in SECRETS
            if (i, s) not in self.v_table
        ]
        if missing:
            raise ValidationError(
                f"attack plan does not cover nonce set of size {len(nonce_set)}; "
                f"missing entries for {missing[:4]}{'...' if len(missing) > 4 else ''}"
            )

    def to_json_dict(self) -> dict:
        return {
            "alpha": [[z.real, z.imag] for z in self.alpha],
            "policy": self.policy,
            "v_table": {
                f"{i + 1},{s}": [[[z.real, z.imag] for z in row] for row in v]
                for (i, s), v in sorted(self.v_table.items())
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AttackPlan":
        try:
            alpha = np.array([complex(re, im) for re, im in data["alpha"]], dtype=complex)
            policy = data["policy"]
            v_table = {}
            for key, rows in data["v_table"].items():
                i_str, s = key.split(",")
                v_table[(int(i_str) - 1, s)] = np.array(
                    [[complex(re, im) for re, im in row] for row in rows], dtype=complex
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed attack-plan JSON: {exc}") from exc
        return cls(alpha=alpha, v_table=v_table, policy=policy)


def save_plan(plan: AttackPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_plan(path) -> AttackPlan:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return AttackPlan.from_json_dict(data)


class IfrStrategy:
    """Intercept-fake-resend: retain the dealer's pair, share a committed
    fake state, then steer it with the plan's unitary once the nonce is out.

    At Stage II Eve runs the recovery procedure on the retained pair; for a
    recoverable nonce set the measurement yields the dealer's s with
    certainty, so ``learned_secret`` always equals s there.
    """

    def __init__(self, plan: AttackPlan, nonce_set: NonceSet | None = None):
        self.plan = plan
        self.learned_secret = None
        self._retained = None
        # The engine announces only an index, so the strategy keeps a
        # reference to the (public) nonce set it is playing against.
        self._nonce_set = None
        self.name = f"ifr:{plan.policy}"
        if nonce_set is not None:
            self.bind(nonce_set)

    def bind(self, nonce_set: NonceSet) -> "IfrStrategy":
        self.plan.validate_for(nonce_set)
        self._nonce_set = nonce_set
        return self

    def begin_round(self):
        self.learned_secret = None
        self._retained = None

    def intercept(self, share, rng):
        self._retained = np.array(share, dtype=complex)
        return self.plan.alpha

    def nonce_announced(self, i, rng):
        if self._retained is None:
            raise ValidationError("nonce announced before interception")
        if self._nonce_set is None:
            raise ValidationError("IfrStrategy must be bound to a nonce set before simulation")
        u_psi = self._nonce_set.reflections[i]
        self.learned_secret = _measure_secret(self._retained, u_psi, rng)
        return self.plan.lookup(i, self.learned_secret)

    def exact_branches(self, nonce_set, i, s):
        share = share_state(nonce_set.states[i], s)
        probs = np.abs(nonce_set.reflections[i] @ share) ** 2
        branches = []
        for idx, p in enumerate(probs):
            if p <= 1e-30:
                continue
            s_prime = SECRETS[idx]
            v = self.plan.lookup(i, s_prime)
            branches.append((float(p), np.kron(v, _EYE2) @ self.plan.alpha, s_prime))
        return branches


def honest_strategy() -> HonestStrategy:
    return HonestStrategy()


def imr_guess_strategy(guess: int | str = "uniform-random",
                       nonce_set: NonceSet | None = None) -> ImrGuessStrategy:
    return ImrGuessStrategy(guess, nonce_set)


def ifr_strategy(plan: AttackPlan, nonce_set: NonceSet | None = None) -> IfrStrategy:
    return IfrStrategy(plan, nonce_set)


def policy_target(policy: str, s: str, target_map: dict | None = None) -> str:
    """The 2-bit string a plan steers toward, given the secret Eve learned."""
    if policy == POLICY_TARGET_01:
        return "01"
    if policy == POLICY_TARGET_SECRET:
        return s
    if policy == POLICY_CUSTOM:
        if target_map is None or s not in target_map:
            raise ValidationError(f"custom policy needs a target map covering secret {s}")
        return validate_secret(target_map[s])
    raise ValidationError(f"unknown policy {policy!r}")


def _optimizer_state(nonce_set: NonceSet, policy: str, target_map: dict | None) -> np.ndarray:
    """The single-qubit state whose purification Eve commits to.

    For a fixed-target policy this is the maximizer of the average fidelity
    against Bob's reduced shares for that target.  When the target depends
    on the learned secret, the per-secret maximizers are used if they all
    agree (they do for both builtin sets, where every one is I/2);
    otherwise the maximizer of the average over all (nonce, secret) pairs
    is committed, since alpha must be fixed before Eve learns anything.
    """
    targets = {policy_target(policy, s, target_map) for s in SECRETS}
    per_target = {}
    for t in targets:
        sigmas = [partial_trace_E(pure_density(share_state(psi, t))) for psi in nonce_set.states]
        _, rho = analysis.max_average_fidelity(sigmas)
        per_target[t] = rho
    rhos = list(per_target.values())
    if all(np.abs(r - rhos[0]).max() < 1e-6 for r in rhos):
        return rhos[0]
    sigmas = [
        partial_trace_E(pure_density(share_state(psi, policy_target(policy, s, target_map))))
        for psi in nonce_set.states
        for s in SECRETS
    ]
    return analysis.max_average_fidelity(sigmas)[1]


def synthesize_plan(nonce_set: NonceSet, policy: str,
                    alpha: np.ndarray | None = None,
                    target_map: dict | None = None) -> AttackPlan:
    """Construct the fidelity-optimal intercept-fake-resend plan.

    Refuses non-recoverable nonce sets.  The committed state is the
    canonical purification of the optimal single-qubit fake share, unless
    an explicit ``alpha`` (any normalized two-qubit state) is forced; each
    v_table entry is the Uhlmann-optimal steering unitary toward the
    policy's target share state.
    """
    recov = analysis.check_recoverability(nonce_set)
    if not recov.passed:
        raise CertificationError(
            "nonce set is not recoverable (worst overlap deviation "
            f"{recov.worst_overlap_deviation:.3g}); attack synthesis assumes recoverability"
        )
    if alpha is None:
        alpha = canonical_purification(_optimizer_state(nonce_set, policy, target_map))
    else:
        alpha = validate_state(alpha, dim=4, what="alpha")
    v_table = {}
    for i, psi in enumerate(nonce_set.states):
        for s in SECRETS:
            target = share_state(psi, policy_target(policy, s, target_map))
            v, _ = max_overlap_unitary(alpha, target)
            v_table[(i, s)] = v
    return AttackPlan(alpha=alpha, v_table=v_table, policy=policy)


def plan_overlaps(plan: AttackPlan, nonce_set: NonceSet,
                  target_map: dict | None = None) -> dict:
    """Achieved |<psi_{i,target}| (V x I) |alpha>|^2 per (nonce, secret)."""
    out = {}
    for (i, s), v in sorted(plan.v_table.items()):
        target = share_state(nonce_set.states[i], policy_target(plan.policy, s, target_map))
        steered = np.kron(v, _EYE2) @ plan.alpha
        out[(i, s)] = state_fidelity(target, steered)
    return out


def average_recovery(plan: AttackPlan, nonce_set: NonceSet, s: str) -> float:
    """Average over nonces of the probability that Stage III yields s."""
    validate_secret(s)
    k = len(nonce_set)
    total = 0.0
    for i, psi in enumerate(nonce_set.states):
        target = share_state(psi, s)
        steered = np.kron(plan.lookup(i, s), _EYE2) @ plan.alpha
        total += state_fidelity(target, steered)
    return total / k
