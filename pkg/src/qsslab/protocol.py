"""State machine for the four-stage (2,2) secret-sharing protocol.

A round runs as follows.  Stage I: the dealer draws a mode (SECRET with
probability ``mode_prior``), derives the 2-bit string s (01/10 encodes the
secret bit in SECRET mode, 00/11 is drawn uniformly in DETECT mode), draws
a nonce uniformly, prepares U_s|psi_i> and sends Eve the first qubit and
Bob the second; the adversary's interception hook sees the joint in-flight
state and returns whatever joint state actually reaches Stage III.
Stage II: the nonce index is announced; the adversary may return one
single-qubit unitary which is applied to the Eve-side factor.  Stage III:
the parties apply the reflection about the announced nonce and measure
both qubits in the standard basis, yielding b.  Stage IV reconciles:

* b in {01, 10} and mode SECRET: the parties retire with secret bit b_E;
* b in {01, 10} and mode DETECT: the parties announce nothing, so the
  dealer declares an eavesdropper;
* b in {00, 11}: the parties announce b; in DETECT mode a match with s
  drops the round and a mismatch flags an eavesdropper; in SECRET mode
  any announcement flags an eavesdropper.

All per-round randomness comes from one generator seeded with
``[rng_seed, round_index]``, consumed in a fixed order (mode, secret draw,
nonce draw, strategy randomness, measurement), so transcripts are
bit-reproducible and rounds are independent across seeds, which makes the
engine safe to fan out over parallel workers with one strategy instance
per worker.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProtocolError, ValidationError
from .nonces import NonceSet, SECRETS, share_state, validate_secret

SECRET = "SECRET"
DETECT = "DETECT"
MODES = (SECRET, DETECT)

RETIRED = "RETIRED"
ROUND_DROPPED = "ROUND_DROPPED"
EAVESDROPPER_DETECTED = "EAVESDROPPER_DETECTED"
VERDICTS = (RETIRED, ROUND_DROPPED, EAVESDROPPER_DETECTED)

BASIS_OUTCOMES = ("00", "01", "10", "11")

_STATE_NORM_TOL = 1e-6


def stage_iv_verdict(mode: str, s: str, b: str) -> tuple[str, int | None]:
    """Reconciliation verdict and (for RETIRED) the recovered secret bit.

    Pure function of (mode, s, b), total over all 2 x 4 x 4 combinations.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    validate_secret(s)
    validate_secret(b)
    if b in ("01", "10"):
        if mode == SECRET:
            return RETIRED, int(b[0])
        # DETECT mode: the parties retired silently, the dealer expected an
        # announcement and therefore flags an eavesdropper.
        return EAVESDROPPER_DETECTED, None
    if mode == DETECT and b == s:
        return ROUND_DROPPED, None
    return EAVESDROPPER_DETECTED, None


@dataclass(frozen=True)
class RoundConfig:
    """Per-run protocol parameters."""

    nonce_set: NonceSet
    secret_bit: int | None = None
    rng_seed: int = 0
    mode_prior: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.mode_prior <= 1.0:
            raise ValidationError(f"mode_prior must be in [0, 1], got {self.mode_prior}")
        if self.secret_bit not in (None, 0, 1):
            raise ValidationError(f"secret_bit must be 0, 1 or None, got {self.secret_bit}")


@dataclass
class RoundTranscript:
    """Full record of one protocol round; nonce indices are 1-based.

    ``forwarded_to_bob`` holds the joint two-qubit state left in play after
    interception; Bob's qubit is the second tensor factor.
    """

    round_index: int
    mode: str
    s: str
    nonce_index: int
    announced_nonce: int
    forwarded_to_bob: np.ndarray = field(repr=False)
    eve_learned_secret: str | None
    stage_two_unitary_applied: bool
    measured_b: str
    verdict: str
    recovered_secret_bit: int | None

    def to_json_dict(self) -> dict:
        return {
            "round": self.round_index,
            "mode": self.mode,
            "s": self.s,
            "nonce_index": self.nonce_index,
            "announced_nonce": self.announced_nonce,
            "forwarded_to_bob": [[z.real, z.imag] for z in self.forwarded_to_bob],
            "eve_learned_secret": self.eve_learned_secret,
            "stage_two_unitary_applied": self.stage_two_unitary_applied,
            "measured_b": self.measured_b,
            "verdict": self.verdict,
            "recovered_secret_bit": self.recovered_secret_bit,
        }


def _draw_secret(cfg: RoundConfig, mode: str, rng: np.random.Generator) -> str:
    if mode == SECRET:
        bit = cfg.secret_bit
        if bit is None:
            bit = int(rng.integers(0, 2))
        return "01" if bit == 0 else "10"
    return "00" if int(rng.integers(0, 2)) == 0 else "11"


def _measure(state: np.ndarray, rng: np.random.Generator) -> str:
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    u = rng.random()
    acc = 0.0
    outcome = 3
    for idx in range(4):
        acc += probs[idx]
        if u < acc:
            outcome = idx
            break
    return BASIS_OUTCOMES[outcome]


def run_round(cfg: RoundConfig, strategy, round_index: int = 0) -> RoundTranscript:
    """Execute one protocol round against an adversary strategy."""
    rng = np.random.default_rng([cfg.rng_seed, round_index])
    nonce_set = cfg.nonce_set
    k = len(nonce_set)

    mode = SECRET if rng.random() < cfg.mode_prior else DETECT
    s = _draw_secret(cfg, mode, rng)
    i = int(rng.integers(0, k))

    share = share_state(nonce_set.states[i], s)
    strategy.begin_round()
    joint = np.asarray(strategy.intercept(share, rng), dtype=complex)
    if joint.shape != (4,) or abs(np.linalg.norm(joint) - 1.0) > _STATE_NORM_TOL:
        raise ProtocolError(
            f"strategy {getattr(strategy, 'name', strategy)!r} returned a "
            "non-normalized or mis-shaped state at interception"
        )

    v = strategy.nonce_announced(i, rng)
    applied = v is not None
    if applied:
        v = np.asarray(v, dtype=complex)
        if v.shape != (2, 2):
            raise ProtocolError("stage-II unitary must be 2x2")
        joint = np.kron(v, np.eye(2, dtype=complex)) @ joint
        if abs(np.linalg.norm(joint) - 1.0) > _STATE_NORM_TOL:
            raise ProtocolError("stage-II operator broke normalization")

    recovered = nonce_set.reflections[i] @ joint
    b = _measure(recovered, rng)
    verdict, bit = stage_iv_verdict(mode, s, b)

    return RoundTranscript(
        round_index=round_index,
        mode=mode,
        s=s,
        nonce_index=i + 1,
        announced_nonce=i + 1,
        forwarded_to_bob=joint,
        eve_learned_secret=strategy.learned_secret,
        stage_two_unitary_applied=applied,
        measured_b=b,
        verdict=verdict,
        recovered_secret_bit=bit,
    )


def run_rounds(cfg: RoundConfig, strategy, rounds: int):
    """Yield transcripts for rounds 0..rounds-1 in order."""
    for r in range(rounds):
        yield run_round(cfg, strategy, round_index=r)


def estimate_detection(cfg: RoundConfig, strategy, rounds: int) -> tuple[float, float]:
    """Monte Carlo detection probability and its binomial standard error."""
    if rounds < 1:
        raise ValidationError("rounds must be >= 1")
    hits = 0
    for t in run_rounds(cfg, strategy, rounds):
        if t.verdict == EAVESDROPPER_DETECTED:
            hits += 1
    p = hits / rounds
    stderr = float(np.sqrt(p * (1.0 - p) / rounds))
    return p, stderr


@dataclass
class ExactDistribution:
    """Exact outcome table and the security margins derived from it.

    ``table`` maps (mode, s, nonce_index, b) -> probability with 1-based
    nonce indices; entries sum to 1.
    """

    table: dict
    p_detect: float
    p_eve_knows_secret: float
    verdict_probs: dict

    def detection_by_mode(self) -> dict:
        out = {SECRET: 0.0, DETECT: 0.0}
        mass = {SECRET: 0.0, DETECT: 0.0}
        for (mode, s, i, b), p in self.table.items():
            mass[mode] += p
            if stage_iv_verdict(mode, s, b)[0] == EAVESDROPPER_DETECTED:
                out[mode] += p
        return {m: (out[m] / mass[m] if mass[m] > 0 else 0.0) for m in MODES}


def outcome_distribution(nonce_set: NonceSet, strategy, mode_prior: float = 0.5) -> ExactDistribution:
    """Exact verdict statistics by enumerating every discrete draw.

    The strategy must expose ``exact_branches(nonce_set, i, s)`` returning
    ``(probability, joint_state_entering_stage_III, learned_secret)``
    triples; all strategies in this package do.  Within SECRET mode the
    dealer's secret bit is averaged uniformly, matching a RoundConfig with
    ``secret_bit=None``.
    """
    if not 0.0 <= mode_prior <= 1.0:
        raise ValidationError(f"mode_prior must be in [0, 1], got {mode_prior}")
    k = len(nonce_set)
    table: dict = {}
    p_detect = 0.0
    p_eve = 0.0
    verdict_probs = {v: 0.0 for v in VERDICTS}
    for mode, p_mode in ((SECRET, mode_prior), (DETECT, 1.0 - mode_prior)):
        if p_mode == 0.0:
            continue
        secrets = ("01", "10") if mode == SECRET else ("00", "11")
        for s in secrets:
            for i in range(k):
                base = p_mode * 0.5 / k
                for p_branch, joint, learned in strategy.exact_branches(nonce_set, i, s):
                    if p_branch <= 0.0:
                        continue
                    out = nonce_set.reflections[i] @ np.asarray(joint, dtype=complex)
                    probs = np.abs(out) ** 2
                    if learned == s:
                        p_eve += base * p_branch
                    for bi, pb in enumerate(probs):
                        if pb <= 0.0:
                            continue
                        b = BASIS_OUTCOMES[bi]
                        w = base * p_branch * float(pb)
                        key = (mode, s, i + 1, b)
                        table[key] = table.get(key, 0.0) + w
                        verdict = stage_iv_verdict(mode, s, b)[0]
                        verdict_probs[verdict] += w
                        if verdict == EAVESDROPPER_DETECTED:
                            p_detect += w
    return ExactDistribution(
        table=table,
        p_detect=p_detect,
        p_eve_knows_secret=p_eve,
        verdict_probs=verdict_probs,
    )
