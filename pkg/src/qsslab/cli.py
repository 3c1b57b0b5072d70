"""Command-line interface: certify nonce sets, synthesize attacks, run
simulations and merge reports.

All randomness descends from one CLI-level seed (``--seed``, falling back
to the QSSLAB_SEED environment variable, then 0): round r of a simulation
uses the generator seeded with ``[seed, r]``.  Report timestamps honor
SOURCE_DATE_EPOCH so identical inputs, seed and version produce
byte-identical output files.

Exit codes: 0 success / all certifications pass, 1 certification failure,
2 validation error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, adversary, analysis
from .errors import CertificationError, QsslabError, ValidationError
from .nonces import NonceSet, SECRETS, resolve_nonce_source
from .protocol import (
    EAVESDROPPER_DETECTED,
    RETIRED,
    ROUND_DROPPED,
    RoundConfig,
    outcome_distribution,
    run_rounds,
)

EXIT_OK = 0
EXIT_CERTIFICATION = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _default_seed() -> int:
    return int(os.environ.get("QSSLAB_SEED", "0"))


def build_manifest(command: str, nonce_source: str, seed: int,
                   rounds: int, mode_prior: float) -> dict:
    return {
        "command": command,
        "nonce_source": nonce_source,
        "seed": seed,
        "rounds": rounds,
        "mode_prior": mode_prior,
        "tool_version": __version__,
        "timestamp": _timestamp(),
    }


def manifest_hash(manifest: dict) -> str:
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# certify

def cmd_certify(args) -> int:
    nonce_set = resolve_nonce_source(args.nonces)
    report = analysis.certify(nonce_set, tol=args.tol)
    text = analysis.format_certification(nonce_set, report)
    sys.stdout.write(text)
    if args.out:
        manifest = build_manifest("certify", args.nonces, _default_seed(), 0, 0.5)
        _write_json(args.out, {
            "kind": "certification",
            "manifest": manifest,
            "certification": report.to_json_dict(),
        })
        txt_path = args.out + ".txt" if not args.out.endswith(".json") \
            else args.out[: -len(".json")] + ".txt"
        with open(txt_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK if report.all_passed else EXIT_CERTIFICATION


# ---------------------------------------------------------------------------
# attack

def cmd_attack(args) -> int:
    nonce_set = resolve_nonce_source(args.nonces)
    alpha = None
    if args.alpha:
        with open(args.alpha, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
                alpha = np.array([complex(re, im) for re, im in raw], dtype=complex)
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise ValidationError(f"{args.alpha}: expected JSON [[re,im] x4]: {exc}") from exc
    plan = adversary.synthesize_plan(nonce_set, args.policy, alpha=alpha)
    overlaps = adversary.plan_overlaps(plan, nonce_set)
    for (i, s), val in sorted(overlaps.items()):
        sys.stdout.write(f"nonce {i + 1}  secret {s}  achieved overlap {val:.12f}\n")
    avg = sum(overlaps.values()) / len(overlaps)
    sys.stdout.write(f"average achieved overlap: {avg:.12f}\n")
    adversary.save_plan(plan, args.out)
    sys.stdout.write(f"plan written to {args.out}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate

def _parse_strategy(selector: str, nonce_set: NonceSet):
    if selector == "honest":
        return adversary.honest_strategy()
    if selector == "imr-guess" or selector.startswith("imr-guess:"):
        if ":" in selector:
            raw = selector.split(":", 1)[1]
            try:
                guess = int(raw) - 1
            except ValueError:
                raise ValidationError(f"imr-guess index must be an integer, got {raw!r}") from None
            if not 0 <= guess < len(nonce_set):
                raise ValidationError(
                    f"imr-guess index {raw} out of range 1..{len(nonce_set)}")
            return adversary.imr_guess_strategy(guess, nonce_set)
        return adversary.imr_guess_strategy("uniform-random", nonce_set)
    if selector.startswith("ifr:"):
        plan = adversary.load_plan(selector.split(":", 1)[1])
        return adversary.ifr_strategy(plan, nonce_set)
    raise ValidationError(
        f"unknown strategy {selector!r}; use honest, imr-guess[:j] or ifr:<plan path>")


def cmd_simulate(args) -> int:
    nonce_set = resolve_nonce_source(args.nonces)
    strategy = _parse_strategy(args.strategy, nonce_set)
    seed = args.seed if args.seed is not None else _default_seed()
    manifest = build_manifest("simulate", args.nonces, seed, args.rounds, args.mode_prior)

    exact = outcome_distribution(nonce_set, strategy, mode_prior=args.mode_prior)
    result = {
        "nonce_set": nonce_set.name,
        "strategy": strategy.name,
        "mode_prior": args.mode_prior,
        "exact_p_detect": exact.p_detect,
        "exact_p_eve_knows_secret": exact.p_eve_knows_secret,
        "exact_verdict_probs": exact.verdict_probs,
    }
    if args.exact:
        result.update({"rounds": 0, "p_detect": exact.p_detect, "stderr": None,
                       "p_eve_knows_secret": exact.p_eve_knows_secret})
    else:
        cfg = RoundConfig(nonce_set=nonce_set, rng_seed=seed, mode_prior=args.mode_prior)
        counts = {RETIRED: 0, ROUND_DROPPED: 0, EAVESDROPPER_DETECTED: 0}
        eve_hits = 0
        sink = open(args.transcripts, "w", encoding="utf-8") if args.transcripts else None
        try:
            for t in run_rounds(cfg, strategy, args.rounds):
                counts[t.verdict] += 1
                if t.eve_learned_secret == t.s:
                    eve_hits += 1
                if sink is not None:
                    sink.write(json.dumps(t.to_json_dict(), sort_keys=True) + "\n")
        finally:
            if sink is not None:
                sink.close()
        p = counts[EAVESDROPPER_DETECTED] / args.rounds
        result.update({
            "rounds": args.rounds,
            "seed": seed,
            "p_detect": p,
            "stderr": float(np.sqrt(p * (1.0 - p) / args.rounds)),
            "p_eve_knows_secret": eve_hits / args.rounds,
            "verdict_counts": counts,
        })
    sys.stdout.write(
        f"{nonce_set.name} / {strategy.name}: p_detect={result['p_detect']:.6g} "
        f"(exact {exact.p_detect:.6g}), eve_knows_secret={result['p_eve_knows_secret']:.6g}\n"
    )
    if args.out:
        _write_json(args.out, {"kind": "simulation", "manifest": manifest,
                               "simulation": result})
    return EXIT_OK


# ---------------------------------------------------------------------------
# report

_REPORT_COLUMNS = (
    "nonce_set", "strategy", "rounds", "p_detect", "exact_p_detect",
    "p_eve_knows_secret", "recoverable", "secret", "imr_protected",
    "r_00", "r_01", "r_10", "r_11", "detection_floor", "detection_ceiling",
)


def _report_row(payload: dict) -> dict:
    row = {c: "" for c in _REPORT_COLUMNS}
    if payload.get("kind") == "certification":
        cert = payload["certification"]
        row.update({
            "nonce_set": cert["nonce_set_name"],
            "strategy": "-",
            "recoverable": cert["recoverable"],
            "secret": cert["secret"],
            "imr_protected": cert["imr_protected"],
            "r_00": cert["r_of_s"]["00"],
            "r_01": cert["r_of_s"]["01"],
            "r_10": cert["r_of_s"]["10"],
            "r_11": cert["r_of_s"]["11"],
        })
        if cert.get("detection_bounds"):
            row["detection_floor"] = cert["detection_bounds"]["floor"]
            row["detection_ceiling"] = cert["detection_bounds"]["ceiling"]
    elif payload.get("kind") == "simulation":
        sim = payload["simulation"]
        row.update({
            "nonce_set": sim["nonce_set"],
            "strategy": sim["strategy"],
            "rounds": sim["rounds"],
            "p_detect": sim["p_detect"],
            "exact_p_detect": sim["exact_p_detect"],
            "p_eve_knows_secret": sim["p_eve_knows_secret"],
        })
    else:
        raise ValidationError("unrecognized report kind")
    return row


def cmd_report(args) -> int:
    rows = []
    seen = set()
    for path in args.inputs:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc.msg}") from exc
        if "manifest" not in payload or "kind" not in payload:
            raise ValidationError(f"{path}: not a qsslab report (missing manifest/kind)")
        digest = manifest_hash(payload["manifest"])
        if digest in seen:
            continue
        seen.add(digest)
        try:
            rows.append(_report_row(payload))
        except (KeyError, ValidationError) as exc:
            raise ValidationError(f"{path}: schema mismatch: {exc}") from exc
    rows.sort(key=lambda r: (str(r["nonce_set"]), str(r["strategy"])))
    _write_json(args.out + ".json", {"columns": list(_REPORT_COLUMNS), "rows": rows})
    with open(args.out + ".csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    sys.stdout.write(f"merged {len(rows)} report(s) into {args.out}.json / {args.out}.csv\n")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsslab",
        description="Simulator and security analysis for a Grover-based "
                    "(2,2) quantum secret-sharing protocol.",
    )
    parser.add_argument("--version", action="version", version=f"qsslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify a nonce set (recoverability, secrecy, IMR)")
    p.add_argument("--nonces", required=True,
                   help="builtin:<hsu-I|proposed-J> or a nonce-set JSON path")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="write the JSON report here (plus a .txt table)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("attack", help="synthesize an intercept-fake-resend plan")
    p.add_argument("--nonces", required=True)
    p.add_argument("--policy", required=True,
                   choices=[adversary.POLICY_TARGET_SECRET, adversary.POLICY_TARGET_01])
    p.add_argument("--alpha", help="optional JSON file [[re,im] x4] forcing the fake state")
    p.add_argument("--out", required=True, help="plan JSON output path")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="run protocol rounds against a strategy")
    p.add_argument("--nonces", required=True)
    p.add_argument("--strategy", required=True,
                   help="honest | imr-guess[:j] (1-based) | ifr:<plan path>")
    p.add_argument("--rounds", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None,
                   help="defaults to QSSLAB_SEED, then 0")
    p.add_argument("--mode-prior", type=float, default=0.5, dest="mode_prior")
    p.add_argument("--exact", action="store_true",
                   help="exact enumeration instead of Monte Carlo")
    p.add_argument("--transcripts", help="write JSON-lines transcripts here")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="merge report files into a comparison table")
    p.add_argument("--inputs", nargs="*", default=[])
    p.add_argument("--out", required=True, help="output path stem (.json/.csv appended)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CertificationError as exc:
        sys.stderr.write(f"certification failure: {exc}\n")
        return EXIT_CERTIFICATION
    except (ValidationError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except QsslabError as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
