"""Nonce sets, Grover reflection operators and share-state generation.

Two nonce sets ship with the package:

* ``hsu-I``      -- the 16 products |x>|y> with x, y drawn from
                    {+, -, +i, -i}, in lexicographic factor order.
* ``proposed-J`` -- four entangled nonces designed so that every share
                    state reduces, on Bob's side, to one of the four
                    equatorial single-qubit states.

Custom sets of any size load from JSON: ``{"name": str, "states":
[[[re, im] x4], ...]}`` with amplitudes in basis order 00, 01, 10, 11.
Nonce indices are 0-based in code and 1-based in files and reports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .linalg import tensor, validate_state

SECRETS = ("00", "01", "10", "11")

_S2 = 1.0 / np.sqrt(2.0)
PLUS = np.array([1, 1], dtype=complex) * _S2
MINUS = np.array([1, -1], dtype=complex) * _S2
PLUS_I = np.array([1, 1j], dtype=complex) * _S2
MINUS_I = np.array([1, -1j], dtype=complex) * _S2

SINGLE_QUBIT_STATES = {"+": PLUS, "-": MINUS, "+i": PLUS_I, "-i": MINUS_I}

BUILTIN_NAMES = ("hsu-I", "proposed-J")


def basis_state(s: str) -> np.ndarray:
    """Computational-basis two-qubit state |s> for a 2-bit string."""
    validate_secret(s)
    e = np.zeros(4, dtype=complex)
    e[int(s, 2)] = 1.0
    return e


def validate_secret(s) -> str:
    if s not in SECRETS:
        raise ValidationError(f"secret must be one of {SECRETS}, got {s!r}")
    return s


@dataclass(frozen=True, eq=False)
class NonceSet:
    """A named, ordered list of normalized two-qubit nonce states."""

    name: str
    states: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.states) < 1:
            raise ValidationError("a nonce set needs at least one state")
        checked = tuple(
            validate_state(v, dim=4, what=f"nonce state {i + 1}")
            for i, v in enumerate(self.states)
        )
        object.__setattr__(self, "states", checked)

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def reflections(self) -> tuple:
        """Cached reflection operators U_psi, one per nonce."""
        return tuple(reflection(v) for v in self.states)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "states": [[[z.real, z.imag] for z in v] for v in self.states],
        }


def reflection(about) -> np.ndarray:
    """Grover reflection I - 2|v><v| about a normalized state.

    Hermitian, involutory, determinant -1: it negates |v> and fixes the
    orthogonal complement.
    """
    v = np.asarray(about, dtype=complex)
    return np.eye(v.shape[0], dtype=complex) - 2.0 * np.outer(v, v.conj())


def share_state(nonce, s: str) -> np.ndarray:
    """Share state U_s |nonce>: the basis reflection flips one amplitude."""
    validate_secret(s)
    out = np.array(nonce, dtype=complex)
    out[int(s, 2)] *= -1.0
    return out


def _hsu_original() -> NonceSet:
    order = (PLUS, MINUS, PLUS_I, MINUS_I)
    states = tuple(tensor(x, y) for x in order for y in order)
    return NonceSet(name="hsu-I", states=states)


def _proposed_j() -> NonceSet:
    states = (
        0.5 * np.array([1, 1, -1, 1], dtype=complex),
        0.5 * np.array([1, -1, 1, 1], dtype=complex),
        0.5 * np.array([1, 1j, -1j, -1], dtype=complex),
        0.5 * np.array([1, -1j, 1j, -1], dtype=complex),
    )
    return NonceSet(name="proposed-J", states=states)


def builtin_nonce_set(name: str) -> NonceSet:
    """Look up a builtin nonce set by name ('hsu-I' or 'proposed-J')."""
    if name == "hsu-I":
        return _hsu_original()
    if name == "proposed-J":
        return _proposed_j()
    raise KeyError(f"unknown builtin nonce set {name!r}; choices: {BUILTIN_NAMES}")


def nonce_set_from_json_dict(data: dict) -> NonceSet:
    if not isinstance(data, dict) or "name" not in data or "states" not in data:
        raise ValidationError('nonce-set JSON must have "name" and "states" keys')
    states = []
    for i, raw in enumerate(data["states"]):
        try:
            amps = np.array([complex(re, im) for re, im in raw], dtype=complex)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"state {i + 1}: amplitudes must be [re, im] pairs") from exc
        if amps.shape != (4,):
            raise ValidationError(f"state {i + 1}: expected 4 amplitudes, got {amps.shape[0]}")
        states.append(validate_state(amps, dim=4, what=f"state {i + 1}"))
    return NonceSet(name=str(data["name"]), states=tuple(states))


def load_nonce_set(path) -> NonceSet:
    """Load a nonce set from a JSON file; see the module docstring for format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return nonce_set_from_json_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def resolve_nonce_source(source: str) -> NonceSet:
    """Resolve 'builtin:<name>' or a file path to a NonceSet."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        try:
            return builtin_nonce_set(name)
        except KeyError as exc:
            raise ValidationError(str(exc)) from exc
    return load_nonce_set(source)
