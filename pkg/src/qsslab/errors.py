"""Exception types shared across the package."""


class QsslabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QsslabError):
    """Malformed or non-physical input: bad dimensions, non-normalized
    states, non-unitary matrices, unparsable files, mismatched plans."""


class UnsupportedCaseError(QsslabError):
    """A computation that is deliberately not implemented (e.g. fidelity
    of two mixed two-qubit states)."""


class CertificationError(QsslabError):
    """A nonce set failed a certification required by the requested
    operation (e.g. attack synthesis on a non-recoverable set)."""


class ProtocolError(QsslabError):
    """An adversary strategy violated the protocol engine's contract."""


class PlanIncompleteError(ValidationError):
    """An attack plan is missing a unitary for a (nonce, secret) pair."""
