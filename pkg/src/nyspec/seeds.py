"""Stable seed derivation for reproducible sweeps."""

import hashlib


def derive_seed(*parts) -> int:
    """Derive a 63-bit seed from a tuple of ints/floats/strings.

    The derivation is a blake2b hash of a canonical text encoding, so it is
    stable across processes, platforms and Python versions. Floats are
    encoded via repr (exact for doubles).
    """
    text = "\x1f".join(_canonical(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _canonical(part) -> str:
    if isinstance(part, bool):
        return f"b:{int(part)}"
    if isinstance(part, int):
        return f"i:{part}"
    if isinstance(part, float):
        return f"f:{part!r}"
    if isinstance(part, str):
        return f"s:{part}"
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")
