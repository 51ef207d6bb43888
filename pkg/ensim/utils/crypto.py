"""
Hashing utilities for identifier derivation.
Uses the SHA-256 primitive from `cryptography` truncated to the identifier length.
"""

from cryptography.hazmat.primitives import hashes


DIGEST_LENGTH = 32


def sha256(data: bytes) -> bytes:
    """
    Compute the SHA-256 digest of a byte string.

    Args:
        data: Bytes to hash

    Returns:
        32-byte digest
    """
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()


def truncated_sha256(data: bytes, length: int = 16) -> bytes:
    """
    Compute SHA-256 and keep the first `length` bytes.

    Args:
        data: Bytes to hash
        length: Number of leading digest bytes to return (1..32)

    Returns:
        Truncated digest

    Raises:
        ValueError: If length is outside 1..32
    """
    if not 1 <= length <= DIGEST_LENGTH:
        raise ValueError(f"Invalid digest length: {length}. Must be between 1 and {DIGEST_LENGTH}")

    return sha256(data)[:length]
