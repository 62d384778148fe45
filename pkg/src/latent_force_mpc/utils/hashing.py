"""Content hashes for run artifacts."""

import hashlib
from pathlib import Path
from typing import Union


def calculate_sha256(content: Union[bytes, str]) -> str:
    """SHA-256 hex digest of bytes, or of text encoded as UTF-8."""
    if isinstance(content, str):
        content = content.encode("utf-8")
    return hashlib.sha256(content).hexdigest()


def calculate_file_sha256(file_path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file's contents.

    Args:
        file_path: Path to file

    Returns:
        Hex digest
    """
    with open(file_path, "rb") as f:
        if hasattr(hashlib, "file_digest"):
            return hashlib.file_digest(f, "sha256").hexdigest()
        # Python < 3.11 fallback: same digest, read in chunks
        digest = hashlib.sha256()
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
        return digest.hexdigest()
