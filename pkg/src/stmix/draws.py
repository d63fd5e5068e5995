"""Posterior draw storage with a deterministic, checksummed binary format.

Layout of a draws file::

    bytes 0..7    magic b"STMXDR01" (format version is part of the magic)
    bytes 8..15   little-endian uint64 header length H
    bytes 16..    UTF-8 JSON header (sorted keys): metadata plus an array
                  manifest of (name, dtype, shape, offset, nbytes)
    ...           raw little-endian array payloads, C order, in manifest order
    last 32       SHA-256 of everything before it

No timestamps are embedded anywhere, so identical draws serialize to
byte-identical files.  Truncated or corrupted files are rejected on load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataValidationError

MAGIC = b"STMXDR01"
_HASH_BYTES = 32


@dataclass(eq=False)
class PosteriorDraws:
    """Retained MCMC draws, stacked along the first axis, plus run metadata.

    ``arrays`` maps parameter names to arrays whose leading dimension is the
    number of retained draws:

        beta (R, p), sigma2 (R,), alpha (R, M, p), rho (R, M), tau2 (R, M),
        gamma (R, M), rho0 (R,), tau02 (R,), delta (R, N), theta (R, M, N, T)

    ``tau2`` entries are AR(1) innovation variances; the matching marginal
    field variance is ``tau2 / (1 - gamma**2)``.  ``meta`` carries the chain
    configuration (iterations, burn-in, thinning, seed, acceptance rates,
    shapes, time-block structure).
    """

    arrays: dict
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        first = next(iter(self.arrays.values()))
        return first.shape[0]

    def __len__(self) -> int:
        return self.n_draws

    def state_at(self, r: int):
        """Reconstruct the r-th draw as a ParamState."""
        from .sampler import ParamState

        a = self.arrays
        return ParamState(
            beta=a["beta"][r].copy(),
            sigma2=float(a["sigma2"][r]),
            alpha=a["alpha"][r].copy(),
            rho=a["rho"][r].copy(),
            tau2=a["tau2"][r].copy(),
            gamma=a["gamma"][r].copy(),
            rho0=float(a["rho0"][r]),
            tau02=float(a["tau02"][r]),
            delta=a["delta"][r].copy(),
            theta=a["theta"][r].copy(),
        )


def save_draws(path, draws: PosteriorDraws) -> None:
    """Serialize draws to ``path`` in the documented binary format."""
    manifest = []
    offset = 0
    payloads = []
    for name in sorted(draws.arrays):
        arr = np.ascontiguousarray(draws.arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        payloads.append(raw)
        offset += len(raw)

    header = {"arrays": manifest, "meta": draws.meta}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    hasher = hashlib.sha256()
    with open(path, "wb") as fh:
        for chunk in (
            MAGIC,
            len(header_bytes).to_bytes(8, "little"),
            header_bytes,
            *payloads,
        ):
            hasher.update(chunk)
            fh.write(chunk)
        fh.write(hasher.digest())


def load_draws(path) -> PosteriorDraws:
    """Read a draws file, verifying version and checksum before use."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8 + _HASH_BYTES:
        raise DataValidationError(f"{path}: truncated draws file")
    if blob[: len(MAGIC)] != MAGIC:
        raise DataValidationError(
            f"{path}: not a draws file or unsupported format version "
            f"(expected magic {MAGIC!r})"
        )
    body, digest = blob[:-_HASH_BYTES], blob[-_HASH_BYTES:]
    if hashlib.sha256(body).digest() != digest:
        raise DataValidationError(f"{path}: checksum mismatch, file corrupted")

    hlen = int.from_bytes(blob[len(MAGIC) : len(MAGIC) + 8], "little")
    hstart = len(MAGIC) + 8
    try:
        header = json.loads(blob[hstart : hstart + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise DataValidationError(f"{path}: unreadable header") from None

    payload = body[hstart + hlen :]
    arrays = {}
    for entry in header["arrays"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise DataValidationError(
                f"{path}: array {entry['name']!r} payload truncated"
            )
        arrays[entry["name"]] = np.frombuffer(raw, dtype=entry["dtype"]).reshape(
            entry["shape"]
        ).copy()
    return PosteriorDraws(arrays=arrays, meta=header["meta"])
