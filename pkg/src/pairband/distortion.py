"""Pairwise distortion tables: file ingestion and a synthetic generator.

The optimizer consumes only numbers: D_i(w_ij), user i's reconstruction
distortion when paired with user j, and the pair sum d_ij = D_i + D_j
used as the matching edge weight.  Real tables come from an offline
codec evaluation; for self-contained experiments we synthesize them
from a similarity gate — each user gets a random unit feature vector
and more-similar pairs get proportionally lower distortion:

    D_i(w_ij) = base * (1 - weight * sigmoid(kappa * cos(v_i, v_j))).

This mirrors the qualitative behavior that pairing semantically similar
users reconstructs better, which is all the pairing layer depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DistortionTable",
    "SimilarityModel",
    "similarity_gate",
    "synthesize_distortions",
    "load_distortion_table",
    "save_distortion_table",
]

_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DistortionTable:
    """Per-user and summed pairwise distortions for n users.

    ``per_user[i][j]`` is D_i when i is paired with j (row = whose
    distortion, column = partner); ``pair_sum[i][j] = per_user[i][j] +
    per_user[j][i]`` is the symmetric matching weight.  Diagonals are
    unused and kept at zero.
    """

    n: int
    per_user: np.ndarray
    pair_sum: np.ndarray

    def __post_init__(self) -> None:
        pu = np.asarray(self.per_user, dtype=float)
        ps = np.asarray(self.pair_sum, dtype=float)
        if pu.shape != (self.n, self.n) or ps.shape != (self.n, self.n):
            raise ValueError("distortion tables must be n x n")
        if np.any(pu < 0) or np.any(ps < 0):
            raise ValueError("distortion values must be non-negative")
        expected = pu + pu.T
        off = ~np.eye(self.n, dtype=bool)
        if not np.allclose(ps[off], expected[off], rtol=1e-9, atol=0.0):
            raise ValueError("pair_sum must equal per_user[i][j] + per_user[j][i]")
        object.__setattr__(self, "per_user", pu)
        object.__setattr__(self, "pair_sum", ps)

    @classmethod
    def from_per_user(cls, per_user) -> "DistortionTable":
        pu = np.asarray(per_user, dtype=float)
        n = pu.shape[0]
        ps = pu + pu.T
        np.fill_diagonal(ps, 0.0)
        return cls(n=n, per_user=pu, pair_sum=ps)


@dataclass(frozen=True)
class SimilarityModel:
    """Parameters of the synthetic distortion generator."""

    kappa: float = 5.0
    base_distortion: float = 1.0
    similarity_weight: float = 0.5
    feature_dim: int = 16

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.base_distortion <= 0:
            raise ValueError("base_distortion must be positive")
        if not 0.0 <= self.similarity_weight < 1.0:
            raise ValueError(
                "similarity_weight must be in [0, 1) — at 1 the gate could "
                "drive distortion to zero or below"
            )
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")


def similarity_gate(cos_sim: float, kappa: float) -> float:
    """Logistic gate sigma(kappa * cos_sim) in (0, 1)."""
    if not -1.0 <= cos_sim <= 1.0:
        raise ValueError(f"cosine similarity must lie in [-1, 1], got {cos_sim}")
    return 1.0 / (1.0 + math.exp(-kappa * cos_sim))


def distortions_from_features(features: np.ndarray, model: SimilarityModel) -> DistortionTable:
    """Map unit feature vectors (one row per user) to a distortion table:
    lower distortion for more-aligned pairs."""
    n = features.shape[0]
    if n % 2 != 0:
        raise ValueError("n must be even")
    per_user = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            cos = float(np.clip(features[i] @ features[j], -1.0, 1.0))
            gate = similarity_gate(cos, model.kappa)
            per_user[i, j] = model.base_distortion * (
                1.0 - model.similarity_weight * gate
            )
    return DistortionTable.from_per_user(per_user)


def synthesize_distortions(
    rng: np.random.Generator, model: SimilarityModel, n: int
) -> DistortionTable:
    """Similarity-driven synthetic table: one unit feature vector per
    user, deterministic under the generator's seed."""
    if n % 2 != 0:
        raise ValueError("n must be even")
    feats = rng.normal(size=(n, model.feature_dim))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    return distortions_from_features(feats, model)


def save_distortion_table(table: DistortionTable, path: str | Path, units: str = "mse") -> None:
    """Write the table as versioned text; floats via repr so that a
    save/load roundtrip is bit-exact."""
    lines = [
        f"version {_FORMAT_VERSION}",
        f"n {table.n}",
        f"units {units}",
    ]
    for i in range(table.n):
        for j in range(i + 1, table.n):
            lines.append(
                f"{i} {j} {float(table.per_user[i, j])!r} {float(table.per_user[j, i])!r}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def load_distortion_table(source: str | Path) -> DistortionTable:
    """Parse a distortion table file.

    Grammar (one item per line, '#' starts a comment):
        version 1
        n <even int>
        units <word>
        <i> <j> <D_i_given_j> <D_j_given_i>    (one line per unordered pair)

    Rows may list the pair in either order; duplicates, gaps, negative
    or non-numeric values are rejected with the offending pair named.
    """
    text = Path(source).read_text()
    header: dict[str, str] = {}
    rows: list[tuple[int, int, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("version", "n", "units"):
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: malformed header {raw!r}")
            header[parts[0]] = parts[1]
            continue
        if len(parts) != 4:
            raise ValueError(
                f"line {lineno}: expected 'i j D_i_given_j D_j_given_i', got {raw!r}"
            )
        try:
            i, j = int(parts[0]), int(parts[1])
            dij, dji = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric entry in {raw!r}") from exc
        rows.append((i, j, dij, dji))

    for key in ("version", "n"):
        if key not in header:
            raise ValueError(f"missing '{key}' header")
    if int(header["version"]) != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {header['version']}")
    n = int(header["n"])
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")

    per_user = np.full((n, n), np.nan)
    np.fill_diagonal(per_user, 0.0)
    for i, j, dij, dji in rows:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"invalid pair ({i}, {j}) for n={n}")
        if dij < 0 or dji < 0:
            raise ValueError(f"negative distortion for pair ({i}, {j})")
        if not math.isnan(per_user[i, j]) or not math.isnan(per_user[j, i]):
            raise ValueError(f"duplicate entry for pair ({i}, {j})")
        per_user[i, j] = dij
        per_user[j, i] = dji

    holes = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if math.isnan(per_user[i, j]) or math.isnan(per_user[j, i])
    ]
    if holes:
        raise ValueError(f"missing entries for pairs: {holes}")
    return DistortionTable.from_per_user(per_user)
