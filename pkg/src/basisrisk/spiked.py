"""Spiked population covariance models.

A single-spike model has eigenvalues [a*N^alpha, b, ..., b] and covariance
Q diag(eigenvalues) Q' for an orthogonal Q. Because the trailing eigenvalues
are all equal, the covariance collapses to the rank-one form

    Sigma = b * I + (a*N^alpha - b) * q1 q1'

where q1 is the first column of Q -- so a model only ever stores its
rotation seed and regenerates q1 in O(N); the full Q is materialized on
demand via :func:`haar_orthogonal`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .rng import stream

MATERIALIZE_LIMIT = 5000


class SpikeRegime(enum.Enum):
    VANISHING = "vanishing"  # alpha < 1: population share -> 0
    CONSTANT = "constant"    # alpha = 1: population share -> a/(a+b)
    EXPANDING = "expanding"  # alpha > 1: population share -> 1


@dataclass(frozen=True)
class SpikedModel:
    """Single-spike covariance specification.

    ``rotation_seed`` of None means no rotation (the covariance is the
    diagonal eigenvalue matrix itself).
    """

    a: float
    b: float
    alpha: float
    n: int
    rotation_seed: int | None = None

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0 and self.alpha > 0.0):
            raise ValueError("a, b and alpha must all be positive")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")

    @property
    def spike(self) -> float:
        """The large eigenvalue a * N^alpha."""
        return self.a * self.n ** self.alpha

    @property
    def regime(self) -> SpikeRegime:
        if self.alpha < 1.0:
            return SpikeRegime.VANISHING
        if self.alpha == 1.0:
            return SpikeRegime.CONSTANT
        return SpikeRegime.EXPANDING

    def q1(self) -> np.ndarray:
        """Leading eigenvector: first column of the model's Haar rotation.

        Generated in O(N): after the sign correction, the first column of
        the QR-based Haar matrix for this seed is exactly the first N
        Gaussian variates of the seed's stream, normalized.
        """
        if self.rotation_seed is None:
            e1 = np.zeros(self.n)
            e1[0] = 1.0
            return e1
        g = stream(self.rotation_seed).standard_normal(self.n)
        return g / np.linalg.norm(g)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "alpha": self.alpha,
            "n": self.n,
            "rotation_seed": self.rotation_seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SpikedModel":
        return cls(
            a=float(d["a"]),
            b=float(d["b"]),
            alpha=float(d["alpha"]),
            n=int(d["n"]),
            rotation_seed=None if d.get("rotation_seed") is None else int(d["rotation_seed"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SpikedModel":
        return cls.from_dict(json.loads(text))


def population_lambda_share(model: SpikedModel) -> float:
    """Exact population share: a*N^alpha / (a*N^alpha + (N-1)*b)."""
    spike = model.spike
    return spike / (spike + (model.n - 1) * model.b)


def constant_spike_from_target(
    lambda_tilde: float,
    n: int,
    rotation_seed: int | None = None,
    exact_target: bool = True,
) -> SpikedModel:
    """Constant-spike model (b=1, alpha=1) calibrated to a target share.

    With ``exact_target`` (default) the spike coefficient solves
    a*N / (a*N + N - 1) = lambda_tilde exactly, i.e.
    a = lambda_tilde/(1-lambda_tilde) * (N-1)/N, so finite-N bias is measured
    against the true target. ``exact_target=False`` uses the large-N recipe
    a = lambda_tilde/(1-lambda_tilde), whose realized share differs by
    O(1/N).
    """
    if not 0.0 < lambda_tilde < 1.0:
        raise ValueError(f"lambda_tilde must be in (0, 1), got {lambda_tilde}")
    a = lambda_tilde / (1.0 - lambda_tilde)
    if exact_target:
        a *= (n - 1) / n
    return SpikedModel(a=a, b=1.0, alpha=1.0, n=n, rotation_seed=rotation_seed)


def haar_orthogonal(n: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix, deterministic given the seed.

    QR of an iid standard Gaussian matrix with the columns rescaled by
    sign(diag(R)) (zeros mapped to +1); without the correction QR output is
    not Haar. The Gaussian draw is transposed before factorization so that
    the first column of the result is the stream's first n variates
    normalized -- the same vector :meth:`SpikedModel.q1` produces.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    g = stream(seed).standard_normal((n, n))
    q, r = np.linalg.qr(g.T)
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    return q * d


def materialize_covariance(model: SpikedModel) -> np.ndarray:
    """Dense N x N covariance b*I + (spike - b) * q1 q1'.

    Guarded at N <= MATERIALIZE_LIMIT; the samplers and population formulas
    never need the dense matrix.
    """
    if model.n > MATERIALIZE_LIMIT:
        raise ValueError(
            f"refusing to materialize N={model.n} > {MATERIALIZE_LIMIT} covariance"
        )
    q1 = model.q1()
    cov = (model.spike - model.b) * np.outer(q1, q1)
    cov[np.diag_indices_from(cov)] += model.b
    return cov
