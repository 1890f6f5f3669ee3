"""Target functions on [0, 1]^d with values in [0, 1].

These are the desk-scale functions the trainer approximates and the empirical
experiments measure accuracy against.  Registration spot-checks the range on
a grid so a bad evaluator fails early.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class TargetFunction:
    """A named continuous function [0, 1]^d -> [0, 1].

    ``fn`` must accept an array of shape (n, d) and return shape (n,).
    """

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"target {self.name!r} expects dimension {self.dim}, got {X.shape[1]}")
        return np.asarray(self.fn(X), dtype=float)

    def at(self, x) -> float:
        return float(self(np.asarray(x, dtype=float)[None, :])[0])


def _check_range(target: TargetFunction, grid_per_dim: int = 33) -> None:
    pts = np.linspace(0.0, 1.0, grid_per_dim)
    mesh = np.meshgrid(*([pts] * target.dim), indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    vals = target(X)
    if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
        raise ValueError(f"target {target.name!r} leaves [0, 1] on the check grid")


_REGISTRY: dict[str, Callable[..., TargetFunction]] = {}


def register(name: str, factory: Callable[..., TargetFunction]) -> None:
    _REGISTRY[name] = factory


def make_target(name: str, **params) -> TargetFunction:
    """Instantiate a built-in target by name (range-checked)."""
    if name not in _REGISTRY:
        raise ValueError(f"unknown target {name!r}; built-ins: {sorted(_REGISTRY)}")
    target = _REGISTRY[name](**params)
    _check_range(target)
    return target


def ridge_sine() -> TargetFunction:
    """One full sine period rescaled into [0, 1], d = 1."""
    return TargetFunction("ridge_sine", 1, lambda X: (np.sin(2.0 * np.pi * X[:, 0]) + 1.0) / 2.0)


def smooth_xor() -> TargetFunction:
    """Bilinear interpolation of XOR's corner values, d = 2."""
    return TargetFunction(
        "smooth_xor", 2, lambda X: X[:, 0] + X[:, 1] - 2.0 * X[:, 0] * X[:, 1]
    )


def product() -> TargetFunction:
    return TargetFunction("product", 2, lambda X: X[:, 0] * X[:, 1])


def constant(value: float = 0.5, dim: int = 1) -> TargetFunction:
    if not (0.0 <= value <= 1.0):
        raise ValueError("constant target value must lie in [0, 1]")
    return TargetFunction(f"constant({value})", dim, lambda X: np.full(X.shape[0], value))


def network_as_target(net) -> TargetFunction:
    """Wrap a network as its own target (useful for zero-error baselines).

    The wrapped outputs are not range-checked: a network output is a free
    linear combination and may leave [0, 1].
    """
    from .net import forward_batch

    return TargetFunction("network", net.input_dim, lambda X: forward_batch(net, X))


register("ridge_sine", lambda: ridge_sine())
register("smooth_xor", lambda: smooth_xor())
register("product", lambda: product())
register("constant", lambda value=0.5, dim=1: constant(value, dim))
