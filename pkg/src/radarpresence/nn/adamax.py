"""Adamax: the infinity-norm variant of Adam.

Per-tensor update, with t counting from 1:

    m <- beta1 * m + (1 - beta1) * g
    u <- max(beta2 * u, |g|)
    theta <- theta - (alpha / (1 - beta1^t)) * m / (u + eps)

Only the first moment needs bias correction; the infinity norm u does not.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class AdamaxState:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    u: dict = field(default_factory=dict)


def adamax_step(
    state: AdamaxState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Apply one Adamax step; mutates state, returns the updated params dict.

    Parameter arrays are updated in place so that layer objects holding the
    same arrays see the new values. Results depend only on the gradient
    values, not their memory layout.
    """
    state.t += 1
    bias = 1.0 - state.beta1**state.t
    for name, p in params.items():
        if name not in grads:
            continue
        g = np.ascontiguousarray(grads[name], dtype=p.dtype)
        if g.shape != p.shape:
            raise ValidationError(
                f"gradient shape {g.shape} does not match parameter '{name}' {p.shape}"
            )
        m = state.m.get(name)
        u = state.u.get(name)
        if m is None:
            m = np.zeros_like(p)
            u = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        u = np.maximum(state.beta2 * u, np.abs(g))
        state.m[name] = m
        state.u[name] = u
        p -= (state.alpha / bias) * m / (u + state.eps)
    return params


class Adamax:
    """Stateful wrapper keyed by parameter name."""

    def __init__(self, alpha=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.state = AdamaxState(alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        adamax_step(self.state, params, grads)

    def named_state(self) -> dict[str, np.ndarray]:
        out = {
            "t": np.array([float(self.state.t)], dtype=np.float32),
            "alpha": np.array([self.state.alpha], dtype=np.float32),
            "beta1": np.array([self.state.beta1], dtype=np.float32),
            "beta2": np.array([self.state.beta2], dtype=np.float32),
            "eps": np.array([self.state.eps], dtype=np.float32),
        }
        for name, arr in self.state.m.items():
            out[f"m.{name}"] = arr
        for name, arr in self.state.u.items():
            out[f"u.{name}"] = arr
        return out
