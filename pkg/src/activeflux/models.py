"""Conservation laws the solver can run.

All maps act on arrays whose last axis holds the ``m`` components, so they
work pointwise on whole grids at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from activeflux.errors import ConfigurationError, InadmissibleState

ArrayMap = Callable[[np.ndarray], np.ndarray]


def _identity(q):
    return np.asarray(q, dtype=float)


def _always(q):
    return np.ones(np.shape(q)[:-1], dtype=bool)


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    m: int
    flux: ArrayMap
    speeds: ArrayMap
    has_char_vars: bool = False
    to_char: Optional[ArrayMap] = None
    from_char: Optional[ArrayMap] = None
    speeds_of_char: Optional[ArrayMap] = None
    admissible: ArrayMap = _always
    # d(speed)/dq for scalar laws; used by the characteristic reference solver
    speed_prime: Optional[ArrayMap] = None
    linear_speed: Optional[float] = None
    params: dict = field(default_factory=dict)

    @property
    def is_scalar(self) -> bool:
        return self.m == 1

    def require_admissible(self, q, where: str = "") -> None:
        ok = self.admissible(np.asarray(q, dtype=float))
        if not np.all(ok):
            bad = np.argwhere(~np.atleast_1d(ok))[0]
            loc = f" at {where}{tuple(int(b) for b in bad)}" if where else ""
            raise InadmissibleState(f"{self.name}: inadmissible state{loc}")


def linear_advection(c: float) -> ModelDescriptor:
    c = float(c)
    if not math.isfinite(c):
        raise ConfigurationError("advection speed must be finite")
    return ModelDescriptor(
        name=f"advection:c={c:g}",
        m=1,
        flux=lambda q: c * np.asarray(q, dtype=float),
        speeds=lambda q: np.full(np.shape(q), c),
        has_char_vars=True,
        to_char=_identity,
        from_char=_identity,
        speeds_of_char=lambda Q: np.full(np.shape(Q), c),
        speed_prime=lambda q: np.zeros(np.shape(q)),
        linear_speed=c,
        params={"c": c},
    )


def burgers() -> ModelDescriptor:
    return ModelDescriptor(
        name="burgers",
        m=1,
        flux=lambda q: 0.5 * np.asarray(q, dtype=float) ** 2,
        speeds=_identity,
        has_char_vars=True,
        to_char=_identity,
        from_char=_identity,
        speeds_of_char=_identity,
        speed_prime=lambda q: np.ones(np.shape(q)),
    )


def shallow_water(g: float = 1.0) -> ModelDescriptor:
    """Shallow water in conserved variables ``(h, hu)``.

    Characteristic variables are the Riemann invariants ``u -/+ 2 sqrt(g h)``,
    in which both speeds are affine.
    """
    g = float(g)
    if not g > 0:
        raise ConfigurationError(f"gravity must be positive, got {g}")

    def admissible(q):
        return np.asarray(q)[..., 0] > 0

    def checked(q):
        q = np.asarray(q, dtype=float)
        if not np.all(admissible(q)):
            raise InadmissibleState("shallow water: non-positive depth")
        return q

    def flux(q):
        q = checked(q)
        h, hu = q[..., 0], q[..., 1]
        return np.stack([hu, hu * hu / h + 0.5 * g * h * h], axis=-1)

    def speeds(q):
        q = checked(q)
        u = q[..., 1] / q[..., 0]
        c = np.sqrt(g * q[..., 0])
        return np.stack([u - c, u + c], axis=-1)

    def to_char(q):
        q = checked(q)
        u = q[..., 1] / q[..., 0]
        c = np.sqrt(g * q[..., 0])
        return np.stack([u - 2.0 * c, u + 2.0 * c], axis=-1)

    def from_char(Q):
        Q = np.asarray(Q, dtype=float)
        c = 0.25 * (Q[..., 1] - Q[..., 0])
        if not np.all(c > 0):
            raise InadmissibleState("shallow water: Riemann invariants imply non-positive depth")
        u = 0.5 * (Q[..., 0] + Q[..., 1])
        h = c * c / g
        return np.stack([h, h * u], axis=-1)

    def speeds_of_char(Q):
        Q = np.asarray(Q, dtype=float)
        return np.stack([0.25 * (3.0 * Q[..., 0] + Q[..., 1]),
                         0.25 * (Q[..., 0] + 3.0 * Q[..., 1])], axis=-1)

    return ModelDescriptor(
        name=f"swe:g={g:g}",
        m=2,
        flux=flux,
        speeds=speeds,
        has_char_vars=True,
        to_char=to_char,
        from_char=from_char,
        speeds_of_char=speeds_of_char,
        admissible=admissible,
        params={"g": g},
    )


def jacobian_fd(model: ModelDescriptor, q, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the flux, with step ``h`` relative to ``|q_k|``."""
    q = np.asarray(q, dtype=float).reshape(model.m)
    if not h > 0:
        raise ValueError("step must be positive")
    model.require_admissible(q)
    J = np.empty((model.m, model.m))
    for k in range(model.m):
        step = h * max(1.0, abs(q[k]))
        step = (q[k] + step) - q[k]  # exactly representable increment
        e = np.zeros(model.m)
        e[k] = step
        plus, minus = q + e, q - e
        if not (model.admissible(plus) and model.admissible(minus)):
            raise InadmissibleState(f"{model.name}: difference stencil leaves admissible region")
        J[:, k] = (model.flux(plus) - model.flux(minus)) / (2.0 * step)
    return J


def _parse_params(text: str) -> dict:
    params = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ConfigurationError(f"bad number in {item!r}") from None
    return params


def parse_model(spec: str) -> ModelDescriptor:
    """Build a model from ``advection:c=<real>``, ``burgers`` or ``swe:g=<real>``."""
    name, _, rest = spec.strip().partition(":")
    params = _parse_params(rest)
    allowed = {"advection": {"c"}, "burgers": set(), "swe": {"g"}}
    if name not in allowed:
        raise ConfigurationError(f"unknown model {spec!r}")
    extra = set(params) - allowed[name]
    if extra:
        raise ConfigurationError(f"unexpected parameters {sorted(extra)} for {name!r}")
    if name == "advection":
        return linear_advection(params.get("c", 1.0))
    if name == "swe":
        return shallow_water(params.get("g", 1.0))
    return burgers()
