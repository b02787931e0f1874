"""Scalar-product and local-form choices for a reference system.

Each variant is a small frozen dataclass; ``spec_to_dict``/``spec_from_dict``
give the JSON representation used in model files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import InvalidArgs, ParseError


@dataclass(frozen=True)
class L2:
    """Integral of the pointwise fiber inner product against the volume weights."""


@dataclass(frozen=True)
class SobolevH1:
    """L2 plus the metric-contracted inner product of first derivatives."""


@dataclass(frozen=True)
class SobolevHk:
    k: int
    order_weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.k < 0:
            raise InvalidArgs("Sobolev order must be nonnegative")
        if self.order_weights and len(self.order_weights) != self.k + 1:
            raise InvalidArgs("need one weight per derivative order 0..k")
        if any(w < 0 for w in self.order_weights):
            raise InvalidArgs("Sobolev order weights must be nonnegative")

    @property
    def weights(self) -> tuple[float, ...]:
        return self.order_weights or (1.0,) * (self.k + 1)


@dataclass(frozen=True)
class WeightedCustom:
    """L2 with an extra positive per-point kernel looked up by id on the model."""

    kernel: str


ScalarProductSpec = Union[L2, SobolevH1, SobolevHk, WeightedCustom]


@dataclass(frozen=True)
class MetricOnFiber:
    """``g_x(V_i, V_j)`` for tangent-vector fibers."""


@dataclass(frozen=True)
class GradientForm:
    """``g_x(grad psi_i, grad psi_j)`` with the inverse metric on the jets."""


@dataclass(frozen=True)
class PointwiseSesquilinear:
    """``<psi_i(x), psi_j(x)>`` with the standard Hermitian product on the fiber."""


@dataclass(frozen=True)
class EpsilonAveraged:
    inner: "LocalFormSpec"
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgs("epsilon must be positive")
        if isinstance(self.inner, EpsilonAveraged):
            raise InvalidArgs("nested epsilon averaging is not supported")


LocalFormSpec = Union[MetricOnFiber, GradientForm, PointwiseSesquilinear, EpsilonAveraged]

_SIMPLE = {
    "L2": L2,
    "SobolevH1": SobolevH1,
    "MetricOnFiber": MetricOnFiber,
    "GradientForm": GradientForm,
    "PointwiseSesquilinear": PointwiseSesquilinear,
}


def spec_to_dict(spec) -> dict:
    name = type(spec).__name__
    if isinstance(spec, SobolevHk):
        return {"type": name, "k": spec.k, "order_weights": list(spec.weights)}
    if isinstance(spec, WeightedCustom):
        return {"type": name, "kernel": spec.kernel}
    if isinstance(spec, EpsilonAveraged):
        return {"type": name, "inner": spec_to_dict(spec.inner), "epsilon": spec.epsilon}
    return {"type": name}


def spec_from_dict(data) -> ScalarProductSpec | LocalFormSpec:
    if isinstance(data, str):
        data = {"type": data}
    if not isinstance(data, dict) or "type" not in data:
        raise ParseError(f"cannot parse spec {data!r}")
    kind = data["type"]
    try:
        if kind in _SIMPLE:
            return _SIMPLE[kind]()
        if kind == "SobolevHk":
            return SobolevHk(int(data["k"]), tuple(float(w) for w in data.get("order_weights", ())))
        if kind == "WeightedCustom":
            return WeightedCustom(str(data["kernel"]))
        if kind == "EpsilonAveraged":
            return EpsilonAveraged(spec_from_dict(data["inner"]), float(data["epsilon"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad {kind} spec: {exc}") from exc
    raise ParseError(f"unknown spec type {kind!r}")
