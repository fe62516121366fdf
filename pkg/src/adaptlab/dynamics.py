"""Uncertain control-affine plants ``xdot = f(x) + Delta(x)^T theta + B(x) u``.

The regressor ``Delta(x)`` is always stored as a ``p x n`` array so that
``Delta(x).T @ theta`` is the n-dimensional uncertainty term.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteDynamics, ValidationError

DEFAULT_BOX = 1e3


@dataclass(frozen=True)
class UncertainSystem:
    name: str
    state_dim: int
    input_dim: int
    param_dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    regressor: Callable[[np.ndarray], np.ndarray]
    input_map: Callable[[np.ndarray], np.ndarray]
    # finiteness of the evaluators is guaranteed for ||x||_inf <= box
    box: float = DEFAULT_BOX
    # (A, B) when f(x) = A x and B(x) = B; used by CLF synthesis
    nominal: Optional[tuple] = None
    # names of the regressor components, informational
    labels: tuple = field(default=())
    # float-only (f, delta, b) for 1-D plants; lets the simulator skip numpy
    scalar_fns: Optional[tuple] = None

    def check_dims(self, x=None, theta=None, u=None):
        errors = {}
        if x is not None and np.shape(x) != (self.state_dim,):
            errors["x"] = f"expected shape ({self.state_dim},), got {np.shape(x)}"
        if theta is not None and np.shape(theta) != (self.param_dim,):
            errors["theta"] = f"expected shape ({self.param_dim},), got {np.shape(theta)}"
        if u is not None and np.shape(u) != (self.input_dim,):
            errors["u"] = f"expected shape ({self.input_dim},), got {np.shape(u)}"
        if errors:
            raise ValidationError(errors)

    def uncertainty(self, x, theta):
        return self.regressor(x).T @ theta


@dataclass(frozen=True)
class TrueParameters:
    """Unknown plant parameters together with the admissible set as a box."""

    theta: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        if (self.lower is None) != (self.upper is None):
            raise ValidationError({"admissible_box": "give both lower and upper bounds or neither"})
        if self.lower is not None:
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if lo.shape != theta.shape or hi.shape != theta.shape:
                raise ValidationError({"admissible_box": "bounds must match theta's shape"})
            if np.any(lo > hi):
                raise ValidationError({"admissible_box": "lower bound exceeds upper bound"})
            if np.any(theta < lo) or np.any(theta > hi):
                raise ValidationError({"theta": f"{theta.tolist()} outside admissible box"})
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)

    @property
    def has_box(self):
        return self.lower is not None

    def inflated(self, factor=1.5):
        """Box with the same centre and half-widths scaled by ``factor``."""
        if not self.has_box:
            raise ValueError("no admissible box to inflate")
        centre = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower) * factor
        return centre - half, centre + half


def eval_plant(sys, x, theta, u):
    """Return ``f(x) + Delta(x)^T theta + B(x) u``."""
    xdot = sys.drift(x) + sys.regressor(x).T @ theta + sys.input_map(x) @ u
    if not np.all(np.isfinite(xdot)):
        raise NonFiniteDynamics(x)
    return xdot


def in_input_span(sys, x, v, tol=1e-10):
    """True when ``v`` lies in the column span of ``B(x)``."""
    B = sys.input_map(x)
    coef, *_ = np.linalg.lstsq(B, v, rcond=None)
    return float(np.linalg.norm(B @ coef - v)) <= tol * max(1.0, float(np.linalg.norm(v)))


# -- scalar systems --------------------------------------------------------

_ONE = np.ones((1, 1))


def _scalar_drift(x):
    return np.zeros(1)


def _scalar_input(x):
    return _ONE


def make_scalar_example():
    """``xdot = theta |x| + u``."""
    return UncertainSystem(
        name="scalar",
        state_dim=1,
        input_dim=1,
        param_dim=1,
        drift=_scalar_drift,
        regressor=lambda x: np.abs(x).reshape(1, 1),
        input_map=_scalar_input,
        labels=("abs",),
        scalar_fns=(lambda x: 0.0, abs, lambda x: 1.0),
    )


def make_scalar_square_example():
    """``xdot = theta x^2 + u``; its normalized law has a smooth r -> inf limit."""
    return UncertainSystem(
        name="scalar_sq",
        state_dim=1,
        input_dim=1,
        param_dim=1,
        drift=_scalar_drift,
        regressor=lambda x: (x * x).reshape(1, 1),
        input_map=_scalar_input,
        labels=("sq",),
        scalar_fns=(lambda x: 0.0, lambda x: x * x, lambda x: 1.0),
    )


SCALAR_COMPONENTS = {
    "abs": np.abs,
    "id": lambda x: x,
    "sin": np.sin,
    "cos": np.cos,
    "sq": lambda x: x * x,
    "cube": lambda x: x * x * x,
    "atan": np.arctan,
    "const": lambda x: np.ones_like(x),
}


def make_scalar_custom(components):
    """Scalar plant ``xdot = sum_i theta_i c_i(x) + u`` built from named components.

    Valid names are the keys of ``SCALAR_COMPONENTS``.
    """
    components = tuple(components)
    unknown = [c for c in components if c not in SCALAR_COMPONENTS]
    if not components or unknown:
        raise ValidationError({"system.regressor": f"unknown or empty components {unknown or components}"})
    funcs = [SCALAR_COMPONENTS[c] for c in components]

    def regressor(x):
        return np.array([[float(fn(x[0]))] for fn in funcs])

    return UncertainSystem(
        name="custom",
        state_dim=1,
        input_dim=1,
        param_dim=len(funcs),
        drift=_scalar_drift,
        regressor=regressor,
        input_map=_scalar_input,
        labels=components,
    )


# -- Example 1: linear nominal part, matched nonlinear uncertainty ----------

EXAMPLE1_A = np.array(
    [
        [0.0, 1.0, 1.0, 0.0],
        [0.0, -1.0, 1.0, 1.0],
        [0.0, 0.0, -1.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
EXAMPLE1_B = np.array([[0.0], [0.0], [0.0], [1.0]])


def example1_features(x):
    return np.array([x[0] * x[0], np.arctan(x[1]), x[2], np.arctan(x[3])])


def make_example1():
    A, B = EXAMPLE1_A, EXAMPLE1_B
    b_row = B[:, 0]

    def regressor(x):
        # Delta(x)^T = B phi(x)^T, so Delta(x) = phi(x) B^T
        return np.outer(example1_features(x), b_row)

    return UncertainSystem(
        name="example1",
        state_dim=4,
        input_dim=1,
        param_dim=4,
        drift=lambda x: A @ x,
        regressor=regressor,
        input_map=lambda x: B,
        nominal=(A, B),
        labels=("x1^2", "atan(x2)", "x3", "atan(x4)"),
    )


# -- Example 2: parametric strict-feedback form, unmatched uncertainty ------

EXAMPLE2_B = np.array([[0.0], [1.0]])


def example2_phi1(x1):
    return np.array([np.sin(x1), np.arctan(x1), 0.0, 0.0])


def example2_phi2(x1, x2):
    return np.array([0.0, 0.0, np.sin(x1), np.arctan(x2)])


def make_example2():
    def regressor(x):
        out = np.zeros((4, 2))
        s = np.sin(x[0])
        out[0, 0] = s
        out[1, 0] = np.arctan(x[0])
        out[2, 1] = s
        out[3, 1] = np.arctan(x[1])
        return out

    return UncertainSystem(
        name="example2",
        state_dim=2,
        input_dim=1,
        param_dim=4,
        drift=lambda x: np.array([x[1], 0.0]),
        regressor=regressor,
        input_map=lambda x: EXAMPLE2_B,
        labels=("sin(x1)", "atan(x1)", "sin(x1)", "atan(x2)"),
    )


# -- Example 3: single-link manipulator with a flexible joint ---------------

EXAMPLE3_B = np.array([[0.0], [0.0], [0.0], [1.0]])
# integrator chain the feedback-linearizing coordinates obey
EXAMPLE3_CHAIN_A = np.diag(np.ones(3), 1)


def make_example3():
    def regressor(x):
        out = np.zeros((4, 4))
        out[0, 1] = np.sin(x[0])
        out[1, 1] = x[2] - x[0]
        out[2, 3] = x[0] - x[2]
        out[3, 3] = x[3]
        return out

    return UncertainSystem(
        name="example3",
        state_dim=4,
        input_dim=1,
        param_dim=4,
        drift=lambda x: np.array([x[1], 0.0, x[3], 0.0]),
        regressor=regressor,
        input_map=lambda x: EXAMPLE3_B,
        labels=("sin(x1)", "x3-x1", "x1-x3", "x4"),
    )


BUILTIN_SYSTEMS = {
    "scalar": make_scalar_example,
    "scalar_sq": make_scalar_square_example,
    "example1": make_example1,
    "example2": make_example2,
    "example3": make_example3,
}

# admissible parameter boxes (Theta) for the built-ins; chosen by this library
PARAMETER_BOXES = {
    "scalar": ([-5.0], [5.0]),
    "scalar_sq": ([-5.0], [5.0]),
    "example1": ([-2.0] * 4, [2.0] * 4),
    "example2": ([-2.0] * 4, [2.0] * 4),
    "example3": ([-3.0, 0.5, -3.0, -3.0], [3.0, 3.0, 3.0, 3.0]),
}


def make_system(name):
    try:
        return BUILTIN_SYSTEMS[name]()
    except KeyError:
        raise ValidationError({"system.kind": f"unknown system {name!r}"}) from None


def true_parameters(name, theta):
    """TrueParameters with the built-in admissible box for ``name`` (if any)."""
    box = PARAMETER_BOXES.get(name)
    if box is None:
        return TrueParameters(np.asarray(theta, dtype=float))
    return TrueParameters(np.asarray(theta, dtype=float), np.array(box[0]), np.array(box[1]))
