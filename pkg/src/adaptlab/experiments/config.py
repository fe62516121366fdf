"""Scenario configs: a sectioned ``key = value`` text format and its resolution.

Grammar (parsed with the standard ``configparser``; ``#`` starts a comment)::

    [scenario]     name, controller, estimator, seed
    [system]       kind (scalar | scalar_sq | example1 | example2 | example3 | custom)
                   components (custom only, e.g. ``sin, id, sq``)
    [clf]          kind (quadratic | backstepping | feedback_linearization)
                   lam, p_source (explicit | synthesize), pinv, scale
    [gains]        gamma, r, epsilon, omega (arctan | exp), omega_scale,
                   omega_offset, v_floor, validate_r (true | false: probe r at load)
    [initial]      theta_true, x0, theta_hat0, rho0, a_hat0
    [integration]  t_final, dt, conv_tol, conv_window

Vectors are comma separated (``1, 1.5``).  Matrices separate rows with ``;``
(``2, 0; 0, 2``); a single number for ``gamma`` means that multiple of the
identity.  Rendering writes every float with ``repr`` so parse(render(c)) == c.
"""

import configparser
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..clf import make_backstepping_clf, make_feedback_linearization_clf, make_quadratic_clf
from ..clf_synthesis import synthesize_P
from ..dynamics import EXAMPLE3_B, EXAMPLE3_CHAIN_A, make_scalar_custom, make_system
from ..errors import AdaptlabError, ValidationError
from ..estimators import GainConfig
from ..simulation import ClosedLoop

CLF_KINDS = ("quadratic", "backstepping", "feedback_linearization")
P_SOURCES = ("explicit", "synthesize")

REQUIRED = {
    "scenario": ("controller", "estimator"),
    "system": ("kind",),
    "clf": ("kind",),
    "gains": ("gamma",),
    "initial": ("theta_true", "x0", "theta_hat0"),
    "integration": ("t_final", "dt"),
}
KNOWN = {
    "scenario": ("name", "controller", "estimator", "seed"),
    "system": ("kind", "components"),
    "clf": ("kind", "lam", "p_source", "pinv", "scale"),
    "gains": ("gamma", "r", "epsilon", "omega", "omega_scale", "omega_offset", "v_floor", "validate_r"),
    "initial": ("theta_true", "x0", "theta_hat0", "rho0", "a_hat0"),
    "integration": ("t_final", "dt", "conv_tol", "conv_window"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative description of one closed-loop run.

    Vectors are tuples of floats and matrices tuples of rows so that configs
    compare and hash by value.
    """

    controller: str
    estimator: str
    system: str
    clf_kind: str
    gamma: tuple
    theta_true: tuple
    x0: tuple
    theta_hat0: tuple
    t_final: float
    dt: float
    name: str = "scenario"
    seed: int = 0
    components: tuple = ()
    lam: float = 1.0
    p_source: str = "explicit"
    pinv: Optional[tuple] = None
    scale: float = 1.0
    r: float = 1.0
    epsilon: float = 0.5
    omega: str = "arctan"
    omega_scale: float = 0.5
    omega_offset: float = 0.0
    v_floor: float = 1e-12
    validate_r: bool = True
    rho0: float = 0.0
    a_hat0: Optional[tuple] = None
    conv_tol: float = 1e-12
    conv_window: int = 100
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def with_updates(self, **changes):
        return replace(self, _cache={}, **changes)

    def gain_config(self):
        return GainConfig(
            Gamma=np.array(self.gamma, dtype=float),
            r=self.r,
            epsilon=self.epsilon,
            omega_kind=self.omega,
            omega_scale=self.omega_scale,
            omega_offset=self.omega_offset,
            v_floor=self.v_floor,
        )

    def make_system(self):
        if self.system == "custom":
            return make_scalar_custom(self.components)
        return make_system(self.system)

    def make_clf(self, sys):
        key = ("clf", self.system, self.components, self.clf_kind, self.lam, self.p_source, self.pinv, self.scale, self.seed)
        if key not in self._cache:
            self._cache[key] = _build_clf(self, sys)
        return self._cache[key]

    def build(self):
        """Resolve names into a ClosedLoop (not yet validated)."""
        sys = self.make_system()
        try:
            clf = self.make_clf(sys)
            gains = self.gain_config()
        except ValidationError:
            raise
        except AdaptlabError as exc:
            raise ValidationError({"clf": str(exc)}) from exc
        return ClosedLoop(
            sys=sys,
            clf=clf,
            controller=self.controller,
            estimator=self.estimator,
            gains=gains,
            theta_true=np.array(self.theta_true),
            x0=np.array(self.x0),
            theta_hat0=np.array(self.theta_hat0),
            rho0=self.rho0,
            a_hat0=None if self.a_hat0 is None else np.array(self.a_hat0),
            t_final=self.t_final,
            dt=self.dt,
            conv_tol=self.conv_tol,
            conv_window=self.conv_window,
            validate_r=self.validate_r,
        )


def _build_clf(cfg, sys):
    if cfg.clf_kind == "backstepping":
        if sys.name != "example2":
            raise ValidationError({"clf.kind": "backstepping CLF is defined for example2 only"})
        return make_backstepping_clf(cfg.lam)
    if cfg.clf_kind == "feedback_linearization":
        if sys.name != "example3":
            raise ValidationError({"clf.kind": "feedback_linearization CLF is defined for example3 only"})
        return make_feedback_linearization_clf(_pinv(cfg, EXAMPLE3_CHAIN_A, EXAMPLE3_B), cfg.lam)
    if sys.nominal is not None:
        A, B = sys.nominal
    else:
        A, B = None, None
    return make_quadratic_clf(_pinv(cfg, A, B), cfg.lam, param_dim=sys.param_dim, scale=cfg.scale)


def _pinv(cfg, A, B):
    if cfg.p_source == "explicit":
        if cfg.pinv is None:
            raise ValidationError({"clf.pinv": "p_source = explicit needs pinv"})
        return np.array(cfg.pinv, dtype=float)
    if A is None:
        raise ValidationError({"clf.p_source": "synthesize needs a system with a linear nominal part"})
    cert = synthesize_P(A, B, cfg.lam, seed=cfg.seed)
    return np.linalg.inv(cert.P)


# -- text format -----------------------------------------------------------


def _vector(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _matrix(text):
    rows = [r for r in text.split(";") if r.strip()]
    return tuple(tuple(float(v) for v in r.split(",")) for r in rows)


def _boolean(text):
    low = text.lower()
    if low not in ("true", "false"):
        raise ValueError(text)
    return low == "true"


def _fmt(v):
    return repr(float(v))


def _fmt_vector(vec):
    return ", ".join(_fmt(v) for v in vec)


def _fmt_matrix(mat):
    return "; ".join(_fmt_vector(row) for row in mat)


def _gamma(text, p):
    mat = _matrix(text)
    if len(mat) == 1 and len(mat[0]) == 1 and p is not None:
        g = mat[0][0]
        return tuple(tuple(g if i == j else 0.0 for j in range(p)) for i in range(p))
    return mat


def parse_config(text):
    """Parse config text into a ScenarioConfig; raises ValidationError."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError({"config": f"unreadable config: {exc}"}) from None
    errors = {}
    for section, keys in REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key) or not parser.get(section, key).strip():
                errors[f"{section}.{key}"] = "missing required field"
    for section in parser.sections():
        if section not in KNOWN:
            errors[section] = "unknown section"
            continue
        for key in parser.options(section):
            if key not in KNOWN[section]:
                errors[f"{section}.{key}"] = "unknown field"
    if errors:
        raise ValidationError(errors)

    values = {}

    def take(section, key, conv, dest=None, default=None):
        if not parser.has_option(section, key) or not parser.get(section, key).strip():
            return default
        raw = parser.get(section, key).strip()
        try:
            values[dest or key] = conv(raw)
        except ValueError:
            errors[f"{section}.{key}"] = f"cannot parse {raw!r}"
        return values.get(dest or key)

    take("scenario", "name", str)
    take("scenario", "controller", str)
    take("scenario", "estimator", str)
    take("scenario", "seed", int)
    take("system", "kind", str, dest="system")
    take("system", "components", lambda s: tuple(c.strip() for c in s.split(",") if c.strip()))
    take("clf", "kind", str, dest="clf_kind")
    take("clf", "lam", float)
    take("clf", "p_source", str)
    take("clf", "pinv", _matrix)
    take("clf", "scale", float)
    theta = take("initial", "theta_true", _vector)
    take("gains", "gamma", lambda s: _gamma(s, len(theta) if theta else None))
    for key in ("r", "epsilon", "omega_scale", "omega_offset", "v_floor"):
        take("gains", key, float)
    take("gains", "omega", str)
    take("gains", "validate_r", _boolean)
    for key in ("x0", "theta_hat0", "a_hat0"):
        take("initial", key, _vector)
    take("initial", "rho0", float)
    for key in ("t_final", "dt", "conv_tol"):
        take("integration", key, float)
    take("integration", "conv_window", int)
    if errors:
        raise ValidationError(errors)
    if values["clf_kind"] not in CLF_KINDS:
        errors["clf.kind"] = f"must be one of {CLF_KINDS}"
    if values.get("p_source", "explicit") not in P_SOURCES:
        errors["clf.p_source"] = f"must be one of {P_SOURCES}"
    if values["system"] == "custom" and not values.get("components"):
        errors["system.components"] = "custom system needs components"
    if errors:
        raise ValidationError(errors)
    return ScenarioConfig(**values)


def render_config(cfg):
    """Inverse of ``parse_config``; every field is written explicitly."""
    lines = [
        "[scenario]",
        f"name = {cfg.name}",
        f"controller = {cfg.controller}",
        f"estimator = {cfg.estimator}",
        f"seed = {cfg.seed}",
        "",
        "[system]",
        f"kind = {cfg.system}",
    ]
    if cfg.components:
        lines.append(f"components = {', '.join(cfg.components)}")
    lines += ["", "[clf]", f"kind = {cfg.clf_kind}", f"lam = {_fmt(cfg.lam)}", f"p_source = {cfg.p_source}"]
    if cfg.pinv is not None:
        lines.append(f"pinv = {_fmt_matrix(cfg.pinv)}")
    lines += [
        f"scale = {_fmt(cfg.scale)}",
        "",
        "[gains]",
        f"gamma = {_fmt_matrix(cfg.gamma)}",
        f"r = {_fmt(cfg.r)}",
        f"epsilon = {_fmt(cfg.epsilon)}",
        f"omega = {cfg.omega}",
        f"omega_scale = {_fmt(cfg.omega_scale)}",
        f"omega_offset = {_fmt(cfg.omega_offset)}",
        f"v_floor = {_fmt(cfg.v_floor)}",
        f"validate_r = {'true' if cfg.validate_r else 'false'}",
        "",
        "[initial]",
        f"theta_true = {_fmt_vector(cfg.theta_true)}",
        f"x0 = {_fmt_vector(cfg.x0)}",
        f"theta_hat0 = {_fmt_vector(cfg.theta_hat0)}",
        f"rho0 = {_fmt(cfg.rho0)}",
    ]
    if cfg.a_hat0 is not None:
        lines.append(f"a_hat0 = {_fmt_vector(cfg.a_hat0)}")
    lines += [
        "",
        "[integration]",
        f"t_final = {_fmt(cfg.t_final)}",
        f"dt = {_fmt(cfg.dt)}",
        f"conv_tol = {_fmt(cfg.conv_tol)}",
        f"conv_window = {cfg.conv_window}",
        "",
    ]
    return "\n".join(lines)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError({"config": f"cannot read {path}: {exc.strerror}"}) from None
    return parse_config(text)
