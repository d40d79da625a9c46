"""Experiment configuration: JSON schema, validation, resolution.

A config file is one JSON object.  The experiment kind comes from the
CLI subcommand; a ``kind`` entry in the file is allowed but must match.
Unknown keys anywhere are rejected, so typos fail loudly instead of
silently running defaults.

Shared sub-schemas
------------------

grid:     {"d": 1, "points_per_axis": 128, "half_width": 8.0}

initial:  one of
          {"terms": [{"amplitude": [re, im], "center": [...],
                      "quad_real": [[...]], "quad_imag": [[...]],
                      "phase": [...]}, ...]}
          {"random": {"count": 5, "n_terms": 2, "eig_range": [lo, hi],
                      "imag_scale": s, "center_scale": c, "phase_scale": p}}
          {"snapshot": "path.npz"}        (propagate only)

set:      the observation-set JSON of :mod:`kolmlab.thickness`, e.g.
          {"variant": "periodic_balls", "period": [1, 1],
           "centers": [[0, 0]], "radius": 0.3}

Random initial data derives from the run seed, so a fixed seed fixes
every artifact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, KolmlabError
from .grid import PhaseGrid
from .mixtures import GaussianMixtureState, GaussianTerm, random_mixture_state
from .telescope import LAMBDA_LOW
from .thickness import from_text

_KINDS = ("propagate", "decay-check", "thickness", "spectral-fit", "interp-verify", "telescope")


def _reject_unknown(body: dict, allowed, where: str):
    unknown = sorted(set(body) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _require(body: dict, key: str, where: str):
    if key not in body:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return body[key]


def _floats(value, where: str) -> tuple:
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of numbers")
    if not out:
        raise ConfigError(f"{where} must be nonempty")
    return out


@dataclass(frozen=True)
class GridSpec:
    d: int = 1
    points_per_axis: int = 128
    half_width: float = 8.0

    def build(self) -> PhaseGrid:
        try:
            return PhaseGrid(self.d, self.points_per_axis, self.half_width)
        except KolmlabError as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc


def _grid_spec(body, where: str) -> GridSpec:
    if body is None:
        return GridSpec()
    _reject_unknown(body, ("d", "points_per_axis", "half_width"), where)
    try:
        return GridSpec(
            d=int(body.get("d", 1)),
            points_per_axis=int(body.get("points_per_axis", 128)),
            half_width=float(body.get("half_width", 8.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid in {where}: {exc}") from exc


@dataclass(frozen=True)
class PropagateConfig:
    initial: dict
    times: tuple
    backend: str = "grid"
    grid: GridSpec = field(default_factory=GridSpec)
    fd_steps: int = 200
    save_snapshots: bool = True
    seed: int = 0


@dataclass(frozen=True)
class DecayCheckConfig:
    initial: dict
    n_values: tuple
    t_values: tuple
    c_exponent: float = 1.0 / 15.0
    c_pointwise: float = 1.0 / 30.0
    seed: int = 0


@dataclass(frozen=True)
class ThicknessConfig:
    set_body: dict
    delta: float
    r: float
    sampling_step: float = 1e-2
    seed: int = 0


@dataclass(frozen=True)
class SpectralFitConfig:
    set_body: dict
    n_values: tuple
    samples_per_n: int = 24
    grid: GridSpec = field(default_factory=lambda: GridSpec(1, 128, float(np.pi)))
    seed: int = 0


@dataclass(frozen=True)
class InterpVerifyConfig:
    set_body: dict
    t_values: tuple
    alpha_values: tuple
    initial: dict
    c1: float | None = None
    fit_n_values: tuple = (2.0, 4.0, 6.0)
    fit_samples_per_n: int = 16
    max_points: int = 1024
    seed: int = 0


@dataclass(frozen=True)
class TelescopeConfig:
    set_body: dict
    horizon: float
    intervals: tuple
    initial: dict
    c1: float | None = None
    lam: float = 0.95
    l1: float | None = None
    depth: int | None = None
    nodes_per_component: int = 16
    max_rows: int = 6
    fit_n_values: tuple = (2.0, 4.0, 6.0)
    fit_samples_per_n: int = 16
    seed: int = 0


def _initial_spec(body, where: str) -> dict:
    if not isinstance(body, dict):
        raise ConfigError(f"{where} must be an object")
    forms = [k for k in ("terms", "random", "snapshot") if k in body]
    if len(forms) != 1:
        raise ConfigError(
            f"{where} must contain exactly one of 'terms', 'random', 'snapshot'"
        )
    _reject_unknown(body, ("terms", "random", "snapshot"), where)
    if "random" in body:
        _reject_unknown(
            body["random"],
            ("count", "n_terms", "eig_range", "imag_scale", "center_scale", "phase_scale", "d"),
            f"{where}.random",
        )
    return body


def _set_body(body, where: str) -> dict:
    if not isinstance(body, dict) or "variant" not in body:
        raise ConfigError(f"{where} must be a set-descriptor object with a 'variant'")
    return body


def build_descriptor(set_body: dict):
    """Turn the config's set object into a descriptor (validating it)."""
    try:
        return from_text(json.dumps(set_body))
    except KolmlabError as exc:
        raise ConfigError(f"invalid observation set: {exc}") from exc


def initial_states(spec: dict, seed: int):
    """Resolve an initial-data spec into mixture states.

    Returns a list: explicit terms give one state, the random form gives
    ``count`` independent states drawn from the run seed.  Snapshot
    specs are resolved by the CLI (they name grid fields, not mixtures).
    """
    if "snapshot" in spec:
        raise ConfigError("snapshot initial data is only supported by 'propagate'")
    if "terms" in spec:
        try:
            terms = []
            for i, t in enumerate(spec["terms"]):
                _reject_unknown(
                    t, ("amplitude", "center", "quad_real", "quad_imag", "phase"),
                    f"initial.terms[{i}]",
                )
                amp = t.get("amplitude", 1.0)
                amplitude = complex(amp[0], amp[1]) if isinstance(amp, (list, tuple)) else complex(amp)
                center = np.asarray(_require(t, "center", f"initial.terms[{i}]"), dtype=float)
                quad = np.asarray(_require(t, "quad_real", f"initial.terms[{i}]"), dtype=float)
                if "quad_imag" in t:
                    quad = quad + 1j * np.asarray(t["quad_imag"], dtype=float)
                phase = np.asarray(t.get("phase", np.zeros_like(center)), dtype=float)
                terms.append(GaussianTerm(amplitude, center, quad, phase))
            if len(set(t.dim for t in terms)) != 1:
                raise ConfigError("initial terms disagree on dimension")
            d, rem = divmod(terms[0].dim, 2)
            if rem:
                raise ConfigError("term dimension must be even (phase space is 2d)")
            return [GaussianMixtureState(d, tuple(terms))]
        except KolmlabError as exc:
            raise ConfigError(f"invalid initial terms: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid initial terms: {exc}") from exc
    params = dict(spec["random"])
    count = int(params.pop("count", 1))
    if count < 1:
        raise ConfigError("initial.random.count must be >= 1")
    d = int(params.pop("d", 1))
    if "eig_range" in params:
        params["eig_range"] = tuple(float(v) for v in params["eig_range"])
    rng = np.random.default_rng(seed)
    try:
        return [random_mixture_state(rng, d=d, **params) for _ in range(count)]
    except (KolmlabError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid initial.random parameters: {exc}") from exc


def _parse_propagate(body: dict) -> PropagateConfig:
    allowed = ("kind", "initial", "times", "backend", "grid", "fd_steps", "save_snapshots", "seed")
    _reject_unknown(body, allowed, "propagate config")
    backend = body.get("backend", "grid")
    if backend not in ("grid", "mixture", "fd"):
        raise ConfigError(f"backend must be grid|mixture|fd, got {backend!r}")
    times = _floats(_require(body, "times", "propagate config"), "times")
    if any(t < 0 for t in times):
        raise ConfigError("times must be >= 0")
    return PropagateConfig(
        initial=_initial_spec(_require(body, "initial", "propagate config"), "initial"),
        times=times,
        backend=backend,
        grid=_grid_spec(body.get("grid"), "grid"),
        fd_steps=int(body.get("fd_steps", 200)),
        save_snapshots=bool(body.get("save_snapshots", True)),
        seed=int(body.get("seed", 0)),
    )


def _parse_decay_check(body: dict) -> DecayCheckConfig:
    allowed = ("kind", "initial", "n_values", "t_values", "c_exponent", "c_pointwise", "seed")
    _reject_unknown(body, allowed, "decay-check config")
    return DecayCheckConfig(
        initial=_initial_spec(_require(body, "initial", "decay-check config"), "initial"),
        n_values=_floats(_require(body, "n_values", "decay-check config"), "n_values"),
        t_values=_floats(_require(body, "t_values", "decay-check config"), "t_values"),
        c_exponent=float(body.get("c_exponent", 1.0 / 15.0)),
        c_pointwise=float(body.get("c_pointwise", 1.0 / 30.0)),
        seed=int(body.get("seed", 0)),
    )


def _parse_thickness(body: dict) -> ThicknessConfig:
    allowed = ("kind", "set", "delta", "r", "sampling_step", "seed")
    _reject_unknown(body, allowed, "thickness config")
    return ThicknessConfig(
        set_body=_set_body(_require(body, "set", "thickness config"), "set"),
        delta=float(_require(body, "delta", "thickness config")),
        r=float(_require(body, "r", "thickness config")),
        sampling_step=float(body.get("sampling_step", 1e-2)),
        seed=int(body.get("seed", 0)),
    )


def _parse_spectral_fit(body: dict) -> SpectralFitConfig:
    allowed = ("kind", "set", "n_values", "samples_per_n", "grid", "seed")
    _reject_unknown(body, allowed, "spectral-fit config")
    grid = body.get("grid")
    return SpectralFitConfig(
        set_body=_set_body(_require(body, "set", "spectral-fit config"), "set"),
        n_values=_floats(_require(body, "n_values", "spectral-fit config"), "n_values"),
        samples_per_n=int(body.get("samples_per_n", 24)),
        grid=_grid_spec(grid, "grid") if grid is not None else GridSpec(1, 128, float(np.pi)),
        seed=int(body.get("seed", 0)),
    )


def _parse_interp_verify(body: dict) -> InterpVerifyConfig:
    allowed = (
        "kind", "set", "t_values", "alpha_values", "initial", "c1",
        "fit_n_values", "fit_samples_per_n", "max_points", "seed",
    )
    _reject_unknown(body, allowed, "interp-verify config")
    alphas = _floats(_require(body, "alpha_values", "interp-verify config"), "alpha_values")
    if any(not 0 < a < 1 for a in alphas):
        raise ConfigError("alpha_values must lie in (0, 1)")
    return InterpVerifyConfig(
        set_body=_set_body(_require(body, "set", "interp-verify config"), "set"),
        t_values=_floats(_require(body, "t_values", "interp-verify config"), "t_values"),
        alpha_values=alphas,
        initial=_initial_spec(_require(body, "initial", "interp-verify config"), "initial"),
        c1=float(body["c1"]) if "c1" in body else None,
        fit_n_values=_floats(body.get("fit_n_values", (2.0, 4.0, 6.0)), "fit_n_values"),
        fit_samples_per_n=int(body.get("fit_samples_per_n", 16)),
        max_points=int(body.get("max_points", 1024)),
        seed=int(body.get("seed", 0)),
    )


def _parse_telescope(body: dict) -> TelescopeConfig:
    allowed = (
        "kind", "set", "horizon", "intervals", "initial", "c1", "lambda", "l1",
        "depth", "nodes_per_component", "max_rows", "fit_n_values",
        "fit_samples_per_n", "seed",
    )
    _reject_unknown(body, allowed, "telescope config")
    raw = _require(body, "intervals", "telescope config")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("intervals must be a nonempty list of [a, b] pairs")
    intervals = []
    for pair in raw:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError("each interval must be an [a, b] pair")
        intervals.append((float(pair[0]), float(pair[1])))
    lam = float(body.get("lambda", 0.95))
    if not LAMBDA_LOW < lam < 1.0:
        raise ConfigError(
            f"lambda must lie in (2^(-1/6), 1) ~ ({LAMBDA_LOW:.4f}, 1), got {lam}"
        )
    return TelescopeConfig(
        set_body=_set_body(_require(body, "set", "telescope config"), "set"),
        horizon=float(_require(body, "horizon", "telescope config")),
        intervals=tuple(intervals),
        initial=_initial_spec(_require(body, "initial", "telescope config"), "initial"),
        c1=float(body["c1"]) if "c1" in body else None,
        lam=lam,
        l1=float(body["l1"]) if "l1" in body else None,
        depth=int(body["depth"]) if "depth" in body else None,
        nodes_per_component=int(body.get("nodes_per_component", 16)),
        max_rows=int(body.get("max_rows", 6)),
        fit_n_values=_floats(body.get("fit_n_values", (2.0, 4.0, 6.0)), "fit_n_values"),
        fit_samples_per_n=int(body.get("fit_samples_per_n", 16)),
        seed=int(body.get("seed", 0)),
    )


_PARSERS = {
    "propagate": _parse_propagate,
    "decay-check": _parse_decay_check,
    "thickness": _parse_thickness,
    "spectral-fit": _parse_spectral_fit,
    "interp-verify": _parse_interp_verify,
    "telescope": _parse_telescope,
}


def parse_config(body: dict, kind: str):
    if kind not in _KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    if not isinstance(body, dict):
        raise ConfigError("config root must be a JSON object")
    stated = body.get("kind")
    if stated is not None and stated != kind:
        raise ConfigError(f"config kind {stated!r} does not match subcommand {kind!r}")
    try:
        return _PARSERS[kind](body)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} config: {exc}") from exc


def load_config(path, kind: str):
    """Load and validate one experiment config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            body = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(body, kind)


def resolved_dict(cfg) -> dict:
    """Plain-JSON view of a resolved config, for the run manifest."""
    return asdict(cfg)
