"""Declarative scenario configuration.

A scenario is one YAML file: metric, domain, contact angle, initial height,
flow and elliptic solver controls, output location.  Validation is eager and
collects every violation (with key paths) instead of stopping at the first;
unknown keys are rejected so typos cannot silently change a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigurationError
from .grid import DomainSpec, build_grid
from .metrics import make_metric
from .operators import ContactAngle

SCHEMA_VERSION = 1
MAX_RESOLUTION = 4096

_METRIC_NAMES = ("euclidean", "poincare_disk", "hyperbolic_halfplane",
                 "sphere", "hyperbolic_polar", "conformal_poly", "rot_poly")

_TOP_KEYS = {"schema_version", "name", "metric", "domain", "phi", "u0",
             "flow", "translator", "output", "seed", "sweep", "verify"}
_SECTION_KEYS = {
    "metric": {"name", "coeffs"},
    "domain": {"kind", "bounds", "resolution", "inner"},
    "phi": {"kind", "value", "values", "amplitude", "mode", "offset",
            "slope", "phi0"},
    "u0": {"kind", "slope", "offset", "amplitude", "seed", "name"},
    "flow": {"t_end", "c_safe", "sample_every", "delta_stop", "max_steps"},
    "translator": {"eps_start", "n_eps", "ratio", "tol", "polish"},
    "sweep": {"parameter", "values"},
    "verify": {"fixture", "k_r_budget"},
}


@dataclass
class ScenarioConfig:
    """Validated scenario; builder methods construct the runtime objects."""

    name: str
    metric: dict
    domain: dict
    phi: dict
    u0: dict = field(default_factory=lambda: {"kind": "zero"})
    flow: dict = field(default_factory=dict)
    translator: dict = field(default_factory=dict)
    output: str = "out"
    seed: int = 0
    sweep: dict | None = None
    verify: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self):
        return {"schema_version": self.schema_version, "name": self.name,
                "metric": self.metric, "domain": self.domain, "phi": self.phi,
                "u0": self.u0, "flow": self.flow, "translator": self.translator,
                "output": self.output, "seed": self.seed,
                "sweep": self.sweep, "verify": self.verify}

    # -- builders -------------------------------------------------------------

    def build_metric(self):
        params = {k: v for k, v in self.metric.items() if k != "name"}
        return make_metric(self.metric["name"], **params)

    def domain_spec(self):
        d = self.domain
        kind = d["kind"]
        res = d["resolution"]
        if kind == "interval":
            return DomainSpec.interval(d["bounds"][0], d["bounds"][1], res[0])
        if kind == "rectangle":
            return DomainSpec.rectangle(*d["bounds"], res[0], res[1])
        b = d["bounds"]
        r_lo, r_hi = (None, b[0]) if len(b) == 1 else (b[0], b[1])
        return DomainSpec.polar(r_hi, res[0], res[1], r_lo=r_lo,
                                inner=d.get("inner", "symmetry"))

    def build_grid(self):
        return build_grid(self.domain_spec(), self.build_metric())

    def build_phi(self):
        return build_phi(self.phi)

    def build_u0(self, grid):
        return build_u0(self.u0, grid, self.seed)

    def flow_params(self):
        from .flow import FlowParams
        kw = dict(self.flow)
        kw.setdefault("t_end", 1.0)
        return FlowParams(**kw)

    def translator_kwargs(self):
        return dict(self.translator)


def build_phi(spec: dict) -> ContactAngle:
    kind = spec.get("kind", "constant")
    phi0 = spec.get("phi0")
    if kind == "constant":
        return ContactAngle.constant(spec["value"], phi0=phi0)
    if kind == "per_segment":
        return ContactAngle.per_segment(spec["values"], phi0=phi0)
    if kind == "trig":
        amp = float(spec["amplitude"])
        mode = int(spec.get("mode", 1))
        off = float(spec.get("offset", 0.0))

        def fn(pts, u, amp=amp, mode=mode, off=off):
            # tangential coordinate: theta on polar faces, else arc parameter
            tau = pts[:, -1] if pts.shape[1] > 1 else np.zeros(len(pts))
            return off + amp * np.cos(mode * tau)
        p0 = phi0 if phi0 is not None else abs(off) + abs(amp)
        return ContactAngle(phi0=p0, segments={None: fn})
    if kind == "affine_u":
        off = float(spec.get("offset", 0.0))
        slope = float(spec.get("slope", 0.0))

        def fn(pts, u, off=off, slope=slope):
            return off + slope * np.asarray(u, float)
        p0 = phi0 if phi0 is not None else 0.99
        return ContactAngle(phi0=p0, segments={None: fn})
    raise ConfigurationError([f"phi.kind: unknown kind {kind!r}"])


def build_u0(spec: dict, grid, seed=0):
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return np.zeros(grid.shape)
    coords = np.meshgrid(*grid.axes, indexing="ij")
    if kind == "affine":
        slopes = np.atleast_1d(np.asarray(spec.get("slope", 0.0), float))
        u = float(spec.get("offset", 0.0)) * np.ones(grid.shape)
        for k, c in enumerate(coords):
            u = u + (slopes[k] if k < len(slopes) else 0.0) * c
        return u
    if kind == "smooth_random":
        from .translator import _smooth_random_field
        rng = np.random.default_rng(int(spec.get("seed", seed)))
        return _smooth_random_field(grid, rng, float(spec.get("amplitude", 0.5)))
    if kind == "exact":
        from . import exact
        name = spec["name"]
        if name == "grim_reaper":
            a = float(grid.axes[0][-1])
            return exact.grim_reaper(a).u_on(grid)
        if name == "tilted_minimal":
            es = exact.tilted_minimal(float(spec.get("slope", 1.0)),
                                      two_d=(grid.dim == 2))
            return es.u_on(grid)
        raise ConfigurationError([f"u0.name: unknown exact solution {name!r}"])
    raise ConfigurationError([f"u0.kind: unknown kind {kind!r}"])


def _check_keys(data, path, allowed, violations):
    for key in data:
        if key not in allowed:
            violations.append(f"{path}{key}: unknown key")


def _validate(raw):
    violations = []
    if not isinstance(raw, dict):
        return ["top level: expected a mapping"]
    _check_keys(raw, "", _TOP_KEYS, violations)
    for sec, allowed in _SECTION_KEYS.items():
        if sec in raw and raw[sec] is not None:
            if not isinstance(raw[sec], dict):
                violations.append(f"{sec}: expected a mapping")
            else:
                _check_keys(raw[sec], f"{sec}.", allowed, violations)

    metric = raw.get("metric") or {}
    if not isinstance(metric, dict) or "name" not in metric:
        violations.append("metric.name: required")
    elif metric["name"] not in _METRIC_NAMES:
        violations.append(f"metric.name: unknown metric {metric['name']!r}")

    domain = raw.get("domain") or {}
    kind = domain.get("kind") if isinstance(domain, dict) else None
    if kind not in ("interval", "rectangle", "polar"):
        violations.append("domain.kind: must be interval|rectangle|polar")
    else:
        need = {"interval": 1, "rectangle": 2, "polar": 2}[kind]
        res = domain.get("resolution")
        if not isinstance(res, (list, tuple)) or len(res) != need:
            violations.append(f"domain.resolution: expected {need} entries")
        else:
            for k, r in enumerate(res):
                if not isinstance(r, int) or not 8 <= r <= MAX_RESOLUTION:
                    violations.append(
                        f"domain.resolution[{k}]: must be an int in [8, {MAX_RESOLUTION}]")
        nb = {"interval": (2,), "rectangle": (4,), "polar": (1, 2)}[kind]
        bounds = domain.get("bounds")
        if not isinstance(bounds, (list, tuple)) or len(bounds) not in nb:
            violations.append(f"domain.bounds: expected {' or '.join(map(str, nb))} entries")

    phi = raw.get("phi") or {}
    if isinstance(phi, dict):
        phi0 = phi.get("phi0")
        ref = None
        if phi.get("kind", "constant") == "constant" and "value" in phi:
            ref = abs(float(phi["value"]))
        elif phi.get("kind") == "per_segment" and isinstance(phi.get("values"), dict):
            ref = max((abs(float(v)) for v in phi["values"].values()), default=0.0)
        elif phi.get("kind") == "trig":
            ref = abs(float(phi.get("offset", 0.0))) + abs(float(phi.get("amplitude", 0.0)))
        cap = float(phi0) if phi0 is not None else ref
        if cap is not None:
            if cap >= 1.0:
                violations.append(
                    "phi.phi0: the contact angle contract requires |Phi| <= phi0 < 1")
            elif ref is not None and ref > cap + 1e-12:
                violations.append("phi.value: exceeds phi0")
    else:
        violations.append("phi: expected a mapping")

    sweep = raw.get("sweep")
    if sweep:
        if "parameter" not in sweep or "values" not in sweep:
            violations.append("sweep: needs parameter and values")
        elif not isinstance(sweep["values"], (list, tuple)) or not sweep["values"]:
            violations.append("sweep.values: expected a non-empty list")

    sv = raw.get("schema_version", SCHEMA_VERSION)
    if sv != SCHEMA_VERSION:
        violations.append(f"schema_version: expected {SCHEMA_VERSION}, got {sv!r}")
    return violations


def config_from_dict(raw) -> ScenarioConfig:
    violations = _validate(raw)
    if violations:
        raise ConfigurationError(violations)
    return ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        metric=dict(raw["metric"]),
        domain=dict(raw["domain"]),
        phi=dict(raw["phi"]),
        u0=dict(raw.get("u0") or {"kind": "zero"}),
        flow=dict(raw.get("flow") or {}),
        translator=dict(raw.get("translator") or {}),
        output=str(raw.get("output", "out")),
        seed=int(raw.get("seed", 0)),
        sweep=dict(raw["sweep"]) if raw.get("sweep") else None,
        verify=dict(raw["verify"]) if raw.get("verify") else None,
        schema_version=int(raw.get("schema_version", SCHEMA_VERSION)))


def parse_config(path) -> ScenarioConfig:
    """Load and fully validate one scenario file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw)
