"""Strict scenario configuration: parse, validate, serialize.

Format: flat `key = value` pairs grouped under `[section]` or
`[section.sub]` headers, values are Python literals.  Unknown keys and
sections are errors; every admissibility assumption (positive
resistances and inertances, positive horizon and viscosity) is checked
at load time and all violations are reported together.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from . import lumped, mesh as meshmod, outlets
from .errors import ConfigError

SCHEMA_VERSION = 1

_SIGNAL_KEYS = {
    "constant": {"level"},
    "ramp": {"offset", "slope"},
    "sine": {"amplitude", "omega", "phase"},
    "smoothstep": {"level0", "level1", "t0", "t1"},
    "samples": {"times", "values"},
}

_SECTION_KEYS = {
    "geometry": {
        "kind",
        "length",
        "height",
        "nx",
        "ny",
        "trunk_length",
        "trunk_width",
        "branch_length",
        "branch_width",
        "half_angle_deg",
        "resolution",
        "refine",
    },
    "physics": {"nu"},
    "forcing": {"kind", "fx", "fy"},
    "initial": {"kind", "amplitude"},
    "time": {"T", "dt", "theta"},
    "solver": {"path", "m"},
    "output": {"vtk_interval"},
    "converge": {"spatial_levels", "temporal_dts", "temporal_theta"},
}

_DEFAULTS = {
    "geometry": {"refine": 0, "resolution": 2},
    "forcing": {"kind": "none"},
    "initial": {"kind": "zero", "amplitude": 1.0},
    "time": {"theta": 1.0},
    "solver": {"path": "full", "m": 0},
    "output": {"vtk_interval": 0},
    "converge": {"spatial_levels": 3, "temporal_dts": [0.2, 0.1, 0.05], "temporal_theta": 1.0},
}


def parse_sections(text):
    """Parse the raw nested-section format into {section: {key: value}}."""
    sections = {"": {}}
    current = ""
    violations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            parsed = ast.literal_eval(value.strip())
        except (ValueError, SyntaxError):
            violations.append(f"line {lineno}: unparseable value for {key!r}")
            continue
        if key in sections[current]:
            violations.append(f"line {lineno}: duplicate key {key!r}")
            continue
        sections[current][key] = parsed
    if violations:
        raise ConfigError(violations)
    return sections


@dataclass
class ScenarioConfig:
    """Validated scenario; raw holds the normalized section/key dict."""

    raw: dict = field(repr=False)
    geometry: dict = field(default_factory=dict)
    nu: float = 1.0
    outlet_specs: list = field(default_factory=list)
    forcing_spec: dict = field(default_factory=dict)
    initial_spec: dict = field(default_factory=dict)
    T: float = 1.0
    dt: float = 0.1
    theta: float = 1.0
    solver_path: str = "full"
    reduced_m: int = 0
    vtk_interval: int = 0
    converge_spec: dict = field(default_factory=dict)

    # -- realized objects ---------------------------------------------

    def build_mesh(self):
        g = self.geometry
        if g["kind"] == "channel":
            m = meshmod.build_channel(g["length"], g["height"], g["nx"], g["ny"])
        else:
            m = meshmod.build_bifurcation(
                g["trunk_length"],
                g["trunk_width"],
                g["branch_length"],
                g["branch_width"],
                g["half_angle_deg"],
                g["resolution"],
            )
        for _ in range(g.get("refine", 0)):
            m = meshmod.refine_uniform(m)
        return m

    def forcing(self):
        spec = self.forcing_spec
        if spec["kind"] == "none":
            return None
        fx, fy = spec.get("fx", 0.0), spec.get("fy", 0.0)

        def f(xy, t):
            out = np.empty_like(xy)
            out[:, 0] = fx
            out[:, 1] = fy
            return out

        return f

    def initial_field(self, space):
        spec = self.initial_spec
        if spec["kind"] == "zero":
            return np.zeros(space.num_vdofs)
        g = self.geometry
        amp = spec.get("amplitude", 1.0)
        if spec["kind"] == "poiseuille":
            h = g["height"]
            return space.interpolate(
                lambda xy, t: np.column_stack(
                    [amp * xy[:, 1] * (h - xy[:, 1]), np.zeros(len(xy))]
                )
            )
        # "bump": curl of sin(pi x / L) y^2 (H - y)^2, zero on the boundary
        L, h = g["length"], g["height"]

        def bump(xy, t):
            x, y = xy[:, 0], xy[:, 1]
            kx = math.pi / L
            return amp * np.column_stack(
                [
                    np.sin(kx * x) * 2 * y * (h - y) * (h - 2 * y),
                    -kx * np.cos(kx * x) * y**2 * (h - y) ** 2,
                ]
            )

        return space.interpolate(bump)

    def lumped_network(self):
        g = self.geometry
        if g["kind"] == "channel":
            return lumped.channel_network(g["length"], g["height"], self.nu, self.outlet_specs)
        return lumped.bifurcation_network(
            g["trunk_length"],
            g["trunk_width"],
            g["branch_length"],
            g["branch_width"],
            self.nu,
            self.outlet_specs,
        )


def _build_signal(spec, kind, violations, where):
    try:
        if kind == "constant":
            return outlets.Constant(spec["level"])
        if kind == "ramp":
            return outlets.Ramp(spec["offset"], spec["slope"])
        if kind == "sine":
            return outlets.Sinusoid(spec["amplitude"], spec["omega"], spec.get("phase", 0.0))
        if kind == "smoothstep":
            return outlets.SmoothStep(spec["level0"], spec["level1"], spec["t0"], spec["t1"])
        if kind == "samples":
            return outlets.Sampled(tuple(spec["times"]), tuple(spec["values"]))
    except KeyError as exc:
        violations.append(f"{where}: missing signal parameter {exc}")
        return None
    except ValueError as exc:
        violations.append(f"{where}: {exc}")
        return None
    violations.append(f"{where}: unknown signal kind {kind!r}")
    return None


def load_config_text(text):
    """Validate a config; raises ConfigError carrying all violations."""
    sections = parse_sections(text)
    violations = []

    top = sections.get("", {})
    for key in top:
        if key != "schema_version":
            violations.append(f"unknown top-level key {key!r}")
    if top.get("schema_version") != SCHEMA_VERSION:
        violations.append(
            f"schema_version must be {SCHEMA_VERSION}, got {top.get('schema_version')!r}"
        )

    outlet_sections = {}
    for name, keys in sections.items():
        if name == "":
            continue
        if name.startswith("outlet."):
            suffix = name.split(".", 1)[1]
            if not suffix.isdigit() or int(suffix) < 1:
                violations.append(f"bad outlet section name [{name}]")
            else:
                outlet_sections[int(suffix)] = keys
            continue
        if name not in _SECTION_KEYS:
            violations.append(f"unknown section [{name}]")
            continue
        for key in keys:
            if key not in _SECTION_KEYS[name]:
                violations.append(f"unknown key {key!r} in section [{name}]")

    merged = {}
    for sec, defaults in _DEFAULTS.items():
        merged[sec] = dict(defaults)
    for name in _SECTION_KEYS:
        merged.setdefault(name, {})
        merged[name].update(
            {k: v for k, v in sections.get(name, {}).items() if k in _SECTION_KEYS[name]}
        )

    # geometry
    geo = merged["geometry"]
    kind = geo.get("kind")
    if kind == "channel":
        for key in ("length", "height", "nx", "ny"):
            if key not in geo:
                violations.append(f"geometry: channel requires {key!r}")
    elif kind == "bifurcation":
        for key in ("trunk_length", "trunk_width", "branch_length", "branch_width", "half_angle_deg"):
            if key not in geo:
                violations.append(f"geometry: bifurcation requires {key!r}")
    else:
        violations.append(f"geometry: kind must be 'channel' or 'bifurcation', got {kind!r}")

    expected_outlets = {1, 2} if kind == "channel" else {1, 2, 3}
    if kind in ("channel", "bifurcation") and set(outlet_sections) != expected_outlets:
        violations.append(
            f"expected outlet sections {sorted(expected_outlets)}, got {sorted(outlet_sections)}"
        )

    # physics and admissibility assumptions
    nu = merged["physics"].get("nu")
    if nu is None:
        violations.append("physics: missing 'nu'")
    elif not nu > 0:
        violations.append("physics: viscosity positivity violated (nu must be > 0)")

    specs = []
    for k in sorted(outlet_sections):
        sec = outlet_sections[k]
        where = f"outlet {k}"
        allowed = {"lam", "gamma", "signal"}
        sig_kind = sec.get("signal")
        if sig_kind in _SIGNAL_KEYS:
            allowed |= _SIGNAL_KEYS[sig_kind]
        for key in sec:
            if key not in allowed:
                violations.append(f"unknown key {key!r} in section [outlet.{k}]")
        lam, gamma = sec.get("lam"), sec.get("gamma")
        if lam is None or gamma is None or sig_kind is None:
            violations.append(f"{where}: requires 'lam', 'gamma' and 'signal'")
            continue
        if not lam > 0:
            violations.append(
                f"{where}: resistance positivity violated (lambda must be > 0)"
            )
        if not gamma > 0:
            violations.append(
                f"{where}: inertance positivity violated (gamma must be > 0)"
            )
        signal = _build_signal(sec, sig_kind, violations, where)
        if signal is not None and lam > 0 and gamma > 0:
            specs.append(outlets.OutletSpec(k, lam, gamma, signal))

    tm = merged["time"]
    for key in ("T", "dt"):
        if key not in tm:
            violations.append(f"time: missing {key!r}")
    if "T" in tm and not tm["T"] > 0:
        violations.append("time: horizon positivity violated (T must be > 0)")
    if "dt" in tm and not tm["dt"] > 0:
        violations.append("time: step positivity violated (dt must be > 0)")
    if not 0.5 <= tm.get("theta", 1.0) <= 1.0:
        violations.append("time: theta must lie in [1/2, 1]")

    if merged["forcing"].get("kind") not in ("none", "constant"):
        violations.append("forcing: kind must be 'none' or 'constant'")
    if merged["initial"].get("kind") not in ("zero", "poiseuille", "bump"):
        violations.append("initial: kind must be 'zero', 'poiseuille' or 'bump'")
    elif merged["initial"]["kind"] != "zero" and kind == "bifurcation":
        violations.append("initial: nonzero initial fields are channel-only")
    if merged["solver"].get("path") not in ("full", "reduced", "both"):
        violations.append("solver: path must be 'full', 'reduced' or 'both'")

    if violations:
        raise ConfigError(sorted(violations))

    raw = {"": {"schema_version": SCHEMA_VERSION}}
    raw.update({name: dict(merged[name]) for name in sorted(_SECTION_KEYS)})
    for k in sorted(outlet_sections):
        raw[f"outlet.{k}"] = dict(outlet_sections[k])

    return ScenarioConfig(
        raw=raw,
        geometry=merged["geometry"],
        nu=nu,
        outlet_specs=specs,
        forcing_spec=merged["forcing"],
        initial_spec=merged["initial"],
        T=tm["T"],
        dt=tm["dt"],
        theta=tm.get("theta", 1.0),
        solver_path=merged["solver"]["path"],
        reduced_m=merged["solver"]["m"],
        vtk_interval=merged["output"]["vtk_interval"],
        converge_spec=merged["converge"],
    )


def load_config(path):
    with open(path) as fh:
        return load_config_text(fh.read())


def serialize_config(cfg):
    """Canonical text form; load(serialize(load(x))) is identical."""
    lines = [f"schema_version = {SCHEMA_VERSION}", ""]
    for name in sorted(cfg.raw):
        if name == "":
            continue
        lines.append(f"[{name}]")
        for key in sorted(cfg.raw[name]):
            lines.append(f"{key} = {cfg.raw[name][key]!r}")
        lines.append("")
    return "\n".join(lines)
