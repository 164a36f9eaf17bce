"""Run configuration files and the built-in presets.

A configuration is an INI file (``key = value`` under ``[section]``
headers).  Unknown sections and keys are rejected, and every problem found
is reported in a single :class:`~rivet.errors.ConfigError`.

Sections
--------
``[experiment]``
    ``kind`` (toy-am, toy-em, toy-global, toy-viscous, snap, fem) and an
    optional ``preset`` (ct, lshape) whose values are used as defaults.
``[output]``
    ``dir``, ``snapshot_every``, ``vtk``.
``[mesh]``
    ``file`` (relative to the config file) or ``generator`` (ct, lshape,
    rectangle) with its size parameters.
``[material]``, ``[norm]``, ``[em]``, ``[auglag]``, ``[newton]``
    Solver and model parameters (FEM runs).
``[loading]``
    Displacement-controlled set: ``set``, ``component`` (x or y),
    ``u_max`` reached at ``T`` (default: ``em.t_end``).
``[supports]``
    ``<node set> = x | y | xy`` fixes those components to zero.
``[traction]``
    ``<edge set> = tx, ty`` constant traction.
``[toy]``, ``[snap]``
    Options of the model problems.

For FEM runs ``em.t_end`` defaults to ``100 * rho``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .auglag import AugLagConfig
from .emdriver import EMConfig
from .errors import ConfigError
from .fem2d.material import MaterialParams
from .norms import NormSpec

EXPERIMENTS = ("toy-am", "toy-em", "toy-global", "toy-viscous", "snap", "fem")
TOY_KINDS = EXPERIMENTS[:4]
COMPONENTS = {"x": 0, "y": 1}


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _choice(*options):
    def conv(text):
        v = text.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return v
    return conv


# section -> key -> converter; [supports] and [traction] take free keys
SCHEMA = {
    "experiment": {"kind": _choice(*EXPERIMENTS), "preset": _choice("ct", "lshape")},
    "output": {"dir": str, "snapshot_every": int, "vtk": _bool},
    "mesh": {"file": str, "generator": _choice("ct", "lshape", "rectangle"),
             "h_fine": float, "h_coarse": float, "band": float, "size": float, "h": float,
             "width": float, "height": float, "nx": int, "ny": int},
    "material": {"E": float, "nu": float, "gc": float, "l": float, "k": float},
    "norm": {"kind": _choice("lp", "h1"), "p": int, "s_floor": _opt_float},
    "em": {"rho": float, "t_end": float, "stag_tol": float, "max_am_iters": int,
           "max_steps": int},
    "auglag": {f.name: (int if f.type in (int, "int") else float) for f in fields(AugLagConfig)},
    "newton": {"tol_rel": float, "atol": float, "max_it": int},
    "loading": {"set": str, "component": _choice("x", "y"), "u_max": float, "T": float},
    "supports": None,
    "traction": None,
    "toy": {"z0": float, "rho": float, "dt": float, "t_end": float, "n_am": int,
            "epsilon": float, "load": _bool, "reduced_energy_t": _opt_float,
            "stable_set_dt": float, "stable_set_dz": float},
    "snap": {"variant": _choice("em", "local", "global"), "rho": float, "dt": float,
             "F0": float, "rate": float, "t_end": float, "u0": _opt_float},
}

PRESETS = {
    "ct": {
        "experiment": {"kind": "fem"},
        "mesh": {"generator": "ct", "h_fine": "0.025", "h_coarse": "0.1", "band": "0.1"},
        "material": {"E": "100", "nu": "0.3", "gc": "1", "l": "0.05"},
        "norm": {"kind": "lp", "p": "4"},
        "em": {"rho": "0.01", "stag_tol": "1e-5"},
        "auglag": {"alpha1_init": "1000", "alpha2_init": "1000"},
        "loading": {"set": "right", "component": "x", "u_max": "0.3"},
        "supports": {"left": "x", "anchor": "y"},
        "output": {"snapshot_every": "20"},
    },
    "lshape": {
        "experiment": {"kind": "fem"},
        "mesh": {"generator": "lshape", "size": "500", "h": "19.23"},
        "material": {"E": "25840", "nu": "0.18", "gc": "0.65", "l": "10"},
        "norm": {"kind": "lp", "p": "4"},
        "em": {"rho": "0.08658", "stag_tol": "1e-4"},
        "auglag": {"alpha1_init": "1000", "alpha2_init": "1000"},
        "loading": {"set": "load", "component": "y", "u_max": "0.8"},
        "supports": {"bottom": "xy"},
        "output": {"snapshot_every": "20"},
    },
}


@dataclass
class MeshSpec:
    """Either a mesh file or a generator name with keyword arguments."""

    file: Path | None = None
    generator: str | None = None
    options: dict = field(default_factory=dict)

    def build(self):
        from .fem2d import mesh as m
        if self.file is not None:
            return m.load_mesh(self.file)
        if self.generator == "ct":
            return m.ct_like_mesh(**self.options)
        if self.generator == "lshape":
            return m.l_shape_mesh(**self.options)
        o = self.options
        xs = np.linspace(0.0, o.get("width", 1.0), o.get("nx", 10) + 1)
        ys = np.linspace(0.0, o.get("height", 1.0), o.get("ny", 10) + 1)
        return m.rectangle(xs, ys)


@dataclass
class LoadSpec:
    """``u(t) = u_max * t / T`` on one component of a node set."""

    node_set: str
    component: int
    u_max: float
    T: float


@dataclass
class ToyOptions:
    z0: float = 33.5
    rho: float = 1e-3
    dt: float = 1e-3
    t_end: float = 2.0
    n_am: int = 20
    epsilon: float = 1e-2
    load: bool = True
    reduced_energy_t: float | None = None
    stable_set_dt: float = 0.01
    stable_set_dz: float = 0.25


@dataclass
class SnapOptions:
    variant: str = "em"
    rho: float = 0.01
    dt: float = 0.01
    F0: float = -0.1
    rate: float = 0.25
    t_end: float = 2.0
    u0: float | None = None


@dataclass
class RunConfig:
    """Validated description of one run."""

    experiment: str
    output_dir: Path
    preset: str | None = None
    mesh: MeshSpec | None = None
    em: EMConfig | None = None
    auglag: AugLagConfig = field(default_factory=AugLagConfig)
    newton: dict = field(default_factory=dict)
    material: MaterialParams | None = None
    norm: NormSpec = field(default_factory=NormSpec)
    loading: LoadSpec | None = None
    supports: list = field(default_factory=list)    # (node set, component)
    tractions: list = field(default_factory=list)   # (edge set, (tx, ty))
    snapshot_every: int = 0
    vtk: bool = True
    toy: ToyOptions = field(default_factory=ToyOptions)
    snap: SnapOptions = field(default_factory=SnapOptions)


def _read(path):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (configparser.Error, OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    return {s: dict(cp[s]) for s in cp.sections()}


def _merge(base, over):
    out = {s: dict(v) for s, v in base.items()}
    for s, kv in over.items():
        out.setdefault(s, {}).update(kv)
    return out


def parse_config(path, overrides=None) -> RunConfig:
    """Read, merge with the named preset (if any) and validate a config file.

    Relative mesh paths are resolved against the file's directory; the
    output directory is taken relative to the working directory.
    """
    path = Path(path)
    raw = _read(path)
    if overrides:
        raw = _merge(raw, overrides)
    return build_config(raw, base_dir=path.parent)


def preset_config(name, rho=None, out=None) -> RunConfig:
    """A preset as a RunConfig, optionally with ``rho`` and the output directory replaced."""
    over = {"experiment": {"preset": name}}
    if rho is not None:
        over["em"] = {"rho": repr(float(rho))}
    if out is not None:
        over["output"] = {"dir": str(out)}
    return build_config(over)


def build_config(raw, base_dir=Path(".")) -> RunConfig:
    """Validate a ``{section: {key: text}}`` mapping (see the module docstring)."""
    problems = []
    preset = raw.get("experiment", {}).get("preset")
    if preset is not None:
        key = preset.strip().lower()
        if key in PRESETS:
            raw = _merge(PRESETS[key], raw)
        # an unknown preset name is reported by the schema check below

    vals = {}
    for sec, kv in raw.items():
        if sec not in SCHEMA:
            problems.append(f"unknown section [{sec}]")
            continue
        spec = SCHEMA[sec]
        vals[sec] = {}
        for k, text in kv.items():
            if spec is None:
                vals[sec][k] = text
                continue
            if k not in spec:
                problems.append(f"[{sec}] unknown key {k!r}")
                continue
            try:
                vals[sec][k] = spec[k](text)
            except ValueError as exc:
                problems.append(f"[{sec}] {k}: {exc}")

    exp = vals.get("experiment", {})
    kind = exp.get("kind")
    if kind is None and "kind" not in raw.get("experiment", {}):
        problems.append("[experiment] kind is required")
    out = vals.get("output", {})
    cfg = RunConfig(experiment=kind or "", output_dir=Path(out.get("dir", "output")),
                    preset=exp.get("preset"), snapshot_every=out.get("snapshot_every", 0),
                    vtk=out.get("vtk", True))
    if cfg.snapshot_every < 0:
        problems.append("[output] snapshot_every must be >= 0")
    _check_output_dir(cfg.output_dir, problems)

    if kind in TOY_KINDS:
        cfg.toy = _dataclass_from(ToyOptions, vals.get("toy", {}), "toy", problems)
        t = cfg.toy
        for name in ("rho", "dt", "t_end", "epsilon", "stable_set_dt", "stable_set_dz"):
            if not getattr(t, name) > 0:
                problems.append(f"[toy] {name} must be positive")
        if t.n_am < 1:
            problems.append("[toy] n_am must be >= 1")
    elif kind == "snap":
        cfg.snap = _dataclass_from(SnapOptions, vals.get("snap", {}), "snap", problems)
        for name in ("rho", "dt", "t_end"):
            if not getattr(cfg.snap, name) > 0:
                problems.append(f"[snap] {name} must be positive")
    elif kind == "fem":
        _fem_sections(cfg, vals, base_dir, problems)

    if problems:
        raise ConfigError(problems)
    return cfg


def _check_output_dir(d, problems):
    probe = d
    while not probe.exists() and probe != probe.parent:
        probe = probe.parent
    if probe.exists() and not (probe.is_dir() and os.access(probe, os.W_OK)):
        problems.append(f"[output] dir {str(d)!r} is not writable")


def _dataclass_from(cls, values, section, problems):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        problems.append(f"[{section}] {exc}")
        return cls()


def _fem_sections(cfg, vals, base_dir, problems):
    for sec in ("mesh", "material", "em", "loading"):
        if sec not in vals:
            problems.append(f"[{sec}] section is required for fem runs")

    if "mesh" in vals:
        mv = dict(vals["mesh"])
        f, gen = mv.pop("file", None), mv.pop("generator", None)
        if (f is None) == (gen is None):
            problems.append("[mesh] give exactly one of 'file' or 'generator'")
        elif f is not None:
            fp = Path(f) if Path(f).is_absolute() else Path(base_dir) / f
            if not fp.is_file():
                problems.append(f"[mesh] file {str(fp)!r} does not exist")
            if mv:
                problems.append(f"[mesh] keys {sorted(mv)} need a generator")
            cfg.mesh = MeshSpec(file=fp)
        else:
            allowed = {"ct": {"h_fine", "h_coarse", "band", "width", "height"},
                       "lshape": {"size", "h"},
                       "rectangle": {"width", "height", "nx", "ny"}}[gen]
            extra = set(mv) - allowed
            if extra:
                problems.append(f"[mesh] keys {sorted(extra)} do not apply to generator {gen!r}")
            cfg.mesh = MeshSpec(generator=gen, options={k: v for k, v in mv.items() if k in allowed})

    if "material" in vals:
        mv = vals["material"]
        missing = [k for k in ("E", "nu", "gc", "l") if k not in mv]
        if missing:
            problems.append(f"[material] missing {', '.join(missing)}")
        else:
            try:
                cfg.material = MaterialParams(**mv)
            except (TypeError, ValueError) as exc:
                problems.append(f"[material] {exc}")

    nv = vals.get("norm", {})
    try:
        cfg.norm = NormSpec(kind=nv.get("kind", "lp"), p=nv.get("p", 4.0), s_floor=nv.get("s_floor"))
    except (TypeError, ValueError) as exc:
        problems.append(f"[norm] {exc}")

    try:
        cfg.auglag = AugLagConfig(**vals.get("auglag", {}))
    except (TypeError, ValueError) as exc:
        problems.append(f"[auglag] {exc}")
    cfg.newton = dict(vals.get("newton", {}))

    if "em" in vals:
        ev = dict(vals["em"])
        if "rho" not in ev:
            problems.append("[em] rho is required")
        else:
            ev.setdefault("t_end", 100.0 * ev["rho"])
            ev["snapshot_every"] = cfg.snapshot_every
            try:
                cfg.em = EMConfig(**ev)
            except (TypeError, ValueError) as exc:
                problems.append(f"[em] {exc}")

    if "loading" in vals:
        lv = vals["loading"]
        missing = [k for k in ("set", "component", "u_max") if k not in lv]
        if missing:
            problems.append(f"[loading] missing {', '.join(missing)}")
        else:
            T = lv.get("T", cfg.em.t_end if cfg.em else None)
            if T is not None and not T > 0:
                problems.append("[loading] T must be positive")
            cfg.loading = LoadSpec(lv["set"], COMPONENTS[lv["component"]], lv["u_max"], T)

    for name, text in vals.get("supports", {}).items():
        comps = text.strip().lower()
        if comps not in ("x", "y", "xy"):
            problems.append(f"[supports] {name}: expected x, y or xy, got {text!r}")
            continue
        cfg.supports.extend((name, COMPONENTS[c]) for c in comps)

    for name, text in vals.get("traction", {}).items():
        try:
            tx, ty = (float(v) for v in text.replace(",", " ").split())
        except ValueError:
            problems.append(f"[traction] {name}: expected two numbers, got {text!r}")
            continue
        cfg.tractions.append((name, (tx, ty)))
