"""Experiment configuration files.

The format is TOML restricted to one level of sections with scalar or
list-of-number values.  Every section and key is optional except
``[landau]`` and ``[covariance]``; unknown sections or keys are errors.

Example::

    [landau]
    B = 1.0
    ell = 0
    n = 64

    [covariance]
    kind = "gaussian"
    c0 = 1.0
    tau = 2.0

    [mc]
    realizations = 200
    seed = 7
"""

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .covariance import CovarianceModel, MuChoice
from .errors import ConfigError, LandauDosError
from .landau import LandauBasis

__all__ = ["ExperimentConfig", "load_config", "parse_config", "dumps_config", "run_id"]


@dataclass(frozen=True)
class LandauSection:
    B: float = 1.0
    ell: int = 0
    n: int = 64


@dataclass(frozen=True)
class CovarianceSection:
    kind: str = "gaussian"
    c0: float = None
    tau: float = None
    alpha2: float = None


@dataclass(frozen=True)
class MuSection:
    # kind None means the coherent density of psi_{ell,0} for the configured level
    kind: str = None
    ell: int = None
    k: int = 0
    radii: tuple = None
    weights: tuple = None


@dataclass(frozen=True)
class McSection:
    sampler: str = "spectral_field"
    modes: int = 4096
    realizations: int = 100
    seed: int = 0
    window: tuple = None
    bins: int = 201
    proposal: str = "form_factor"
    surrogate_btau2: float = 0.01


@dataclass(frozen=True)
class GammaSection:
    n: int = 32
    restarts: int = 8
    tol: float = 1e-10
    max_iter: int = 10000


@dataclass(frozen=True)
class BoundsSection:
    # energies in units of sigma_ell unless given explicitly
    energy_min: float = None
    energy_max: float = None
    points: int = 201


@dataclass(frozen=True)
class OutputsSection:
    dir: str = "out"
    raw_eigenvalues: bool = False


@dataclass(frozen=True)
class ReportSection:
    slack: float = 3.0


SECTIONS = {
    "landau": LandauSection,
    "covariance": CovarianceSection,
    "mu": MuSection,
    "mc": McSection,
    "gamma": GammaSection,
    "bounds": BoundsSection,
    "outputs": OutputsSection,
    "report": ReportSection,
}
REQUIRED = ("landau", "covariance")
_TYPES = {
    "float": (int, float),
    "int": (int,),
    "str": (str,),
    "bool": (bool,),
    "tuple": (list, tuple),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration (one attribute per section)."""

    landau: LandauSection = field(default_factory=LandauSection)
    covariance: CovarianceSection = field(default_factory=CovarianceSection)
    mu: MuSection = field(default_factory=MuSection)
    mc: McSection = field(default_factory=McSection)
    gamma: GammaSection = field(default_factory=GammaSection)
    bounds: BoundsSection = field(default_factory=BoundsSection)
    outputs: OutputsSection = field(default_factory=OutputsSection)
    report: ReportSection = field(default_factory=ReportSection)

    def basis(self):
        L = self.landau
        return LandauBasis(L.B, L.ell, L.n)

    def model(self):
        c = self.covariance
        return CovarianceModel(c.kind, c0=c.c0, tau=c.tau, alpha2=c.alpha2)

    def mu_choice(self):
        m = self.mu
        if m.kind is None:
            return MuChoice("coherent_density", ell=self.landau.ell, k=0)
        ell = self.landau.ell if m.ell is None else m.ell
        return MuChoice(m.kind, ell=ell, k=m.k, radii=m.radii, weights=m.weights)

    def replace(self, section, **changes):
        """Copy with some keys of one section changed."""
        new = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: new})


def _check_type(section, key, value, annotation):
    if value is None:
        return value
    name = annotation if isinstance(annotation, str) else annotation.__name__
    allowed = _TYPES[name]
    if isinstance(value, bool) and name != "bool":
        raise ConfigError(f"[{section}] {key}: expected {name}, got a boolean")
    if not isinstance(value, allowed):
        raise ConfigError(f"[{section}] {key}: expected {name}, got {type(value).__name__}")
    if name == "float":
        return float(value)
    if name == "tuple":
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"[{section}] {key}: expected a list of numbers")
        return tuple(float(v) for v in value)
    return value


def parse_config(data):
    """Build an :class:`ExperimentConfig` from a parsed mapping."""
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    for name in REQUIRED:
        if name not in data:
            raise ConfigError(f"missing section [{name}]")
    sections = {}
    for name, cls in SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"[{name}] must be a table")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        bad = set(raw) - set(fields)
        if bad:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        values = {k: _check_type(name, k, v, fields[k].type) for k, v in raw.items()}
        sections[name] = cls(**values)
    cfg = ExperimentConfig(**sections)
    _validate(cfg)
    return cfg


def _validate(cfg):
    try:
        cfg.basis()
        cfg.model()
        cfg.mu_choice()
    except LandauDosError as exc:
        raise ConfigError(str(exc)) from exc
    mc = cfg.mc
    if mc.window is not None and (len(mc.window) != 2 or not mc.window[1] > mc.window[0]):
        raise ConfigError("[mc] window must be [low, high] with low < high")
    if not 0 <= mc.seed < 2**64:
        raise ConfigError("[mc] seed must be an unsigned 64-bit integer")
    if mc.realizations < 2 or mc.bins < 10:
        raise ConfigError("[mc] needs realizations >= 2 and bins >= 10")
    if cfg.gamma.restarts < 1 or not cfg.gamma.tol > 0 or cfg.gamma.n < 1:
        raise ConfigError("[gamma] needs restarts >= 1, tol > 0 and n >= 1")
    if cfg.bounds.points < 2:
        raise ConfigError("[bounds] needs at least two points")
    if not cfg.report.slack >= 0:
        raise ConfigError("[report] slack must be non-negative")


def load_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ConfigError("non-finite values cannot be serialized")
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return "[" + ", ".join(_format_value(v) for v in value) + "]"


def dumps_config(cfg, include_outputs=True):
    """Serialize a configuration to TOML text; keys with value None are omitted."""
    lines = []
    for name in SECTIONS:
        if name == "outputs" and not include_outputs:
            continue
        section = getattr(cfg, name)
        items = [(f.name, getattr(section, f.name)) for f in dataclasses.fields(section)]
        items = [(k, v) for k, v in items if v is not None]
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_format_value(v)}" for k, v in items)
    return "\n".join(lines) + "\n"


def run_id(cfg):
    """Short hash of the canonical configuration, output settings excluded."""
    text = dumps_config(cfg, include_outputs=False)
    return hashlib.sha256(text.encode()).hexdigest()[:16]
