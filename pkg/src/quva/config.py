"""INI experiment configuration.

Example::

    [de]
    kappa2 = 1
    kappa1 = -1
    kappa0 = 8
    v_max = 0
    kappa_n = 0

    [ansatz]
    depth = 2
    layout = six_param

    [oracle]
    f0 = -1.0

    [search]
    p_c = 4
    seed = 1

Required keys: ``de.kappa2``, ``de.kappa1``, ``de.kappa0``, ``ansatz.depth``
and ``search.p_c``. Everything else has a default.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .ansatz import AnsatzSpec
from .errors import ValidationError
from .expectation import MeasurementConfig
from .operators import DEProblem, PotentialSpec
from .search import SearchConfig


class ConfigError(ValidationError):
    """Unparseable or invalid configuration; carries a located diagnostic."""


@dataclass(frozen=True)
class OracleSpec:
    f0: float
    root: int = 0
    scaling: str = "matched"


@dataclass(frozen=True)
class CorrelationSpec:
    n_samples: int = 500
    depths: Tuple[int, ...] = (0, 1, 2, 3)
    kappa_range: float = 50.0
    seed: int = 0


@dataclass
class ExperimentConfig:
    problem: DEProblem
    potential: PotentialSpec
    ansatz: AnsatzSpec
    search: SearchConfig
    measurement: MeasurementConfig
    oracle: Optional[OracleSpec] = None
    correlation: CorrelationSpec = field(default_factory=CorrelationSpec)
    output_dir: Path = Path("quva-out")
    emit_plots: bool = True
    source_text: str = ""
    source_name: str = "config.ini"


_REQUIRED = {"de": ("kappa2", "kappa1", "kappa0"), "ansatz": ("depth",), "search": ("p_c",)}
_KNOWN = {
    "de": {"kappa2", "kappa1", "kappa0", "v_max", "kappa_n", "n_qubits"},
    "potential": {"kind", "values"},
    "ansatz": {"depth", "layout"},
    "oracle": {"f0", "root", "scaling"},
    "search": {"n_random_init", "n_guided", "p_c", "candidate_pool_size", "seed", "refit_every",
               "length_scale", "hyperparameter_mode", "prior_mean"},
    "measurement": {"shots", "seed", "mixed_path"},
    "output": {"output_dir", "emit_plots"},
    "correlation": {"n_samples", "depths", "kappa_range", "seed"},
}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, strict: bool):
        self.parser = parser
        self.lines = text.splitlines()
        self.strict = strict

    def _line(self, section: str, key: str) -> str:
        in_section = False
        for i, raw in enumerate(self.lines, 1):
            s = raw.strip()
            if s.startswith("["):
                in_section = s.strip("[]").strip() == section
            elif in_section and re.match(rf"{re.escape(key)}\s*[=:]", s):
                return f"line {i}"
        return "no line"

    def has(self, section: str, key: str) -> bool:
        return self.parser.has_option(section, key) and self.parser.get(section, key).strip() != ""

    def raw(self, section: str, key: str) -> Optional[str]:
        if not self.has(section, key):
            if self.strict and key in _REQUIRED.get(section, ()):
                raise ConfigError(f"[{section}] missing required field '{key}'")
            return None
        return self.parser.get(section, key).strip()

    def _convert(self, section, key, conv, what, default):
        raw = self.raw(section, key)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(
                f"[{section}] {key} = {raw!r} ({self._line(section, key)}): expected {what}"
            ) from None

    def real(self, section, key, default=None):
        return self._convert(section, key, float, "a real number", default)

    def integer(self, section, key, default=None):
        return self._convert(section, key, int, "an integer", default)

    def flag(self, section, key, default=None):
        def conv(s):
            low = s.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(s)
        return self._convert(section, key, conv, "a boolean", default)

    def text(self, section, key, default=None):
        return self._convert(section, key, str, "text", default)

    def reals(self, section, key, default=None):
        return self._convert(section, key, lambda s: tuple(float(v) for v in s.split(",")), "comma-separated reals", default)

    def integers(self, section, key, default=None):
        return self._convert(section, key, lambda s: tuple(int(v) for v in s.split(",")), "comma-separated integers", default)


_FALLBACK = {("de", "kappa2"): 1.0, ("de", "kappa1"): 0.0, ("de", "kappa0"): 0.0,
             ("ansatz", "depth"): 0, ("search", "p_c"): 1.0}


def parse_config(text: str, source_name: str = "config.ini", strict: bool = True) -> ExperimentConfig:
    """Parse INI text. Raises :class:`ConfigError` with a located message.

    ``strict=False`` (the correlation command) fills the run-only required
    keys with neutral values instead of rejecting the file.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source_name)
    except configparser.Error as exc:
        raise ConfigError(f"{source_name}: {exc}") from None
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(f"[{section}] unknown field '{key}'")
    if strict:
        for section in _REQUIRED:
            if not parser.has_section(section):
                raise ConfigError(f"missing section [{section}] (needs {', '.join(_REQUIRED[section])})")
    r = _Reader(parser, text, strict)
    try:
        depth = r.integer("ansatz", "depth", _FALLBACK["ansatz", "depth"])
        problem = DEProblem(
            kappa2=r.real("de", "kappa2", _FALLBACK["de", "kappa2"]),
            kappa1=r.real("de", "kappa1", _FALLBACK["de", "kappa1"]),
            kappa0=r.real("de", "kappa0", _FALLBACK["de", "kappa0"]),
            v_max=r.real("de", "v_max", 0.0),
            kappa_n=r.real("de", "kappa_n", 0.0),
            n_qubits=r.integer("de", "n_qubits", 3),
            depth=depth,
        )
        kind = r.text("potential", "kind", "harmonic")
        potential = PotentialSpec(kind, problem.v_max, r.reals("potential", "values"))
        ansatz = AnsatzSpec(problem.n_qubits, depth, r.text("ansatz", "layout", "six_param"))
        defaults = SearchConfig()
        search = SearchConfig(
            n_random_init=r.integer("search", "n_random_init", defaults.n_random_init),
            n_guided=r.integer("search", "n_guided", defaults.n_guided),
            p_c=r.real("search", "p_c", _FALLBACK["search", "p_c"]),
            candidate_pool_size=r.integer("search", "candidate_pool_size", defaults.candidate_pool_size),
            seed=r.integer("search", "seed", defaults.seed),
            refit_every=r.integer("search", "refit_every", defaults.refit_every),
            length_scale=r.real("search", "length_scale", defaults.length_scale),
            hyperparameter_mode=r.text("search", "hyperparameter_mode", defaults.hyperparameter_mode),
            prior_mean=r.text("search", "prior_mean", defaults.prior_mean),
        )
        shots_raw = r.text("measurement", "shots", "exact")
        shots = None if shots_raw.lower() in ("exact", "none") else r.integer("measurement", "shots")
        measurement = MeasurementConfig(
            shots=shots,
            seed=r.integer("measurement", "seed", 0),
            mixed_path=r.text("measurement", "mixed_path", "direct"),
        )
        oracle = None
        if r.has("oracle", "f0"):
            oracle = OracleSpec(r.real("oracle", "f0"), r.integer("oracle", "root", 0),
                                r.text("oracle", "scaling", "matched"))
            if oracle.scaling not in ("matched", "peak"):
                raise ConfigError(f"[oracle] scaling = {oracle.scaling!r}: expected matched or peak")
        corr_defaults = CorrelationSpec()
        correlation = CorrelationSpec(
            n_samples=r.integer("correlation", "n_samples", corr_defaults.n_samples),
            depths=r.integers("correlation", "depths", corr_defaults.depths),
            kappa_range=r.real("correlation", "kappa_range", corr_defaults.kappa_range),
            seed=r.integer("correlation", "seed", corr_defaults.seed),
        )
    except ConfigError:
        raise
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(
        problem=problem,
        potential=potential,
        ansatz=ansatz,
        search=search,
        measurement=measurement,
        oracle=oracle,
        correlation=correlation,
        output_dir=Path(r.text("output", "output_dir", "quva-out")),
        emit_plots=r.flag("output", "emit_plots", True),
        source_text=text,
        source_name=source_name,
    )


def load_config(path, strict: bool = True) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path.name, strict)


def dump_fields(cfg: ExperimentConfig) -> Dict[str, Dict[str, object]]:
    """Resolved values (defaults filled in), for summary.json."""
    from dataclasses import asdict

    def plain(obj):
        d = asdict(obj)
        return {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}

    out = {
        "de": plain(cfg.problem),
        "potential": plain(cfg.potential),
        "ansatz": plain(cfg.ansatz),
        "search": plain(cfg.search),
        "measurement": plain(cfg.measurement),
    }
    if cfg.oracle is not None:
        out["oracle"] = plain(cfg.oracle)
    return out
