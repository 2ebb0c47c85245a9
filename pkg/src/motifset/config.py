"""Experiment configuration: dataclass, INI-style files, CLI overrides.

Config files use ``key = value`` lines under the sections ``[dataset]``,
``[model]``, ``[topology]``, ``[train]``, ``[evolution]``, ``[score]``,
``[seeds]``, and ``[output]``.  Every knob has a default, every seed is
explicit after resolution, and the resolved config echoes back to the same
format, so a run's ``manifest.txt`` reproduces the run when fed back in.
Unknown sections (such as the ``[result]`` block a manifest carries) are
ignored on load.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .evolution import LISTING4, MAGNITUDE_SET
from .network import HE_NORMAL, HE_UNIFORM, INDEPENDENT, SHARED
from .topology import ER_MODE, FIXED_MODE

EVOLUTION_NONE = "none"

# (section, key) -> dataclass field name; order defines the echo layout
_LAYOUT = [
    ("dataset", "kind", "dataset_kind"),
    ("dataset", "csv_path", "csv_path"),
    ("dataset", "label_column", "label_column"),
    ("dataset", "test_fraction", "test_fraction"),
    ("dataset", "train_images", "train_images"),
    ("dataset", "train_labels", "train_labels"),
    ("dataset", "test_images", "test_images"),
    ("dataset", "test_labels", "test_labels"),
    ("dataset", "cache_path", "cache_path"),
    ("dataset", "standardize", "standardize"),
    ("dataset", "train_limit", "train_limit"),
    ("dataset", "test_limit", "test_limit"),
    ("model", "hidden_sizes", "hidden_sizes"),
    ("model", "motif_size", "motif_size"),
    ("model", "weight_mode", "weight_mode"),
    ("model", "activation", "activation"),
    ("model", "init_scheme", "init_scheme"),
    ("topology", "density_mode", "density_mode"),
    ("topology", "density_value", "density_value"),
    ("train", "epochs", "epochs"),
    ("train", "learning_rate", "learning_rate"),
    ("train", "batch_size", "batch_size"),
    ("evolution", "mode", "evolution_mode"),
    ("evolution", "zeta", "zeta"),
    ("evolution", "epsilon_prune", "epsilon_prune"),
    ("evolution", "noise_scale", "noise_scale"),
    ("evolution", "period", "evolution_period"),
    ("score", "w_eff", "w_eff"),
    ("score", "w_acc", "w_acc"),
    ("seeds", "topology", "topology_seed"),
    ("seeds", "init", "init_seed"),
    ("seeds", "evolution", "evolution_seed"),
    ("seeds", "split", "split_seed"),
    ("seeds", "shuffle", "shuffle_seed"),
    ("output", "out_dir", "out_dir"),
]


@dataclass
class ExperimentConfig:
    """Every knob of one training run, flat, with defaults."""

    # dataset
    dataset_kind: str = "labeled_csv"  # labeled_csv | idx
    csv_path: str = ""
    label_column: int = -1
    test_fraction: float = 1.0 / 3.0
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    cache_path: str = ""
    standardize: bool = True
    train_limit: int = 0  # 0 = use everything
    test_limit: int = 0
    # model
    hidden_sizes: tuple[int, ...] = (256, 256)
    motif_size: int = 1
    weight_mode: str = SHARED
    activation: str = "relu"
    init_scheme: str = HE_UNIFORM
    # topology sampling
    density_mode: str = ER_MODE
    density_value: float = 20.0
    # training loop; batch_size 0 means full batch
    epochs: int = 10
    learning_rate: float = 0.05
    batch_size: int = 64
    # evolution
    evolution_mode: str = MAGNITUDE_SET
    zeta: float = 0.3
    epsilon_prune: float = 0.1
    noise_scale: float = 0.01
    evolution_period: int = 1
    # scoring defaults
    w_eff: float = 0.1
    w_acc: float = 0.9
    # seeds (all explicit so a manifest fully pins the run)
    topology_seed: int = 42
    init_seed: int = 42
    evolution_seed: int = 42
    split_seed: int = 42
    shuffle_seed: int = 42
    # output
    out_dir: str = "runs/latest"

    def validate(self) -> "ExperimentConfig":
        """Raise :class:`ConfigError` on out-of-range or inconsistent knobs."""
        checks = [
            (self.dataset_kind in ("labeled_csv", "idx"),
             f"dataset kind must be labeled_csv or idx, got "
             f"{self.dataset_kind!r}"),
            (all(h >= 1 for h in self.hidden_sizes),
             f"hidden sizes must be positive, got {self.hidden_sizes}"),
            (self.motif_size >= 1,
             f"motif_size must be >= 1, got {self.motif_size}"),
            (self.weight_mode in (SHARED, INDEPENDENT),
             f"weight_mode must be shared or independent, got "
             f"{self.weight_mode!r}"),
            (self.activation in ("relu", "sigmoid"),
             f"activation must be relu or sigmoid, got {self.activation!r}"),
            (self.init_scheme in (HE_UNIFORM, HE_NORMAL),
             f"init_scheme must be he_uniform or he_normal, got "
             f"{self.init_scheme!r}"),
            (self.density_mode in (ER_MODE, FIXED_MODE),
             f"density_mode must be {ER_MODE} or {FIXED_MODE}, got "
             f"{self.density_mode!r}"),
            (self.density_value > 0,
             f"density_value must be > 0, got {self.density_value}"),
            (self.density_mode != FIXED_MODE or self.density_value <= 1.0,
             f"fixed density must be <= 1, got {self.density_value}"),
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (self.learning_rate > 0,
             f"learning_rate must be > 0, got {self.learning_rate}"),
            (self.batch_size >= 0,
             f"batch_size must be >= 0 (0 = full batch), got "
             f"{self.batch_size}"),
            (self.evolution_mode in (MAGNITUDE_SET, LISTING4, EVOLUTION_NONE),
             f"evolution mode must be {MAGNITUDE_SET}, {LISTING4} or "
             f"{EVOLUTION_NONE}, got {self.evolution_mode!r}"),
            (0.0 < self.zeta < 1.0,
             f"zeta must be in (0, 1), got {self.zeta}"),
            (0.0 <= self.epsilon_prune <= 1.0,
             f"epsilon_prune must be in [0, 1], got {self.epsilon_prune}"),
            (self.noise_scale >= 0,
             f"noise_scale must be >= 0, got {self.noise_scale}"),
            (self.evolution_period >= 1,
             f"evolution period must be >= 1, got {self.evolution_period}"),
            (self.test_fraction > 0 and self.test_fraction < 1,
             f"test_fraction must be in (0, 1), got {self.test_fraction}"),
            (self.train_limit >= 0 and self.test_limit >= 0,
             "train/test limits must be >= 0"),
            (self.w_eff >= 0 and self.w_acc >= 0
             and abs(self.w_eff + self.w_acc - 1.0) <= 1e-12,
             f"score weights must be non-negative and sum to 1, got "
             f"w_eff={self.w_eff}, w_acc={self.w_acc}"),
        ]
        if self.dataset_kind == "labeled_csv" and not self.cache_path:
            checks.append((bool(self.csv_path),
                           "labeled_csv dataset needs csv_path"))
        if self.dataset_kind == "idx" and not self.cache_path:
            checks.append((
                all((self.train_images, self.train_labels, self.test_images,
                     self.test_labels)),
                "idx dataset needs train/test image and label paths"))
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_hidden(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        sizes = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad hidden_sizes {text!r}") from exc
    if not sizes:
        raise ConfigError("hidden_sizes must list at least one width")
    return sizes


def _coerce(name: str, kind, text: str):
    text = text.strip()
    try:
        if kind is bool:
            return _parse_bool(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if name == "hidden_sizes":
            return _parse_hidden(text)
        return text
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_PY_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def _field_kind(name: str):
    type_name = str(_FIELD_TYPES[name])
    for key, kind in _PY_TYPES.items():
        if type_name.startswith(key):
            return kind
    return None  # hidden_sizes handled by name


def load_config(path, base: ExperimentConfig | None = None
                ) -> ExperimentConfig:
    """Read a config (or manifest) file on top of defaults or ``base``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    config = base if base is not None else ExperimentConfig()
    known = {(section, key): name for section, key, name in _LAYOUT}
    for section in parser.sections():
        if section == "result":
            continue  # manifests carry results; harmless on re-load
        for key, value in parser.items(section):
            name = known.get((section, key))
            if name is None:
                raise ConfigError(
                    f"{path}: unknown option [{section}] {key}"
                )
            setattr(config, name, _coerce(name, _field_kind(name), value))
    return config


def apply_overrides(config: ExperimentConfig, overrides: dict
                    ) -> ExperimentConfig:
    """Set non-None override values (CLI flags) onto the config."""
    for name, value in overrides.items():
        if value is None:
            continue
        if not hasattr(config, name):
            raise ConfigError(f"unknown config field {name!r}")
        if name == "hidden_sizes" and isinstance(value, str):
            value = _parse_hidden(value)
        setattr(config, name, value)
    return config


def config_to_text(config: ExperimentConfig,
                   result: dict | None = None) -> str:
    """Echo a config (plus an optional ``[result]`` section) as INI text."""
    parser = configparser.ConfigParser()
    for section, key, name in _LAYOUT:
        if not parser.has_section(section):
            parser.add_section(section)
        value = getattr(config, name)
        if name == "hidden_sizes":
            text = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        parser.set(section, key, text)
    if result:
        parser.add_section("result")
        for key, value in result.items():
            parser.set("result", key,
                       repr(value) if isinstance(value, float) else str(value))
    out = []
    for section in parser.sections():
        out.append(f"[{section}]")
        for key, value in parser.items(section):
            out.append(f"{key} = {value}")
        out.append("")
    return "\n".join(out)


def read_manifest_result(path) -> dict:
    """Return the ``[result]`` section of a manifest as a string dict."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read manifest {path}")
    if not parser.has_section("result"):
        return {}
    return dict(parser.items("result"))


def preset_path(name: str) -> Path:
    """Path of a bundled preset config (``motifset --preset <name>``)."""
    here = Path(__file__).resolve().parent / "presets" / f"{name}.cfg"
    if not here.exists():
        available = sorted(p.stem for p in here.parent.glob("*.cfg"))
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(available)}"
        )
    return here
