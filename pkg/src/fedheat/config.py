"""Plain-text experiment configuration: sections of key = value lines.

The format is deliberately tiny: ``[section]`` headers, ``key = value``
pairs, ``#`` comments and blank lines. Parsing is strict (unknown sections
or keys are errors) and every complaint carries the offending line number.
A report file emitted by the CLI embeds its config verbatim, so a report
path can be parsed anywhere a config path is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .federation import (
    AGGREGATIONS,
    BY_SAMPLES,
    PERSONALIZATION_MODES,
    STATIC,
    WEIGHTINGS,
    FedConfig,
)
from .privacy import SCHEDULES, PrivacyConfig
from .solver import DISTANCE_MODES, INIT_MODES, ClusterConfig

REPORT_MARKER = "# fedheat-report v1"
CONFIG_BEGIN = "# --- config ---"
CONFIG_END = "# --- end config ---"


class ConfigError(ValueError):
    """Invalid configuration file content."""


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float_list(raw: str) -> list[float]:
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def _parse_int_list(raw: str) -> list[int]:
    return [int(tok) for tok in raw.split(",") if tok.strip()]


# section -> key -> (converter, default); None default means "no entry unless given"
_SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "seed": (int, 0),
        "out_dir": (str, "fedheat-out"),
        "repetitions": (int, 1),
    },
    "dataset": {
        "source": (str, "synthetic"),      # synthetic | iris | path
        "path": (str, None),
        "n_per_cluster": (int, 250),
        "noise_scale": (float, 1.0),
    },
    "cluster": {
        "c": (int, 4),
        "m": (float, 2.0),
        "alpha": (float, 5.0),
        "epsilon": (float, 1e-6),
        "t_max": (int, 100),
        "init": (str, "kmeans++"),
        "hkc_type": (str, "minmax"),
        "hkc_eps": (float, 1e-12),
        "recompute_hkc_per_iter": (_parse_bool, False),
        "distance": (str, "heat_kernel"),
    },
    "federation": {
        "fractions": (_parse_float_list, [0.85, 0.15]),
        "rounds": (int, 10),
        "local_iters": (int, 50),
        "aggregation": (str, "weighted"),
        "client_weighting": (str, BY_SAMPLES),
        "epsilon_conv": (float, 1e-4),
        "gamma": (float, 0.5),
        "rho": (float, 0.5),
        "personalization": (str, STATIC),
        "eta_min": (float, 0.95),
        "xi_min": (float, 0.90),
        "certify": (_parse_bool, True),
    },
    "privacy": {
        "enabled": (_parse_bool, False),
        "epsilon_total": (float, 1.0),
        "delta": (float, 1e-5),
        "sensitivity": (float, 1.0),
        "schedule": (str, "paper"),
        "secure_sum": (_parse_bool, False),
        "fixed_point_scale": (int, 2**20),
    },
    "evaluate": {
        "predictions": (str, None),
        "labels": (str, None),
    },
    "ablate": {
        "subset_labels": (_parse_int_list, [2, 3]),
    },
}

_CHOICES = {
    ("dataset", "source"): ("synthetic", "iris", "path"),
    ("cluster", "init"): INIT_MODES,
    ("cluster", "hkc_type"): ("minmax", "meandev"),
    ("cluster", "distance"): DISTANCE_MODES,
    ("federation", "aggregation"): AGGREGATIONS,
    ("federation", "client_weighting"): WEIGHTINGS,
    ("federation", "personalization"): PERSONALIZATION_MODES,
    ("privacy", "schedule"): SCHEDULES,
}


@dataclass
class ExperimentConfig:
    """Everything one CLI invocation needs, plus the raw text for echoing."""

    seed: int
    out_dir: str
    repetitions: int
    dataset_source: str
    dataset_path: str | None
    n_per_cluster: int
    noise_scale: float
    cluster: ClusterConfig
    fractions: list[float]
    fed_extras: dict
    privacy: PrivacyConfig
    evaluate_predictions: str | None
    evaluate_labels: str | None
    ablate_subset: list[int]
    raw_text: str = ""
    values: dict = field(default_factory=dict)

    def fed_config(self) -> FedConfig:
        return FedConfig(cluster=self.cluster, privacy=self.privacy, **self.fed_extras)


def parse_config_text(text: str) -> ExperimentConfig:
    values: dict[str, dict] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(
                    f"line {lineno}: unknown section [{section}];"
                    f" expected one of {sorted(_SCHEMA)}"
                )
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{section}];"
                f" expected one of {sorted(_SCHEMA[section])}"
            )
        if key in values[section]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        converter = _SCHEMA[section][key][0]
        try:
            value = converter(raw_value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: invalid value for {section}.{key}: {exc}") from exc
        choices = _CHOICES.get((section, key))
        if choices is not None and value not in choices:
            raise ConfigError(
                f"line {lineno}: {section}.{key} must be one of {list(choices)}, got {value!r}"
            )
        values[section][key] = value
    filled: dict[str, dict] = {}
    for sec, keys in _SCHEMA.items():
        filled[sec] = {}
        for key, (_, default) in keys.items():
            filled[sec][key] = values.get(sec, {}).get(key, default)
    try:
        cluster = ClusterConfig(
            c=filled["cluster"]["c"],
            m=filled["cluster"]["m"],
            alpha=filled["cluster"]["alpha"],
            epsilon=filled["cluster"]["epsilon"],
            t_max=filled["cluster"]["t_max"],
            seed=filled["run"]["seed"],
            init=filled["cluster"]["init"],
            hkc_type=filled["cluster"]["hkc_type"],
            hkc_eps=filled["cluster"]["hkc_eps"],
            recompute_hkc_per_iter=filled["cluster"]["recompute_hkc_per_iter"],
            distance=filled["cluster"]["distance"],
        )
        privacy = PrivacyConfig(
            enabled=filled["privacy"]["enabled"],
            epsilon_total=filled["privacy"]["epsilon_total"],
            delta=filled["privacy"]["delta"],
            sensitivity=filled["privacy"]["sensitivity"],
            schedule=filled["privacy"]["schedule"],
            secure_sum=filled["privacy"]["secure_sum"],
            fixed_point_scale=filled["privacy"]["fixed_point_scale"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if filled["run"]["repetitions"] < 1:
        raise ConfigError(f"run.repetitions must be >= 1, got {filled['run']['repetitions']}")
    if filled["dataset"]["source"] == "path" and not filled["dataset"]["path"]:
        raise ConfigError("dataset.source = path requires dataset.path")
    fed_extras = {
        "rounds": filled["federation"]["rounds"],
        "local_iters": filled["federation"]["local_iters"],
        "aggregation": filled["federation"]["aggregation"],
        "client_weighting": filled["federation"]["client_weighting"],
        "epsilon_conv": filled["federation"]["epsilon_conv"],
        "gamma": filled["federation"]["gamma"],
        "rho": filled["federation"]["rho"],
        "personalization": filled["federation"]["personalization"],
    }
    try:
        # validate federation values eagerly so bad configs fail at parse time
        FedConfig(cluster=cluster, privacy=privacy, **fed_extras)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        seed=filled["run"]["seed"],
        out_dir=filled["run"]["out_dir"],
        repetitions=filled["run"]["repetitions"],
        dataset_source=filled["dataset"]["source"],
        dataset_path=filled["dataset"]["path"],
        n_per_cluster=filled["dataset"]["n_per_cluster"],
        noise_scale=filled["dataset"]["noise_scale"],
        cluster=cluster,
        fractions=filled["federation"]["fractions"],
        fed_extras=fed_extras,
        privacy=privacy,
        evaluate_predictions=filled["evaluate"]["predictions"],
        evaluate_labels=filled["evaluate"]["labels"],
        ablate_subset=filled["ablate"]["subset_labels"],
        raw_text=text,
        values=filled,
    )


def extract_embedded_config(text: str) -> str:
    """Pull the verbatim config block out of an emitted report."""
    lines = text.splitlines()
    try:
        start = lines.index(CONFIG_BEGIN) + 1
        end = lines.index(CONFIG_END)
    except ValueError as exc:
        raise ConfigError("report file has no embedded config block") from exc
    return "\n".join(lines[start:end]) + "\n"


def parse_config(path: str) -> ExperimentConfig:
    """Parse a config file; report files are accepted and re-run their config."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if text.startswith(REPORT_MARKER):
        text = extract_embedded_config(text)
    return parse_config_text(text)


def render_config(config: ExperimentConfig) -> str:
    """Canonical text form of a parsed config (every key explicit)."""
    out = []
    for sec in _SCHEMA:
        out.append(f"[{sec}]")
        for key in _SCHEMA[sec]:
            value = config.values[sec][key]
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, list):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            out.append(f"{key} = {value}")
        out.append("")
    return "\n".join(out)
