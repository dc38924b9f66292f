"""Run configuration documents: JSON schema, validation, overrides, defaults.

A config document mirrors the orchestrator's RunConfig field-for-field as
nested key/value JSON with a schema_version. Unknown keys are rejected.
``python -m mflight.config`` prints the generated reference of every key and
its default.
"""

from __future__ import annotations

import copy
import json

import numpy as np

from .aeroenv import StateDistribution
from .errors import ConfigError
from .geometry import GeometryBounds
from .orchestrator import PhaseSpec, RunConfig
from .ppo import PpoConfig

SCHEMA_VERSION = 1

# (default, description) per key; None defaults mean "absent unless given"
_PHASE_DOC = {
    "fidelity": ("low", "environment tier: low (panel + flat-plate drag) or high (panel + BL march)"),
    "mu": (5.5e6, "mean of the Gaussian Reynolds-number state distribution"),
    "sigma": (5e5, "std of the state distribution"),
    "max_episodes": (2000, "episode budget; must be a multiple of episodes_per_update"),
}

_REFERENCE: dict = {
    "schema_version": (SCHEMA_VERSION, "config document schema version"),
    "mode": ("scratch", "scratch | single_fidelity_ctl | multi_fidelity_ctl"),
    "seed": (0, "global seed; every logged number is a function of (config, seed)"),
    "workers": (4, "parallel episode workers W; pure throughput knob"),
    "episodes_per_update": (20, "episodes pooled per policy update (T_L)"),
    "penalty": (-0.1, "reward for invalid or non-converged episodes"),
    "source": dict(_PHASE_DOC),
    "target": dict(_PHASE_DOC),
    "state_reference": {
        "mu": (None, "normalization reference mean; defaults to the source distribution"),
        "sigma": (None, "normalization reference std"),
    },
    "ppo": {
        "clip_epsilon": (0.2, "PPO ratio clip half-width"),
        "learning_rate": (3e-4, "Adam step size"),
        "epochs_per_update": (10, "full-batch gradient passes per update"),
        "entropy_coeff": (0.0, "entropy bonus coefficient"),
        "value_coeff": (0.5, "value-loss coefficient"),
        "max_grad_norm": (0.5, "global gradient-norm clip"),
        "gamma": (0.99, "discount factor (inert for one-step episodes)"),
        "kl_stop": (0.05, "stop an update's epochs when the KL estimate exceeds this"),
    },
    "ctl": {
        "window": (50, "look-back window k for the reward variance ratio"),
        "gamma_cut": (0.3, "variance-ratio cut-off for declaring the source task complete"),
        "force_transfer": (False, "transfer at source budget exhaustion even if incomplete"),
    },
    "agent": {
        "hidden": ([64, 64], "hidden layer widths of policy and value MLPs"),
        "log_std_init": (-0.5, "initial policy log-std (state-independent)"),
    },
    "geometry": {
        "n_points_low": (62, "surface points for the low-fidelity environment (60 panels)"),
        "n_points_high": (202, "surface points for the high-fidelity environment (200 panels)"),
        "blend_fraction": (0.02, "arc-length fraction of chord blended into the nose circle"),
        "bounds": {
            "lo": (None, "13 lower geometric bounds (defaults to the built-in design box)"),
            "hi": (None, "13 upper geometric bounds"),
        },
    },
    "environment": {
        "alpha_deg": (0.0, "angle of attack in degrees"),
    },
    "evaluation": {
        "threshold_fraction": (0.95, "episodes-to-threshold fraction of the final trailing mean"),
        "tail_episodes": (500, "tail window for the final reward distribution"),
        "episodes": (1000, "default episode count for the evaluate command"),
        "mu": (None, "evaluation distribution mean; defaults to the source (else target) mu"),
        "sigma": (None, "evaluation distribution std"),
        "fidelity": (None, "evaluation fidelity; defaults to the target phase fidelity"),
    },
}

_NULLABLE_SECTIONS = ("source", "state_reference")


def _defaults(tree: dict) -> dict:
    out = {}
    for key, val in tree.items():
        out[key] = _defaults(val) if isinstance(val, dict) else val[0]
    return out


def default_config() -> dict:
    """A complete config document populated with every default."""
    doc = _defaults(_REFERENCE)
    doc["source"] = None
    return doc


def reference_text() -> str:
    """Human-readable reference of every key, default, and meaning."""
    lines = [f"mflight configuration reference (schema_version {SCHEMA_VERSION})",
             "nested keys are written as dotted paths; values show the default", ""]

    def walk(tree: dict, prefix: str):
        for key, val in tree.items():
            path = f"{prefix}{key}"
            if isinstance(val, dict):
                walk(val, path + ".")
            else:
                default, desc = val
                lines.append(f"{path} = {json.dumps(default)}")
                lines.append(f"    {desc}")

    walk(_REFERENCE, "")
    lines.append("")
    lines.append("source and state_reference may be null; source must be null in scratch mode.")
    return "\n".join(lines) + "\n"


def _check_keys(doc, ref: dict, path: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    for key, val in doc.items():
        if key not in ref:
            raise ConfigError(f"unknown config key {path}{key}")
        if isinstance(ref[key], dict) and val is not None:
            _check_keys(val, ref[key], f"{path}{key}.")


def validate_document(doc: dict) -> dict:
    """Fill defaults, reject unknown keys, and sanity-check the document."""
    _check_keys(doc, _REFERENCE, "")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}"
        )

    def merge(ref: dict, given: dict) -> dict:
        out = {}
        for key, val in ref.items():
            if isinstance(val, dict):
                sub = given.get(key)
                if sub is None and key in given:
                    out[key] = None
                else:
                    out[key] = merge(val, sub or {})
            else:
                out[key] = given.get(key, val[0])
        return out

    merged = merge(_REFERENCE, doc)
    for section in _NULLABLE_SECTIONS:
        if section not in doc:
            merged[section] = None
    if "target" not in doc or doc["target"] is None:
        raise ConfigError("config must define a target phase")
    return merged


def load_document(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_document(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``key.path=value`` overrides; values parse as JSON, else strings."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return validate_document(doc)


def _phase(name: str, section: dict | None) -> PhaseSpec | None:
    if section is None:
        return None
    return PhaseSpec(name=name, fidelity=section["fidelity"],
                     dist=StateDistribution(float(section["mu"]), float(section["sigma"])),
                     max_episodes=int(section["max_episodes"]))


def build_run_config(doc: dict) -> RunConfig:
    """Turn a validated document into the orchestrator's RunConfig."""
    geo = doc["geometry"]
    bounds_doc = geo.get("bounds")
    if bounds_doc and bounds_doc.get("lo") is not None:
        bounds = GeometryBounds(lo=np.asarray(bounds_doc["lo"], dtype=float),
                                hi=np.asarray(bounds_doc["hi"], dtype=float))
    else:
        bounds = GeometryBounds()

    ref_doc = doc.get("state_reference")
    state_ref = None
    if ref_doc and ref_doc.get("mu") is not None:
        if ref_doc.get("sigma") is None:
            raise ConfigError("state_reference needs both mu and sigma")
        state_ref = (float(ref_doc["mu"]), float(ref_doc["sigma"]))

    ppo_doc = doc["ppo"]
    cfg = RunConfig(
        mode=doc["mode"],
        source=_phase("source", doc.get("source")),
        target=_phase("target", doc["target"]),
        ppo=PpoConfig(**{k: (int(v) if k == "epochs_per_update" else float(v))
                         for k, v in ppo_doc.items()}),
        workers=int(doc["workers"]),
        episodes_per_update=int(doc["episodes_per_update"]),
        seed=int(doc["seed"]),
        penalty=float(doc["penalty"]),
        hidden=tuple(int(h) for h in doc["agent"]["hidden"]),
        log_std_init=float(doc["agent"]["log_std_init"]),
        ctl_window=int(doc["ctl"]["window"]),
        ctl_gamma_cut=float(doc["ctl"]["gamma_cut"]),
        force_transfer=bool(doc["ctl"]["force_transfer"]),
        bounds=bounds,
        alpha=float(np.deg2rad(float(doc["environment"]["alpha_deg"]))),
        blend_fraction=float(geo["blend_fraction"]),
        n_points_low=int(geo["n_points_low"]),
        n_points_high=int(geo["n_points_high"]),
        state_ref=state_ref,
        threshold_fraction=float(doc["evaluation"]["threshold_fraction"]),
        tail_episodes=int(doc["evaluation"]["tail_episodes"]),
    )
    cfg.validate()
    return cfg


if __name__ == "__main__":
    print(reference_text(), end="")
