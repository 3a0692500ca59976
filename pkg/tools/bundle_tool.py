# bundle_tool.py
"""Model bundle: a directory of versioned JSON files behind one manifest.

    manifest.json              registry, device/domain summaries, file index
    devices/<n>_<id>.json      one GNG graph per device
    domain_states.json         domain-state GNG graph
    training/*.json            classification, counts, transitions, policy
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from tools.behavior_tool import StateClassification, dense_counts, sparse_counts
from tools.gng_tool import load_graph, save_graph
from tools.planner_tool import PolicySolution, TransitionModel
from tools.state_model_tool import DomainStateModel, HomeModel, ModeModel
from tools.trace_tool import NormStats
from tools.training_tool import TrainingArtifacts
from utils.errors import BundleError
from utils.logger import log_debug

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _read_json(path: Path) -> Any:
    if not path.exists():
        raise BundleError(path, "file is missing")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BundleError(path, f"invalid JSON: {e}") from e


def _safe_name(device_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", device_id) or "device"


def read_manifest(bundle_dir: Union[str, Path]) -> Dict[str, Any]:
    path = Path(bundle_dir) / MANIFEST
    manifest = _read_json(path)
    version = manifest.get("format_version") if isinstance(manifest, dict) else None
    if not isinstance(version, int):
        raise BundleError(path, "missing format_version")
    if version > FORMAT_VERSION:
        raise BundleError(path, f"format_version {version} is newer than supported version {FORMAT_VERSION}")
    return manifest


def save_home_model(home: HomeModel, bundle_dir: Union[str, Path], run_config: Optional[Dict[str, Any]] = None) -> Path:
    bundle = Path(bundle_dir)
    devices = []
    for index, model in enumerate(home.mode_models):
        relative = f"devices/{index:03d}_{_safe_name(model.device_id)}.json"
        save_graph(model.graph, bundle / relative)
        devices.append({
            "device_id": model.device_id,
            "graph": relative,
            "stats": model.stats.to_dict(),
            "mode_powers": model.mode_powers.tolist(),
            "time_weight": model.time_weight,
            "k": model.k,
        })
    save_graph(home.domain.graph, bundle / "domain_states.json")
    manifest = {
        "format_version": FORMAT_VERSION,
        "registry": list(home.registry),
        "config": run_config or {},
        "devices": devices,
        "domain": {
            "graph": "domain_states.json",
            "encoding": home.domain.encoding,
            "k": home.domain.k,
            "representatives": home.domain.representatives.tolist(),
            "state_powers": home.domain.state_powers.tolist(),
        },
    }
    path = _write_json(bundle / MANIFEST, manifest)
    log_debug(f"Bundle written to {bundle} ({len(devices)} devices, {home.state_count} states)")
    return path


def load_home_model(bundle_dir: Union[str, Path]) -> Tuple[HomeModel, Dict[str, Any]]:
    bundle = Path(bundle_dir)
    manifest = read_manifest(bundle)
    try:
        mode_models = [
            ModeModel(
                device_id=entry["device_id"],
                graph=load_graph(bundle / entry["graph"]),
                stats=NormStats.from_dict(entry["stats"]),
                mode_powers=np.asarray(entry["mode_powers"], dtype=float),
                time_weight=float(entry["time_weight"]),
                k=int(entry["k"]),
            )
            for entry in manifest["devices"]
        ]
        domain_entry = manifest["domain"]
        domain = DomainStateModel(
            graph=load_graph(bundle / domain_entry["graph"]),
            mode_powers=[model.mode_powers for model in mode_models],
            representatives=np.asarray(domain_entry["representatives"], dtype=int).reshape(-1, len(mode_models)),
            state_powers=np.asarray(domain_entry["state_powers"], dtype=float),
            encoding=domain_entry["encoding"],
            k=int(domain_entry["k"]),
        )
        registry = tuple(manifest["registry"])
    except (KeyError, TypeError, ValueError) as e:
        raise BundleError(bundle / MANIFEST, f"corrupted manifest: {e}") from e
    if len(domain.state_powers) != domain.state_count:
        raise BundleError(bundle / MANIFEST, "state_powers do not match the domain-state graph")
    return HomeModel(registry, mode_models, domain), manifest


def save_training(artifacts: TrainingArtifacts, bundle_dir: Union[str, Path]) -> Path:
    """Persist training artifacts and index them in the manifest's `training` section."""
    bundle = Path(bundle_dir)
    manifest = read_manifest(bundle)
    m = artifacts.transitions.m
    files = {
        "classification": _write_json(bundle / "training/classification.json", artifacts.classification.to_dict()),
        "counts": _write_json(bundle / "training/counts.json", {"m": m, "cells": sparse_counts(artifacts.counts)}),
        "transitions": _write_json(bundle / "training/transitions.json", artifacts.transitions.to_dict()),
        "policy": _write_json(bundle / "training/policy.json", artifacts.solution.to_dict()),
    }
    manifest["training"] = {name: path.relative_to(bundle).as_posix() for name, path in files.items()}
    manifest["training"]["rewards"] = artifacts.rewards.tolist()
    return _write_json(bundle / MANIFEST, manifest)


def load_training(bundle_dir: Union[str, Path]) -> TrainingArtifacts:
    bundle = Path(bundle_dir)
    manifest = read_manifest(bundle)
    training = manifest.get("training")
    if not training:
        raise BundleError(bundle / MANIFEST, "bundle has not been trained (no training section)")

    def _load(name: str, build):
        path = bundle / training[name]
        data = _read_json(path)
        try:
            return build(data)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise BundleError(path, f"corrupted {name}: {e}") from e

    try:
        rewards = np.asarray(training["rewards"], dtype=float)
        classification = _load("classification", StateClassification.from_dict)
        counts = _load("counts", lambda d: dense_counts(d["cells"], int(d["m"])))
        transitions = _load("transitions", TransitionModel.from_dict)
        solution = _load("policy", PolicySolution.from_dict)
    except KeyError as e:
        raise BundleError(bundle / MANIFEST, f"training section lacks {e}") from e
    return TrainingArtifacts(classification, counts, transitions, rewards, solution)
