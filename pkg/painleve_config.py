#!/usr/bin/env python3
"""
Painlevé Toolkit Configuration and Logging
내장 파인레베 시스템 설정 로드, 로깅 설정, 리포트 직렬화 도우미
"""

import os
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Any, Tuple
from dataclasses import dataclass, field

import yaml
import sympy as sp

CONFIG_FILENAME = "painleve_systems.yaml"
SCHEMA_FILENAME = "report_schema.json"
PROJECT_ROOT = Path(__file__).resolve().parent

TAG_ALIASES = {
    "P1": "P1", "P_I": "P1", "PI": "P1",
    "P2": "P2", "P_II": "P2", "PII": "P2",
    "P4": "P4", "P_IV": "P4", "PIV": "P4",
}

PARAMETER_NAMES = ("alpha", "theta", "kappa", "alpha1", "alpha2")


@dataclass(frozen=True)
class BuiltinSystem:
    """내장 시스템 정의"""
    tag: str
    name: str
    parameters: Tuple[str, ...]
    f_text: str
    g_text: str
    hamiltonian_text: str
    boutroux_text: str
    weights: Tuple[int, int, int, int]
    chart_orientation: Dict[str, int] = field(default_factory=dict)
    blowup_charts: int = 1
    blowup_points: Tuple[Tuple[str, str, Tuple[int, ...]], ...] = ()


def config_path(path: Optional[Path] = None) -> Path:
    """설정 파일 경로 결정"""
    if path is not None:
        return Path(path)
    override = os.environ.get("PAINLEVE_CONFIG")
    if override:
        return Path(override)
    return PROJECT_ROOT / CONFIG_FILENAME


def load_system_config(path: Optional[Path] = None) -> Dict[str, Any]:
    """painleve_systems.yaml 파일 로드"""
    config_file = config_path(path)
    if not config_file.exists():
        raise FileNotFoundError(f"{CONFIG_FILENAME} not found")

    with open(config_file, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def normalize_tag(tag: str) -> str:
    key = tag.strip().upper().replace("-", "_")
    if key not in TAG_ALIASES:
        raise ValueError(f"unknown system tag {tag!r}; known tags: P1, P2, P4")
    return TAG_ALIASES[key]


def builtin_tags(path: Optional[Path] = None) -> List[str]:
    return sorted(load_system_config(path)["systems"].keys())


def load_builtin_system(tag: str, path: Optional[Path] = None) -> BuiltinSystem:
    """태그로 내장 시스템 로드"""
    key = normalize_tag(tag)
    systems = load_system_config(path)["systems"]
    if key not in systems:
        raise ValueError(f"system {key} missing from {CONFIG_FILENAME}")
    entry = systems[key]
    return BuiltinSystem(
        tag=key,
        name=entry["name"],
        parameters=tuple(entry.get("parameters") or ()),
        f_text=entry["f"],
        g_text=entry["g"],
        hamiltonian_text=entry["hamiltonian"],
        boutroux_text=entry["boutroux_hamiltonian"],
        weights=tuple(entry["weights"]),
        chart_orientation=dict(entry.get("chart_orientation") or {}),
        blowup_charts=int(entry.get("blowup_charts", 1)),
        blowup_points=tuple((str(p["label"]), str(p["chart"]), tuple(p["point"]))
                            for p in entry.get("blowup_points") or ()),
    )


def load_integrator_defaults(path: Optional[Path] = None) -> Dict[str, Any]:
    return dict(load_system_config(path).get("integrator") or {})


def setup_logging(log_dir: Optional[Path] = None) -> logging.Logger:
    """로깅 설정 (다른 디렉토리가 주어지면 파일 핸들러를 교체)"""
    logger = logging.getLogger('painleve')
    logger.setLevel(logging.INFO)

    if log_dir is None:
        if logger.handlers:
            return logger
        log_dir = PROJECT_ROOT / load_system_config()["system_config"].get("log_dir", "logs")
    log_dir = Path(log_dir)
    target = (log_dir / 'painleve.log').resolve()
    existing = [h for h in logger.handlers if isinstance(h, logging.FileHandler)]
    if any(Path(h.baseFilename) == target for h in existing):
        return logger
    for h in existing:
        logger.removeHandler(h)
        h.close()

    log_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(target)
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    return logger


def _rational_text(value: Fraction) -> str:
    # terminating decimals print as decimals, everything else as a/b
    den = value.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    if value.denominator == 1:
        return str(value.numerator)
    digits = 0
    scaled = value
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def serialize_value(value: Any) -> Any:
    """리포트용 값 직렬화 (유리수 무손실, 복소수는 [re, im])"""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return _rational_text(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float):
        return value
    if isinstance(value, sp.Rational):
        return _rational_text(Fraction(int(value.p), int(value.q)))
    if isinstance(value, sp.Basic):
        return sp.sstr(value)
    if isinstance(value, dict):
        return {str(k): serialize_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [serialize_value(v) for v in value]
    if hasattr(value, "to_text"):
        return value.to_text()
    return str(value)


def load_report_schema() -> Dict[str, Any]:
    schema_file = PROJECT_ROOT / SCHEMA_FILENAME
    if not schema_file.exists():
        raise FileNotFoundError(f"{SCHEMA_FILENAME} not found")
    with open(schema_file, 'r', encoding='utf-8') as f:
        return json.load(f)
