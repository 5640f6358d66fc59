"""
From raw per-slot detector voltages to shot-noise-normalized quadratures.

Each trigger carries a short run of pulse slots. For every slot the input
holds the SNSPD peak voltage and the homodyne voltage at the slot's sample
time. The pipeline classifies peaks into 0, 1 or 2 photons, removes
two-photon heralds preceded by a click in the last ``window`` slots (the
afterpulse offset makes such events look like two photons), and converts the
homodyne voltage of each surviving herald slot into a quadrature value.

Input events are JSON lines:
    {"trigger_id": 7, "slots": [{"slot": 0, "snspd_peak": 0.01, "hd_value": -0.12}, ...]}
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FockDomainError, InputFormatError, InsufficientDataError
from .fock_core import derive_rng
from .homodyne_sim import QuadratureRecord, sample_quadratures

logger = logging.getLogger(__name__)

MIN_CALIBRATION_VALUES = 100
DEFAULT_VETO_WINDOW = 2
# stream key for synthesize_trace_events under derive_rng
SYNTHETIC_STREAM = 2
# removal fraction seen on the two-photon run (498 of 10,000)
REFERENCE_VETO_FRACTION = 0.0498


def _load_json_object(path, what):
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InputFormatError(f"invalid {what} JSON: {e.msg}", path=path, line_number=e.lineno)
    if not isinstance(data, dict):
        raise InputFormatError(f"{what} JSON must be an object", path=path)
    return data


def _require_keys(data, keys, what, path=None):
    unknown = set(data) - set(keys)
    missing = set(keys) - set(data)
    if missing or unknown:
        raise InputFormatError(
            f"{what} needs exactly keys {sorted(keys)} (missing {sorted(missing)}, unknown {sorted(unknown)})",
            path=path,
        )


def _floats(data, keys, what, path=None):
    try:
        return [float(data[k]) for k in keys]
    except (TypeError, ValueError):
        raise InputFormatError(f"{what} values must be numbers", path=path)


def _dump_json(path, payload):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


@dataclass(frozen=True)
class SlotRecord:
    """One pulse slot: SNSPD peak voltage and HD voltage at the slot's sample time."""

    slot_index: int
    snspd_peak: float
    hd_value: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.snspd_peak) and math.isfinite(self.hd_value) and math.isfinite(self.theta)):
            raise FockDomainError(f"slot {self.slot_index} holds non-finite values")

    def to_dict(self):
        data = {"slot": self.slot_index, "snspd_peak": self.snspd_peak, "hd_value": self.hd_value}
        if self.theta != 0.0:
            data["theta"] = self.theta
        return data


@dataclass(frozen=True)
class TraceEvent:
    """All slots recorded for one trigger, in time order."""

    trigger_id: int
    slots: tuple

    def to_dict(self):
        return {"trigger_id": self.trigger_id, "slots": [s.to_dict() for s in self.slots]}


@dataclass(frozen=True)
class ThresholdConfig:
    """
    SNSPD voltage thresholds; a peak equal to a threshold counts as the higher class.

    Args:
        v1 (float): Single-photon threshold in volts
        v2 (float): Two-photon threshold in volts
    """

    v1: float
    v2: float

    def __post_init__(self):
        if not (0.0 < self.v1 < self.v2):
            raise FockDomainError(f"thresholds must satisfy 0 < v1 < v2, got v1={self.v1}, v2={self.v2}")

    def to_dict(self):
        return {"v1": self.v1, "v2": self.v2}

    @classmethod
    def from_dict(cls, data, path=None):
        _require_keys(data, {"v1", "v2"}, "threshold config", path)
        return cls(*_floats(data, ("v1", "v2"), "threshold", path))

    def save(self, path):
        _dump_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(_load_json_object(path, "threshold"), path=path)


@dataclass(frozen=True)
class ShotNoiseCalibration:
    """Mean and standard deviation (volts) of the vacuum homodyne signal."""

    mean_v: float
    sigma_v: float

    def __post_init__(self):
        if not (math.isfinite(self.mean_v) and math.isfinite(self.sigma_v)):
            raise FockDomainError("calibration values must be finite")
        if not self.sigma_v > 0.0:
            raise FockDomainError(f"shot-noise sigma must be positive, got {self.sigma_v}")

    def to_dict(self):
        return {"mean_v": self.mean_v, "sigma_v": self.sigma_v}

    @classmethod
    def from_dict(cls, data, path=None):
        # calibrations written by the pipeline command also carry the run config
        data = {k: v for k, v in data.items() if k not in ("config", "seed")}
        _require_keys(data, {"mean_v", "sigma_v"}, "calibration", path)
        return cls(*_floats(data, ("mean_v", "sigma_v"), "calibration", path))

    def save(self, path):
        _dump_json(path, self.to_dict())
        logger.info("wrote shot-noise calibration to %s", path)

    @classmethod
    def load(cls, path):
        return cls.from_dict(_load_json_object(path, "calibration"), path=path)


@dataclass(frozen=True)
class HeraldedSlot:
    """A slot that passed classification (and the veto, for two-photon heralds)."""

    trigger_id: int
    slot_index: int
    pnr_class: int
    truncated_history: bool = False


@dataclass
class VetoResult:
    kept: list = field(default_factory=list)
    removed: int = 0
    truncated: int = 0


def classify_pnr(peak, cfg):
    """
    Photon class of an SNSPD peak voltage.

    Returns:
        int: 0 if peak < v1, 1 if v1 <= peak < v2, 2 if peak >= v2
    """
    if peak >= cfg.v2:
        return 2
    if peak >= cfg.v1:
        return 1
    return 0


def veto_two_photon_events(events, cfg, window=DEFAULT_VETO_WINDOW):
    """
    Afterpulse veto for two-photon heralds.

    A slot classified 2 is kept only if the ``window`` slots before it in the
    same trigger are all classified 0. When fewer than ``window`` earlier
    slots exist the herald is kept and flagged ``truncated_history``.

    Returns:
        tuple: (list of HeraldedSlot kept, number of removed heralds)
    """
    result = veto_with_report(events, cfg, window)
    return result.kept, result.removed


def _screen_two_photon(classes, window):
    # positions within one event; slot indices may repeat across triggers
    kept, removed = [], 0
    for pos, cls_ in enumerate(classes):
        if cls_ != 2:
            continue
        if any(c != 0 for c in classes[max(0, pos - window):pos]):
            removed += 1
        else:
            kept.append(pos)
    return kept, removed


def veto_with_report(events, cfg, window=DEFAULT_VETO_WINDOW):
    """veto_two_photon_events plus the count of truncated-history heralds."""
    if window < 0:
        raise FockDomainError(f"veto window must be >= 0, got {window}")
    result = VetoResult()
    for event in events:
        classes = [classify_pnr(s.snspd_peak, cfg) for s in event.slots]
        positions, removed = _screen_two_photon(classes, window)
        result.removed += removed
        for pos in positions:
            truncated = pos < window
            result.truncated += int(truncated)
            result.kept.append(HeraldedSlot(event.trigger_id, event.slots[pos].slot_index, 2, truncated))
    if result.truncated:
        logger.warning("%d two-photon heralds kept with truncated veto history", result.truncated)
    logger.info("veto removed %d two-photon heralds, kept %d", result.removed, len(result.kept))
    return result


def calibrate_shot_noise(values):
    """
    Shot-noise calibration from vacuum (signal blocked) HD voltages.

    Raises:
        InsufficientDataError: If fewer than 100 values are given.
        FockDomainError: If the values are all identical (sigma would be 0).
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < MIN_CALIBRATION_VALUES:
        raise InsufficientDataError(
            f"insufficient calibration data: {v.size} values, need at least {MIN_CALIBRATION_VALUES}"
        )
    if np.all(v == v[0]):
        raise FockDomainError("calibration values are constant; shot-noise sigma would be 0")
    cal = ShotNoiseCalibration(float(np.mean(v)), float(np.std(v, ddof=1)))
    logger.info("shot-noise calibration: mean %.6g V, sigma %.6g V", cal.mean_v, cal.sigma_v)
    return cal


def normalize_quadrature(hd_value, cal):
    """Volts to quadrature units: (v - mean) / (sigma sqrt 2), so vacuum variance is 1/2."""
    return (np.asarray(hd_value, dtype=float) - cal.mean_v) / (cal.sigma_v * math.sqrt(2.0))


def to_volts(x, cal):
    """Inverse of normalize_quadrature."""
    return np.asarray(x, dtype=float) * cal.sigma_v * math.sqrt(2.0) + cal.mean_v


def extract_quadratures(events, cal, herald_n, thresholds, window=DEFAULT_VETO_WINDOW):
    """
    Quadratures of every slot whose PNR class equals ``herald_n``.

    Two-photon heralds go through the afterpulse veto first.

    Returns:
        list of QuadratureRecord tagged with the herald class and slot index
    """
    if herald_n == 2 and window < 0:
        raise FockDomainError(f"veto window must be >= 0, got {window}")
    records = []
    vetoed = 0
    for event in events:
        classes = [classify_pnr(s.snspd_peak, thresholds) for s in event.slots]
        if herald_n == 2:
            positions, removed = _screen_two_photon(classes, window)
            vetoed += removed
        else:
            positions = [pos for pos, c in enumerate(classes) if c == herald_n]
        for pos in positions:
            s = event.slots[pos]
            x = float(normalize_quadrature(s.hd_value, cal))
            records.append(QuadratureRecord.at_phase(x, s.theta, herald_n, s.slot_index))
    if herald_n == 2:
        logger.info("veto removed %d two-photon heralds", vetoed)
    logger.info("extracted %d quadratures for herald n=%d", len(records), herald_n)
    return records


def slot_variance_profile(events, cal):
    """
    Per-slot sample variance of normalized quadratures across triggers.

    Returns:
        list of (slot_index, variance) sorted by slot index

    Raises:
        InsufficientDataError: With fewer than two events.
    """
    events = list(events)
    if len(events) < 2:
        raise InsufficientDataError(f"slot variance needs at least 2 events, got {len(events)}")
    by_slot = {}
    for event in events:
        for s in event.slots:
            by_slot.setdefault(s.slot_index, []).append(s.hd_value)
    profile = []
    for slot_index in sorted(by_slot):
        x = normalize_quadrature(by_slot[slot_index], cal)
        variance = float(np.var(x, ddof=1)) if x.size >= 2 else float("nan")
        profile.append((slot_index, variance))
    return profile


def _parse_event(data, path, line_number):
    if not isinstance(data, dict) or set(data) != {"trigger_id", "slots"}:
        raise InputFormatError("event needs exactly keys 'trigger_id' and 'slots'", path, line_number)
    if not isinstance(data["slots"], list):
        raise InputFormatError("'slots' must be a list", path, line_number)
    slots = []
    for raw in data["slots"]:
        if not isinstance(raw, dict) or not {"slot", "snspd_peak", "hd_value"} <= set(raw):
            raise InputFormatError("slot needs keys 'slot', 'snspd_peak', 'hd_value'", path, line_number)
        if set(raw) - {"slot", "snspd_peak", "hd_value", "theta"}:
            raise InputFormatError(f"slot has unknown keys {sorted(set(raw))}", path, line_number)
        slots.append(SlotRecord(
            slot_index=int(raw["slot"]),
            snspd_peak=float(raw["snspd_peak"]),
            hd_value=float(raw["hd_value"]),
            theta=float(raw.get("theta", 0.0)),
        ))
    ordered = sorted(slots, key=lambda s: s.slot_index)
    for a, b in zip(ordered, ordered[1:]):
        if a.slot_index == b.slot_index:
            raise InputFormatError(f"slot {a.slot_index} appears twice in one event", path, line_number)
    return TraceEvent(trigger_id=int(data["trigger_id"]), slots=tuple(ordered))


def read_events_jsonl(path):
    """
    Parse a JSON-lines event file.

    Raises:
        InputFormatError: On a malformed line (reporting its number), a repeated
            trigger_id or slot, or an empty file.
    """
    path = Path(path)
    events = []
    first_seen = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                events.append(_parse_event(data, path, line_number))
            except json.JSONDecodeError as e:
                raise InputFormatError(f"invalid JSON: {e.msg}", path, line_number)
            except (TypeError, ValueError) as e:
                if isinstance(e, InputFormatError):
                    raise
                raise InputFormatError(f"bad event: {e}", path, line_number)
            trigger_id = events[-1].trigger_id
            if trigger_id in first_seen:
                raise InputFormatError(
                    f"trigger_id {trigger_id} already used on line {first_seen[trigger_id]}", path, line_number
                )
            first_seen[trigger_id] = line_number
    if not events:
        raise InputFormatError("event file holds no events", path)
    return events


def write_events_jsonl(path, events):
    with open(path, "w", encoding="utf-8") as f:
        for event in events:
            f.write(json.dumps(event.to_dict()) + "\n")


@dataclass
class SyntheticCorpus:
    """Generated events plus the generator's ground truth about the veto."""

    events: list
    planted_contaminations: int
    expected_removals: float


def default_click_probability(window=DEFAULT_VETO_WINDOW, removal_fraction=REFERENCE_VETO_FRACTION):
    """Per-slot click probability q with 1 - (1 - q)^window = removal_fraction."""
    return 1.0 - (1.0 - removal_fraction) ** (1.0 / window)


def synthesize_trace_events(n_events, slots_per_event, herald_slot, herald_n, state, thresholds,
                            calibration, click_probability=None, window=DEFAULT_VETO_WINDOW, seed=0):
    """
    Synthetic trigger records for testing the pipeline end to end.

    Every trigger carries ``slots_per_event`` slots. Slot ``herald_slot`` holds
    a herald of class ``herald_n`` (none when herald_n = 0) whose HD voltage is
    drawn from ``state`` through homodyne_sim; all other slots hold vacuum
    noise. Each slot before the herald independently shows a single-photon
    click with probability ``click_probability`` (default reproduces the
    ~498 / 10,000 removal rate).

    Returns:
        SyntheticCorpus
    """
    if not 0 <= herald_slot < slots_per_event:
        raise FockDomainError("herald_slot must index one of the slots")
    q = default_click_probability(window) if click_probability is None else float(click_probability)
    if not 0.0 <= q <= 1.0:
        raise FockDomainError(f"click probability must lie in [0, 1], got {q}")
    rng = derive_rng(seed, SYNTHETIC_STREAM)
    herald_x = np.array([rec.x for rec in sample_quadratures(state, n_events, seed=seed, herald_n=herald_n)])
    noise = rng.normal(calibration.mean_v, calibration.sigma_v, size=(n_events, slots_per_event))
    clicks = rng.random((n_events, slots_per_event)) < q
    clicks[:, herald_slot:] = False
    dark_peaks = rng.uniform(0.0, 0.5 * thresholds.v1, size=(n_events, slots_per_event))
    click_peaks = rng.uniform(thresholds.v1, 0.5 * (thresholds.v1 + thresholds.v2), size=(n_events, slots_per_event))
    herald_peaks = rng.uniform(thresholds.v2, 1.5 * thresholds.v2, size=n_events)
    if herald_n == 1:
        herald_peaks = 0.5 * (thresholds.v1 + thresholds.v2) * np.ones(n_events)

    events = []
    planted = 0
    lo = max(0, herald_slot - window)
    for i in range(n_events):
        slots = []
        for j in range(slots_per_event):
            peak = click_peaks[i, j] if clicks[i, j] else dark_peaks[i, j]
            hd = noise[i, j]
            if j == herald_slot and herald_n > 0:
                peak = herald_peaks[i]
                hd = float(to_volts(herald_x[i], calibration))
            slots.append(SlotRecord(j, float(peak), float(hd)))
        if herald_n == 2 and np.any(clicks[i, lo:herald_slot]):
            planted += 1
        events.append(TraceEvent(i, tuple(slots)))
    expected = n_events * (1.0 - (1.0 - q) ** (herald_slot - lo)) if herald_n == 2 else 0.0
    return SyntheticCorpus(events=events, planted_contaminations=planted, expected_removals=expected)
