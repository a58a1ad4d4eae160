"""History-window grouping and the six labeling schemes for patient-measure pairs.

Each observation of a measure earns a candidate label under a scheme; the
patient-measure label is the maximum candidate, so a more alarming reading
always takes priority. The close window defaults to 60 days before through
30 days after diagnosis (months fixed at 30 days); the far horizon for the
six-month schemes defaults to 180 days. Observations later than the close
window's end are ignored by every scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .cohort import Cohort, Measure, PatientRecord
from .ranges import SOFT_MARGIN_DEFAULT, RangeStatus, classify

FAR_DAYS_DEFAULT = 180


class Group(Enum):
    """Out-of-range history relative to the close diagnosis window (hard range only)."""

    G1_NO_OOR = 1
    G2_OOR_OUTSIDE_WINDOW = 2
    G3_OOR_WITHIN_WINDOW = 3


class Version(Enum):
    V1 = "v1"
    V2 = "v2"
    V3 = "v3"
    V4 = "v4"
    V5 = "v5"
    V6 = "v6"


VERSIONS = tuple(Version)

# Highest label each scheme can produce (the hard-violation tiers of V4/V6 add a 3).
LABEL_MAX = {
    Version.V1: 2,
    Version.V2: 2,
    Version.V3: 2,
    Version.V4: 3,
    Version.V5: 2,
    Version.V6: 3,
}


@dataclass(frozen=True)
class DiagnosisWindow:
    """Close-to-diagnosis period as day offsets relative to the diagnosis date."""

    start_offset_days: int = -60
    end_offset_days: int = 30

    def __post_init__(self):
        if not (self.start_offset_days < self.end_offset_days):
            raise ValueError(
                f"window start {self.start_offset_days} must precede end {self.end_offset_days}"
            )

    def contains(self, offset_days: int) -> bool:
        return self.start_offset_days <= offset_days <= self.end_offset_days


DEFAULT_WINDOW = DiagnosisWindow()


class MissingMeasureError(ValueError):
    def __init__(self, patient_id: str, measure: Measure):
        super().__init__(f"patient {patient_id!r} has no observations for {measure.value}")


def _observation_statuses(
    patient: PatientRecord, measure: Measure, window: DiagnosisWindow, margin: float
) -> list[tuple[int, RangeStatus]]:
    """(day offset, range status) per usable observation, oldest-first order not required."""
    out = []
    for obs in patient.observations_for(measure):
        offset = (obs.date - patient.diagnosis_date).days
        if offset > window.end_offset_days:
            continue  # history ends at the close window's post-diagnosis edge
        out.append((offset, classify(obs, margin)))
    return out


def assign_group(
    patient: PatientRecord,
    measure: Measure,
    window: DiagnosisWindow = DEFAULT_WINDOW,
    margin: float = SOFT_MARGIN_DEFAULT,
) -> Group:
    """G3 if any hard violation inside the window, else G2 if any outside, else G1."""
    if not patient.has_measure(measure):
        raise MissingMeasureError(patient.patient_id, measure)
    group = Group.G1_NO_OOR
    for offset, status in _observation_statuses(patient, measure, window, margin):
        if not status.hard_out:
            continue
        if window.contains(offset):
            return Group.G3_OOR_WITHIN_WINDOW
        group = Group.G2_OOR_OUTSIDE_WINDOW
    return group


def _candidate(version: Version, offset: int, status: RangeStatus, window: DiagnosisWindow, far_days: int) -> int:
    in_window = window.contains(offset)
    if version is Version.V1:
        return 2 if status.hard_out and in_window else 1
    if version is Version.V2:
        return 2 if status.hard_out else 1
    if version is Version.V3:
        return 2 if status.hard_out and offset >= -far_days else 1
    if version is Version.V4:
        if status.hard_out and in_window:
            return 3
        if status.soft_out and offset < 0:
            return 2
        return 1
    if version is Version.V5:
        return 2 if status.soft_out else 1
    if version is Version.V6:
        if status.hard_out and in_window:
            return 3
        if status.soft_out and -far_days <= offset < window.start_offset_days:
            return 2
        return 1
    raise ValueError(f"unknown version {version}")


def label_version(
    patient: PatientRecord,
    measure: Measure,
    version: Version,
    window: DiagnosisWindow = DEFAULT_WINDOW,
    far_days: int = FAR_DAYS_DEFAULT,
    margin: float = SOFT_MARGIN_DEFAULT,
) -> int:
    """Label one patient-measure pair under one scheme (max candidate over observations)."""
    if not patient.has_measure(measure):
        raise MissingMeasureError(patient.patient_id, measure)
    label = 1
    for offset, status in _observation_statuses(patient, measure, window, margin):
        label = max(label, _candidate(version, offset, status, window, far_days))
    return label


def label_patient(
    patient: PatientRecord,
    window: DiagnosisWindow = DEFAULT_WINDOW,
    far_days: int = FAR_DAYS_DEFAULT,
    margin: float = SOFT_MARGIN_DEFAULT,
) -> dict[Measure, dict[Version, int]]:
    """All six labels for every measure of one patient, computing statuses once."""
    labels: dict[Measure, dict[Version, int]] = {}
    for measure in Measure:
        if not patient.has_measure(measure):
            raise MissingMeasureError(patient.patient_id, measure)
        per_version = {v: 1 for v in VERSIONS}
        for offset, status in _observation_statuses(patient, measure, window, margin):
            for version in VERSIONS:
                cand = _candidate(version, offset, status, window, far_days)
                if cand > per_version[version]:
                    per_version[version] = cand
        labels[measure] = per_version
    return labels


def label_cohort(
    cohort: Cohort,
    window: DiagnosisWindow = DEFAULT_WINDOW,
    far_days: int = FAR_DAYS_DEFAULT,
    margin: float = SOFT_MARGIN_DEFAULT,
) -> dict[str, dict[Measure, dict[Version, int]]]:
    """Label vector per patient id; requires every patient to have all five measures."""
    return {
        patient.patient_id: label_patient(patient, window, far_days, margin) for patient in cohort.patients
    }


def write_labels_csv(
    cohort: Cohort, labels: dict[str, dict[Measure, dict[Version, int]]], path: str | Path
) -> None:
    """labels.csv: one row per (patient, measure) with the six scheme labels."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient_id", "measure", *(v.value for v in VERSIONS)])
        for patient in cohort.patients:
            per_measure = labels[patient.patient_id]
            for measure in Measure:
                writer.writerow(
                    [patient.patient_id, measure.value, *(per_measure[measure][v] for v in VERSIONS)]
                )
