"""Cohort data model, CSV ingestion, and inclusion filters.

A cohort is a set of cancer patients with demographics, a diagnosis date,
an optional death date, and a history of timestamped pathology observations.
Each observation carries its own laboratory reference range because normal
ranges vary by reporting laboratory.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from datetime import date, timedelta
from enum import Enum
from pathlib import Path

FOLLOW_UP_DAYS = 730  # "2 years" fixed as 730 days; deterministic boundary

PATIENTS_COLUMNS = ["patient_id", "sex", "age_at_diagnosis", "diagnosis_date", "death_date"]
OBSERVATIONS_COLUMNS = ["patient_id", "measure", "value", "date", "ref_low", "ref_high"]


class Measure(Enum):
    """The five haematological measures tracked per patient."""

    PLATELETS = "PLATELETS"
    MCV = "MCV"
    MCH = "MCH"
    MCHC = "MCHC"
    RDW = "RDW"


MEASURES = tuple(Measure)


class Sex(Enum):
    MALE = "M"
    FEMALE = "F"


class SurvivalStatus(Enum):
    DECEASED_WITHIN_2Y = 1
    SURVIVED_2Y = 0


class CohortError(ValueError):
    """Raised when cohort files violate the schema or referential integrity.

    All problems found are kept in .problems; the message shows the first few.
    """

    _SHOWN = 3

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        message = "; ".join(self.problems[: self._SHOWN])
        if len(self.problems) > self._SHOWN:
            message += f" (+{len(self.problems) - self._SHOWN} more problems)"
        super().__init__(message)


@dataclass(frozen=True)
class ReferenceRange:
    """Laboratory-reported normal interval, attached per individual test."""

    low: float
    high: float

    def __post_init__(self):
        if not (self.low < self.high):
            raise ValueError(f"reference range inverted: low={self.low} >= high={self.high}")

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class PathologyObservation:
    patient_id: str
    measure: Measure
    value: float
    date: date
    range: ReferenceRange

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"observation value must be finite and non-negative, got {self.value}")


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    sex: Sex
    age_at_diagnosis: int
    diagnosis_date: date
    death_date: date | None
    observations: tuple[PathologyObservation, ...] = ()

    def observations_for(self, measure: Measure) -> tuple[PathologyObservation, ...]:
        return tuple(o for o in self.observations if o.measure is measure)

    def has_measure(self, measure: Measure) -> bool:
        return any(o.measure is measure for o in self.observations)


@dataclass(frozen=True)
class Cohort:
    """Immutable patient collection plus the last date covered by the extract."""

    patients: tuple[PatientRecord, ...]
    data_end_date: date

    def __len__(self) -> int:
        return len(self.patients)

    def patient_ids(self) -> tuple[str, ...]:
        return tuple(p.patient_id for p in self.patients)


@dataclass
class FilterReport:
    """Counts of patients removed per inclusion-filter reason."""

    removed_insufficient_followup: int = 0
    removed_incomplete_panel: int = 0
    retained: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "removed_insufficient_followup": self.removed_insufficient_followup,
            "removed_incomplete_panel": self.removed_incomplete_panel,
            "retained": self.retained,
        }

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def survival_label(patient: PatientRecord) -> SurvivalStatus:
    """Binary 2-year outcome: deceased iff death falls within 730 days of diagnosis."""
    if patient.death_date is not None and patient.death_date <= patient.diagnosis_date + timedelta(days=FOLLOW_UP_DAYS):
        return SurvivalStatus.DECEASED_WITHIN_2Y
    return SurvivalStatus.SURVIVED_2Y


def apply_inclusion_filters(cohort: Cohort) -> tuple[Cohort, FilterReport]:
    """Retain patients with >= 2 years of follow-up and results for all 5 measures.

    Returns a new cohort (input untouched) and a report of removals per reason.
    A patient failing both checks is counted under insufficient follow-up.
    """
    report = FilterReport()
    kept = []
    for patient in cohort.patients:
        if patient.diagnosis_date + timedelta(days=FOLLOW_UP_DAYS) > cohort.data_end_date:
            report.removed_insufficient_followup += 1
            continue
        if not all(patient.has_measure(m) for m in MEASURES):
            report.removed_incomplete_panel += 1
            continue
        kept.append(patient)
    report.retained = len(kept)
    return Cohort(patients=tuple(kept), data_end_date=cohort.data_end_date), report


def apply_followup_filter(cohort: Cohort) -> Cohort:
    """Drop only the insufficient-follow-up patients (keeps incomplete panels).

    Used for history-group statistics, which are meaningful per measure even
    when a patient is missing some other measure.
    """
    kept = tuple(
        p for p in cohort.patients if p.diagnosis_date + timedelta(days=FOLLOW_UP_DAYS) <= cohort.data_end_date
    )
    return Cohort(patients=kept, data_end_date=cohort.data_end_date)


# ---------------------------------------------------------------------------
# CSV ingestion / serialization
# ---------------------------------------------------------------------------


def _parse_date(raw: str, file: str, line: int, fieldname: str, problems: list[str]) -> date | None:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        problems.append(f"{file}:{line}: field '{fieldname}': unparseable date {raw!r}")
        return None


def _parse_float(raw: str, file: str, line: int, fieldname: str, problems: list[str]) -> float | None:
    try:
        value = float(raw)
    except ValueError:
        problems.append(f"{file}:{line}: field '{fieldname}': unparseable number {raw!r}")
        return None
    if not math.isfinite(value):
        problems.append(f"{file}:{line}: field '{fieldname}': non-finite number {raw!r}")
        return None
    return value


def _check_header(header: list[str] | None, expected: list[str], file: str, problems: list[str]) -> bool:
    if header != expected:
        problems.append(f"{file}:1: expected header {','.join(expected)}, got {header}")
        return False
    return True


def ingest_cohort(patients_file: str | Path, observations_file: str | Path, data_end_date: date) -> Cohort:
    """Parse and validate the two cohort CSVs into a Cohort.

    Every malformed row is reported with file, line, and field; nothing is
    silently dropped. All problems found are aggregated into one CohortError.
    """
    patients_file = Path(patients_file)
    observations_file = Path(observations_file)
    problems: list[str] = []
    pfile = str(patients_file)
    ofile = str(observations_file)

    patients: dict[str, PatientRecord] = {}
    with open(patients_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not _check_header(header, PATIENTS_COLUMNS, pfile, problems):
            raise CohortError(problems)
        for line, row in enumerate(reader, start=2):
            if len(row) != len(PATIENTS_COLUMNS):
                problems.append(f"{pfile}:{line}: expected {len(PATIENTS_COLUMNS)} fields, got {len(row)}")
                continue
            pid, sex_raw, age_raw, diag_raw, death_raw = (v.strip() for v in row)
            if not pid:
                problems.append(f"{pfile}:{line}: field 'patient_id': empty")
                continue
            if pid in patients:
                problems.append(f"{pfile}:{line}: field 'patient_id': duplicate patient_id {pid!r}")
                continue
            try:
                sex = Sex(sex_raw)
            except ValueError:
                problems.append(f"{pfile}:{line}: field 'sex': must be M or F, got {sex_raw!r}")
                continue
            try:
                age = int(age_raw)
                if age < 0:
                    raise ValueError
            except ValueError:
                problems.append(f"{pfile}:{line}: field 'age_at_diagnosis': must be a non-negative integer, got {age_raw!r}")
                continue
            diagnosis = _parse_date(diag_raw, pfile, line, "diagnosis_date", problems)
            if diagnosis is None:
                continue
            death: date | None = None
            if death_raw:
                death = _parse_date(death_raw, pfile, line, "death_date", problems)
                if death is None:
                    continue
                if death < diagnosis:
                    problems.append(
                        f"{pfile}:{line}: field 'death_date': death_date {death.isoformat()} "
                        f"precedes diagnosis_date {diagnosis.isoformat()}"
                    )
                    continue
            patients[pid] = PatientRecord(
                patient_id=pid, sex=sex, age_at_diagnosis=age, diagnosis_date=diagnosis, death_date=death
            )

    observations: dict[str, list[PathologyObservation]] = {pid: [] for pid in patients}
    with open(observations_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not _check_header(header, OBSERVATIONS_COLUMNS, ofile, problems):
            raise CohortError(problems)
        for line, row in enumerate(reader, start=2):
            if len(row) != len(OBSERVATIONS_COLUMNS):
                problems.append(f"{ofile}:{line}: expected {len(OBSERVATIONS_COLUMNS)} fields, got {len(row)}")
                continue
            pid, measure_raw, value_raw, date_raw, low_raw, high_raw = (v.strip() for v in row)
            if pid not in patients:
                problems.append(f"{ofile}:{line}: field 'patient_id': unknown patient_id {pid!r}")
                continue
            try:
                measure = Measure(measure_raw)
            except ValueError:
                problems.append(f"{ofile}:{line}: field 'measure': unknown measure {measure_raw!r}")
                continue
            value = _parse_float(value_raw, ofile, line, "value", problems)
            obs_date = _parse_date(date_raw, ofile, line, "date", problems)
            low = _parse_float(low_raw, ofile, line, "ref_low", problems)
            high = _parse_float(high_raw, ofile, line, "ref_high", problems)
            if None in (value, obs_date, low, high):
                continue
            if value < 0:
                problems.append(f"{ofile}:{line}: field 'value': must be non-negative, got {value}")
                continue
            if low >= high:
                problems.append(f"{ofile}:{line}: field 'ref_low': reference range inverted, low={low} >= high={high}")
                continue
            if obs_date > data_end_date:
                problems.append(
                    f"{ofile}:{line}: field 'date': observation date {obs_date.isoformat()} "
                    f"is after data_end_date {data_end_date.isoformat()}"
                )
                continue
            observations[pid].append(
                PathologyObservation(
                    patient_id=pid, measure=measure, value=value, date=obs_date, range=ReferenceRange(low, high)
                )
            )

    if problems:
        raise CohortError(problems)

    records = tuple(
        replace(patient, observations=tuple(observations[pid])) for pid, patient in patients.items()
    )
    return Cohort(patients=records, data_end_date=data_end_date)


def write_cohort(cohort: Cohort, out_dir: str | Path) -> None:
    """Write patients.csv, observations.csv, and meta.json for a cohort."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "patients.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATIENTS_COLUMNS)
        for p in cohort.patients:
            writer.writerow(
                [
                    p.patient_id,
                    p.sex.value,
                    p.age_at_diagnosis,
                    p.diagnosis_date.isoformat(),
                    p.death_date.isoformat() if p.death_date else "",
                ]
            )
    with open(out / "observations.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OBSERVATIONS_COLUMNS)
        for p in cohort.patients:
            for o in p.observations:
                writer.writerow(
                    [o.patient_id, o.measure.value, repr(o.value), o.date.isoformat(), repr(o.range.low), repr(o.range.high)]
                )
    with open(out / "meta.json", "w") as fh:
        json.dump({"data_end_date": cohort.data_end_date.isoformat()}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_cohort(in_dir: str | Path, data_end_date: date | None = None) -> Cohort:
    """Read a cohort directory written by write_cohort (or hand-built to the same schema)."""
    in_dir = Path(in_dir)
    if data_end_date is None:
        meta_path = in_dir / "meta.json"
        if not meta_path.exists():
            raise CohortError([f"{meta_path}: missing; pass data_end_date explicitly"])
        with open(meta_path) as fh:
            meta = json.load(fh)
        data_end_date = date.fromisoformat(meta["data_end_date"])
    return ingest_cohort(in_dir / "patients.csv", in_dir / "observations.csv", data_end_date)
