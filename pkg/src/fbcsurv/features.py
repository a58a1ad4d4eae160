"""Deterministic feature matrix construction from per-measure labels.

Column layout (88 columns, fixed order; measures ordered PLATELETS, MCV,
MCH, MCHC, RDW throughout, matching the panel order):

    lbl_<MEASURE> x5 | sex | age_group | sum5
    | add_<M1>_<M2> x10 | mul_<M1>_<M2> x10
    | add_<M1>_<M2>_<M3> x10 | mul_<M1>_<M2>_<M3> x10
    | sexadd_<combo> x40

Pair/triple operands are the five base labels; sex is coded 1 for male and
20 for female so the sex-crossed sums stay separable. An optional second
labeling scheme appends its 86 scheme-dependent columns under an x<version>_
prefix (sex and age_group are scheme-independent and not repeated).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .cohort import Cohort, Measure, MEASURES, Sex, survival_label
from .labeling import Version

SEX_CODE = {Sex.MALE: 1, Sex.FEMALE: 20}

PAIRS = tuple(combinations(MEASURES, 2))
TRIPLES = tuple(combinations(MEASURES, 3))


def age_group(age_at_diagnosis: int) -> int:
    """Decade group: the first digit of the age (69 -> 6, 9 -> 0)."""
    if age_at_diagnosis < 0:
        raise ValueError(f"age must be non-negative, got {age_at_diagnosis}")
    return age_at_diagnosis // 10


def _combo_name(op: str, measures: tuple[Measure, ...]) -> str:
    return f"{op}_" + "_".join(m.value for m in measures)


def _scheme_columns() -> list[str]:
    """The 86 scheme-dependent column names, unprefixed and in matrix order."""
    cols = [f"lbl_{m.value}" for m in MEASURES]
    cols.append("sum5")
    combo = [_combo_name("add", p) for p in PAIRS]
    combo += [_combo_name("mul", p) for p in PAIRS]
    combo += [_combo_name("add", t) for t in TRIPLES]
    combo += [_combo_name("mul", t) for t in TRIPLES]
    cols += combo
    cols += [f"sexadd_{name}" for name in combo]
    return cols


def feature_columns(extra_version: Version | None = None) -> tuple[str, ...]:
    scheme = _scheme_columns()
    cols = scheme[:5] + ["sex", "age_group"] + scheme[5:]
    if extra_version is not None:
        cols += [f"x{extra_version.value}_{name}" for name in _scheme_columns()]
    return tuple(cols)


@dataclass(frozen=True)
class FeatureMatrix:
    column_names: tuple[str, ...]
    patient_ids: tuple[str, ...]
    X: np.ndarray  # (n_patients, n_columns) small non-negative ints
    y: np.ndarray  # (n_patients,) 1 = deceased within 2y
    version: Version
    extra_version: Version | None = None

    def __post_init__(self):
        if self.X.shape != (len(self.patient_ids), len(self.column_names)):
            raise ValueError(f"matrix shape {self.X.shape} does not match ids/columns")
        if self.y.shape != (len(self.patient_ids),):
            raise ValueError("target length does not match patient count")

    def column_index(self, name: str) -> int:
        return self.column_names.index(name)


def _scheme_values(base: list[int], sex_code: int) -> list[int]:
    values = list(base)
    values.append(sum(base))
    by_measure = dict(zip(MEASURES, base))
    combo = [sum(by_measure[m] for m in p) for p in PAIRS]
    combo += [by_measure[p[0]] * by_measure[p[1]] for p in PAIRS]
    combo += [sum(by_measure[m] for m in t) for t in TRIPLES]
    combo += [by_measure[t[0]] * by_measure[t[1]] * by_measure[t[2]] for t in TRIPLES]
    values += combo
    values += [c + sex_code for c in combo]
    return values


def build_matrix(
    cohort: Cohort,
    labels: dict[str, dict[Measure, dict[Version, int]]],
    version: Version,
    extra_version: Version | None = None,
) -> FeatureMatrix:
    """Assemble the named feature matrix for one labeling scheme.

    Column order is fixed before any row is built; regeneration from the same
    inputs is byte-identical after serialization.
    """
    columns = feature_columns(extra_version)
    rows = []
    target = []
    for patient in cohort.patients:
        if patient.patient_id not in labels:
            raise KeyError(f"patient {patient.patient_id!r} has no label vector")
        per_measure = labels[patient.patient_id]
        sex_code = SEX_CODE[patient.sex]
        base = [per_measure[m][version] for m in MEASURES]
        scheme = _scheme_values(base, sex_code)
        row = scheme[:5] + [sex_code, age_group(patient.age_at_diagnosis)] + scheme[5:]
        if extra_version is not None:
            extra_base = [per_measure[m][extra_version] for m in MEASURES]
            row += _scheme_values(extra_base, sex_code)
        rows.append(row)
        target.append(survival_label(patient).value)
    X = np.asarray(rows, dtype=np.int64).reshape(len(rows), len(columns))
    y = np.asarray(target, dtype=np.int64)
    return FeatureMatrix(
        column_names=columns,
        patient_ids=cohort.patient_ids(),
        X=X,
        y=y,
        version=version,
        extra_version=extra_version,
    )


def write_features_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient_id", "target", *matrix.column_names])
        for pid, row, target in zip(matrix.patient_ids, matrix.X, matrix.y):
            writer.writerow([pid, int(target), *(int(v) for v in row)])


def read_features_csv(path: str | Path, version: Version = Version.V1) -> FeatureMatrix:
    """Load a features.csv; the version tag is informational for loaded files."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["patient_id", "target"]:
            raise ValueError(f"{path}: expected header starting patient_id,target")
        columns = tuple(header[2:])
        ids, ys, rows = [], [], []
        for row in reader:
            ids.append(row[0])
            ys.append(int(row[1]))
            rows.append([int(v) for v in row[2:]])
    X = np.asarray(rows, dtype=np.int64).reshape(len(ids), len(columns))
    return FeatureMatrix(
        column_names=columns,
        patient_ids=tuple(ids),
        X=X,
        y=np.asarray(ys, dtype=np.int64),
        version=version,
    )
