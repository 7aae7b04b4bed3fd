import csv
import io
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from koopnet.dataclasses.base_dataclass import Base
from koopnet.errors import FormatError

STATUSES = ("ok", "out_of_scale", "unidentified", "failed")
COLUMNS = ("experiment", "model", "dataset", "seed", "metric", "value", "status", "params", "note")


def _float_to_doc(v: float | None):
    if v is None or math.isfinite(v):
        return v
    return repr(v)  # "inf", "-inf", "nan"


def _float_from_doc(v):
    if v is None or v == "":
        return None
    return float(v)


@dataclass
class ReportRow:
    experiment: str
    model: str
    dataset: str
    seed: int
    metric: str
    value: float | None
    status: str = "ok"
    params: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise FormatError(f"report row status must be one of {STATUSES}, got {self.status!r}")

    def to_document(self) -> dict:
        doc = asdict(self)
        doc["value"] = _float_to_doc(self.value)
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "ReportRow":
        try:
            return cls(
                experiment=str(doc["experiment"]),
                model=str(doc["model"]),
                dataset=str(doc["dataset"]),
                seed=int(doc["seed"]),
                metric=str(doc["metric"]),
                value=_float_from_doc(doc["value"]),
                status=str(doc.get("status", "ok")),
                params=dict(doc.get("params") or {}),
                note=str(doc.get("note", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed report row {doc!r}: {e}") from e


@dataclass
class EvalReport(Base):
    """Measurements of one evaluate run plus the manifest that traces them."""

    rows: list[ReportRow] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    config_hash: str = ""

    def add(self, **kwargs) -> ReportRow:
        row = ReportRow(**kwargs)
        self.rows.append(row)
        return row

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    def experiment(self, name: str) -> list[ReportRow]:
        return [r for r in self.rows if r.experiment == name]

    def value(self, experiment: str, model: str, metric: str, **params) -> float | None:
        for r in self.rows:
            if (r.experiment, r.model, r.metric) == (experiment, model, metric) and all(
                r.params.get(k) == v for k, v in params.items()
            ):
                return r.value
        raise KeyError(f"no {metric} row for {model} in {experiment} with {params}")

    # CSV: one row per measurement
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config_hash={self.config_hash}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.rows:
            writer.writerow([
                r.experiment,
                r.model,
                r.dataset,
                r.seed,
                r.metric,
                "" if r.value is None else repr(float(r.value)),
                r.status,
                self.json_to_str(r.params),
                r.note,
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EvalReport":
        lines = text.splitlines()
        config_hash = ""
        if lines and lines[0].startswith("# config_hash="):
            config_hash = lines[0].split("=", 1)[1]
            lines = lines[1:]
        reader = csv.DictReader(lines)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise FormatError(f"report CSV columns must be {COLUMNS}, got {reader.fieldnames}")
        rows = []
        for rec in reader:
            rec["params"] = cls.str_to_json(rec["params"], where="report params") if rec["params"] else {}
            rows.append(ReportRow.from_document(rec))
        return cls(rows=rows, config_hash=config_hash)

    # JSON: nested by experiment
    def to_document(self) -> dict:
        experiments: dict[str, list[dict]] = {}
        for r in self.rows:
            doc = r.to_document()
            experiments.setdefault(doc.pop("experiment"), []).append(doc)
        return {"config_hash": self.config_hash, "manifest": self.manifest, "experiments": experiments}

    @classmethod
    def from_document(cls, doc: dict) -> "EvalReport":
        if not isinstance(doc, dict) or "experiments" not in doc:
            raise FormatError("report document needs an 'experiments' object")
        rows = []
        for name, items in doc["experiments"].items():
            for item in items:
                rows.append(ReportRow.from_document({**item, "experiment": name}))
        return cls(rows=rows, manifest=doc.get("manifest", {}), config_hash=doc.get("config_hash", ""))

    def save(self, directory: str | os.PathLike, stem: str = "report") -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"csv": directory / f"{stem}.csv", "json": directory / f"{stem}.json"}
        paths["csv"].write_text(self.to_csv(), encoding="utf-8")
        self.write_json(paths["json"], self.to_document())
        return paths

    @classmethod
    def load(cls, path: str | os.PathLike) -> "EvalReport":
        p = Path(path)
        if p.suffix == ".csv":
            if not p.exists():
                raise FormatError(f"missing file: {p}")
            return cls.from_csv(p.read_text(encoding="utf-8"))
        return cls.from_document(cls.read_json(p))
