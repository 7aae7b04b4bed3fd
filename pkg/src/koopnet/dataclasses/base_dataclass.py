import hashlib
import json
import os
from pathlib import Path

import numpy as np

from koopnet.errors import FormatError
from koopnet.numerics import check_finite


# Template class
class Base:
    """Persistence helpers shared by every on-disk record.

    Records are a JSON document (UTF-8, sorted keys) plus, where arrays are involved, a
    little-endian float64 blob whose layout the document describes.
    """

    meta_data: dict = {}

    @staticmethod
    def json_to_str(doc) -> str:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)

    @staticmethod
    def str_to_json(text: str, where: str = "document"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"malformed JSON in {where}: {e}") from e

    @classmethod
    def write_json(cls, path: str | os.PathLike, doc) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
        Path(path).write_text(text + "\n", encoding="utf-8")

    @classmethod
    def read_json(cls, path: str | os.PathLike):
        p = Path(path)
        if not p.exists():
            raise FormatError(f"missing file: {p}")
        return cls.str_to_json(p.read_text(encoding="utf-8"), where=str(p))

    @staticmethod
    def content_hash(doc) -> str:
        return hashlib.sha256(Base.json_to_str(doc).encode("utf-8")).hexdigest()

    @staticmethod
    def file_hash(path: str | os.PathLike) -> str:
        h = hashlib.sha256()
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
        return h.hexdigest()

    @staticmethod
    def write_blob(path: str | os.PathLike, arrays: list[np.ndarray]) -> list[list[int]]:
        """Concatenate arrays as little-endian f64; returns their shapes for the manifest."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        shapes = []
        with open(path, "wb") as f:
            for a in arrays:
                a = np.asarray(a, dtype=np.float64)
                check_finite(f"blob {Path(path).name}", a)
                f.write(a.astype("<f8").tobytes(order="C"))
                shapes.append(list(a.shape))
        return shapes

    @staticmethod
    def read_blob(path: str | os.PathLike, shapes: list[list[int]]) -> list[np.ndarray]:
        p = Path(path)
        if not p.exists():
            raise FormatError(f"missing file: {p}")
        raw = np.frombuffer(p.read_bytes(), dtype="<f8")
        sizes = [int(np.prod(s, dtype=np.int64)) for s in shapes]
        if raw.size != sum(sizes):
            raise FormatError(f"{p}: blob holds {raw.size} values, manifest describes {sum(sizes)}")
        out, offset = [], 0
        for shape, size in zip(shapes, sizes):
            out.append(raw[offset:offset + size].astype(np.float64).reshape(shape))
            offset += size
        return out

    def check_fields(self, **arrays) -> None:
        for name, a in arrays.items():
            check_finite(f"{type(self).__name__}.{name}", a)
