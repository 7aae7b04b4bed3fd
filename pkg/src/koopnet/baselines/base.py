import logging
import os
from pathlib import Path

import numpy as np

from koopnet.dataclasses.base_dataclass import Base
from koopnet.errors import FormatError, ShapeError

log = logging.getLogger(__name__)

OUT_OF_SCALE_RADIUS = 1.5


# Base class for the fitted linear baselines
class LinearBaseline(Base):
    kind: str = ""
    n: int

    def eigenvalues(self) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x0, t: int) -> np.ndarray:
        raise NotImplementedError

    def predict_trajectory(self, x0, T: int) -> np.ndarray:
        """Rows 0..T for each initial state; x0 is (n,) or (B, n)."""
        raise NotImplementedError

    def blob_arrays(self) -> list[np.ndarray]:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    @property
    def spectral_radius(self) -> float:
        values = self.eigenvalues()
        return float(np.max(np.abs(values))) if len(values) else 0.0

    @property
    def status(self) -> str:
        return "out_of_scale" if self.spectral_radius > OUT_OF_SCALE_RADIUS else "ok"

    def _check_state(self, x0) -> np.ndarray:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape[-1] != self.n:
            raise ShapeError(f"{self.kind} was fitted on {self.n} nodes, got a state of length {x0.shape[-1]}")
        return x0

    @staticmethod
    def _check_t(t: int) -> int:
        if t < 0:
            raise ShapeError(f"prediction step must be non-negative, got t={t}")
        return int(t)

    def save(self, path: str | os.PathLike, extra: dict | None = None) -> dict[str, Path]:
        """`path` is the blob; its manifest is written next to it with a .json suffix."""
        path = Path(path)
        shapes = self.write_blob(path, self.blob_arrays())
        manifest = {"kind": self.kind, "shapes": shapes, **self.describe(), **(extra or {})}
        manifest_path = path.with_name(path.name + ".json")
        self.write_json(manifest_path, manifest)
        log.info("saved %s checkpoint %s", self.kind, path)
        return {"blob": path, "manifest": manifest_path}

    @classmethod
    def read_checkpoint(cls, path: str | os.PathLike) -> tuple[dict, list[np.ndarray]]:
        path = Path(path)
        manifest = cls.read_json(path.with_name(path.name + ".json"))
        if "shapes" not in manifest or "kind" not in manifest:
            raise FormatError(f"{path}: checkpoint manifest lacks 'kind' or 'shapes'")
        return manifest, cls.read_blob(path, manifest["shapes"])
