"""Extended DMD over a dictionary of monomial observables."""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from koopnet.baselines.base import LinearBaseline
from koopnet.errors import ConfigError, FormatError, ShapeError, SystemIdentificationError
from koopnet.numerics import EIG_MAX_DIM, as_matrix, eig_small, eigenvalues, pinv_solve, svd

log = logging.getLogger(__name__)

MAX_OBSERVABLES = 2000
GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Dictionary:
    """Observables as products of state coordinates; term (i,) is the identity on x_i.

    The first n terms must be the identity observables in node order.
    """

    n: int
    terms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.terms) > MAX_OBSERVABLES:
            raise ConfigError(f"dictionary holds {len(self.terms)} observables, limit is {MAX_OBSERVABLES}")
        if tuple(self.terms[: self.n]) != tuple((i,) for i in range(self.n)):
            raise ConfigError("dictionary must begin with the identity observables x_0..x_{n-1}")
        for term in self.terms:
            if not term or any(not 0 <= i < self.n for i in term):
                raise ConfigError(f"dictionary term {term} refers to a node outside 0..{self.n - 1}")

    @classmethod
    def identity(cls, n: int) -> "Dictionary":
        return cls(n=n, terms=tuple((i,) for i in range(n)))

    @classmethod
    def monomials(cls, n: int, degree: int = 2, limit: int = MAX_OBSERVABLES) -> "Dictionary":
        """Identity plus every monomial x_i x_j ... (i <= j <= ...) up to `degree`, capped at `limit`."""
        terms = [(i,) for i in range(n)]
        for d in range(2, degree + 1):
            terms.extend(itertools.combinations_with_replacement(range(n), d))
        if len(terms) > limit:
            log.info("EDMD dictionary capped at %d of %d monomials", limit, len(terms))
            terms = terms[:limit]
        return cls(n=n, terms=tuple(terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, x) -> np.ndarray:
        """Lift (..., n) states to (..., D) observables."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n:
            raise ShapeError(f"dictionary is over {self.n} nodes, got states of length {x.shape[-1]}")
        out = np.empty(x.shape[:-1] + (len(self.terms),))
        lengths = np.array([len(t) for t in self.terms])
        for length in np.unique(lengths):
            cols = np.flatnonzero(lengths == length)
            idx = np.array([self.terms[c] for c in cols])
            out[..., cols] = np.prod(x[..., idx], axis=-1)
        return out

    def describe(self) -> dict:
        return {"n": self.n, "terms": [list(t) for t in self.terms]}

    @classmethod
    def from_document(cls, doc: dict) -> "Dictionary":
        return cls(n=int(doc["n"]), terms=tuple(tuple(int(i) for i in t) for t in doc["terms"]))


@dataclass(eq=False)
class EdmdModel(LinearBaseline):
    dictionary: Dictionary
    operator: np.ndarray  # K_lift, (D, D)
    kind = "edmd"

    @property
    def n(self) -> int:
        return self.dictionary.n

    def eigenvalues(self) -> np.ndarray:
        if self.operator.shape[0] <= EIG_MAX_DIM:
            return eig_small(self.operator).values
        return eigenvalues(self.operator)

    def predict(self, x0, t: int) -> np.ndarray:
        x0 = self._check_state(x0)
        t = self._check_t(t)
        psi = self.dictionary(x0)
        psi = psi @ np.linalg.matrix_power(self.operator, t).T
        return psi[..., : self.n]

    def predict_trajectory(self, x0, T: int) -> np.ndarray:
        x0 = self._check_state(x0)
        T = self._check_t(T)
        psi = self.dictionary(x0.reshape(-1, self.n))
        out = np.empty((psi.shape[0], T + 1, self.n))
        out[:, 0] = x0.reshape(-1, self.n)
        for t in range(1, T + 1):
            psi = psi @ self.operator.T
            out[:, t] = psi[:, : self.n]
        return out.reshape(x0.shape[:-1] + (T + 1, self.n))

    def blob_arrays(self) -> list[np.ndarray]:
        return [self.operator]

    def describe(self) -> dict:
        return {"n": self.n, "observables": len(self.dictionary), "dictionary": self.dictionary.describe()}

    @classmethod
    def load(cls, path) -> "EdmdModel":
        manifest, arrays = cls.read_checkpoint(path)
        if manifest["kind"] != cls.kind or len(arrays) != 1:
            raise FormatError(f"{path}: not an EDMD checkpoint (kind={manifest['kind']!r})")
        return cls(dictionary=Dictionary.from_document(manifest["dictionary"]), operator=arrays[0])


def edmd_fit(X, Xp, dictionary: Dictionary) -> EdmdModel:
    """K_lift minimising ||Psi(X') - K_lift Psi(X)||_F; X, X' hold snapshots as columns."""
    X = as_matrix("EDMD snapshots X", X)
    Xp = as_matrix("EDMD snapshots X'", Xp)
    if X.shape != Xp.shape:
        raise ShapeError(f"snapshot matrices differ in shape: X {X.shape}, X' {Xp.shape}")
    psi = dictionary(X.T)  # (N, D)
    psi_next = dictionary(Xp.T)

    S = svd(psi)[1]
    # cond(Psi Psi^T) = cond(Psi)^2
    singular = psi.shape[0] < psi.shape[1] or S[-1] == 0.0
    cond = np.inf if singular else (S[0] / S[-1]) ** 2
    if cond > GRAM_COND_LIMIT:
        raise SystemIdentificationError(
            f"unable to identify a system: lifted Gram matrix of {len(dictionary)} observables "
            f"over {psi.shape[0]} snapshots has condition {cond:.3g} (limit {GRAM_COND_LIMIT:.0e})"
        )
    operator = pinv_solve(psi, psi_next).T
    return EdmdModel(dictionary=dictionary, operator=operator)


def edmd_predict(model: EdmdModel, x0, t: int) -> np.ndarray:
    return model.predict(x0, t)
