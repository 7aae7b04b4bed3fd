"""Exact DMD on snapshot pairs pooled across trajectories."""
import logging
from dataclasses import dataclass

import numpy as np

from koopnet.baselines.base import LinearBaseline
from koopnet.errors import DegenerateDataError, FormatError, ShapeError
from koopnet.numerics import ComplexSpectrum, as_matrix, eig_small, numerical_rank, svd

log = logging.getLogger(__name__)

ENERGY = 1.0 - 1e-10
EIGVEC_COND_LIMIT = 1e10


def snapshot_pairs(states) -> tuple[np.ndarray, np.ndarray]:
    """(S, T+1, n) trajectories -> X, X' of shape (n, S*T), columns sample-major."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim == 2:
        states = states[None]
    if states.ndim != 3 or states.shape[1] < 2:
        raise ShapeError(f"snapshot pairs need (S, T+1 >= 2, n) trajectories, got {states.shape}")
    n = states.shape[2]
    X = states[:, :-1].reshape(-1, n).T
    Xp = states[:, 1:].reshape(-1, n).T
    return np.ascontiguousarray(X), np.ascontiguousarray(Xp)


def energy_rank(S: np.ndarray, energy: float = ENERGY) -> int:
    """Smallest r whose leading squared singular values hold `energy` of the total."""
    sq = S ** 2
    cumulative = np.cumsum(sq) / np.sum(sq)
    return int(min(np.searchsorted(cumulative, energy) + 1, S.size))


@dataclass(eq=False)
class DmdModel(LinearBaseline):
    rank: int
    basis: np.ndarray  # U_r, (n, r)
    a_tilde: np.ndarray  # (r, r)
    spectrum: ComplexSpectrum
    modes: np.ndarray  # exact DMD modes, (n, r) complex
    kind = "dmd"

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.values

    def full_operator(self) -> np.ndarray:
        return self.basis @ self.a_tilde @ self.basis.T

    def _reduced_powers(self, z0: np.ndarray, steps: np.ndarray) -> np.ndarray:
        """z0 (B, r) -> (B, len(steps), r) reduced states Ã^t z0."""
        W = self.spectrum.vectors
        if W is not None and np.linalg.cond(W) < EIGVEC_COND_LIMIT:
            coeff = np.linalg.solve(W, z0.T.astype(np.complex128)).T  # (B, r)
            powers = self.spectrum.values[None, :] ** steps[:, None]  # (len, r)
            z = (coeff[:, None, :] * powers[None, :, :]) @ W.T
            return z.real
        # defective or near-defective Ã: fall back to repeated products
        out = np.empty((z0.shape[0], len(steps), self.rank))
        for k, t in enumerate(steps):
            out[:, k] = z0 @ np.linalg.matrix_power(self.a_tilde, int(t)).T
        return out

    def predict(self, x0, t: int) -> np.ndarray:
        x0 = self._check_state(x0)
        t = self._check_t(t)
        batch = x0.reshape(-1, self.n)
        z0 = batch @ self.basis
        z = z0 if t == 0 else self._reduced_powers(z0, np.array([t]))[:, 0]
        return (z @ self.basis.T).reshape(x0.shape)

    def predict_trajectory(self, x0, T: int) -> np.ndarray:
        x0 = self._check_state(x0)
        T = self._check_t(T)
        batch = x0.reshape(-1, self.n)
        z0 = batch @ self.basis
        z = self._reduced_powers(z0, np.arange(T + 1))
        z[:, 0] = z0
        out = z @ self.basis.T
        return out.reshape(x0.shape[:-1] + (T + 1, self.n))

    def blob_arrays(self) -> list[np.ndarray]:
        vectors = self.spectrum.vectors
        return [
            self.basis,
            self.a_tilde,
            self.spectrum.values.real,
            self.spectrum.values.imag,
            vectors.real,
            vectors.imag,
            self.modes.real,
            self.modes.imag,
        ]

    def describe(self) -> dict:
        return {"rank": self.rank, "n": self.n}

    @classmethod
    def load(cls, path) -> "DmdModel":
        manifest, arrays = cls.read_checkpoint(path)
        if manifest["kind"] != cls.kind or len(arrays) != 8:
            raise FormatError(f"{path}: not a DMD checkpoint (kind={manifest['kind']!r})")
        basis, a_tilde, vr, vi, wr, wi, mr, mi = arrays
        spectrum = ComplexSpectrum(values=vr + 1j * vi, vectors=wr + 1j * wi)
        return cls(rank=int(manifest["rank"]), basis=basis, a_tilde=a_tilde, spectrum=spectrum, modes=mr + 1j * mi)


def dmd_fit(X, Xp, rank: int | None = None) -> DmdModel:
    X = as_matrix("DMD snapshots X", X)
    Xp = as_matrix("DMD snapshots X'", Xp)
    if X.shape != Xp.shape:
        raise ShapeError(f"snapshot matrices differ in shape: X {X.shape}, X' {Xp.shape}")
    if not np.any(X):
        raise DegenerateDataError("DMD snapshot matrix X is all zeros")

    U, S, V = svd(X)
    available = numerical_rank(S)
    r = energy_rank(S) if rank is None else int(rank)
    if r < 1:
        raise ShapeError(f"DMD rank must be at least 1, got {rank}")
    if r > available:
        log.info("DMD rank %d exceeds numerical rank %d; truncating", r, available)
        r = available

    Ur, Sr, Vr = U[:, :r], S[:r], V[:, :r]
    a_tilde = (Ur.T @ Xp @ Vr) / Sr[None, :]
    spectrum = eig_small(a_tilde)
    modes = (Xp @ Vr / Sr[None, :]) @ spectrum.vectors
    log.debug("DMD fit: n=%d pairs=%d rank=%d radius=%.6g", X.shape[0], X.shape[1], r, spectrum.radius)
    return DmdModel(rank=r, basis=Ur, a_tilde=a_tilde, spectrum=spectrum, modes=modes)


def dmd_predict(model: DmdModel, x0, t: int) -> np.ndarray:
    return model.predict(x0, t)
