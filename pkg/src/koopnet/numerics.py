"""Dense linear algebra and the reverse-mode gradient contract.

Matrices are float64 numpy arrays. The gradient side runs on torch float64 tensors; a
`GradientTape` names the parameter slots of one forward evaluation and returns exactly one
gradient per slot.
"""
import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import torch

from koopnet.errors import NonFiniteError, ShapeError

log = logging.getLogger(__name__)

DTYPE = torch.float64
EIG_MAX_DIM = 512
PINV_RTOL = 1e-12
FD_STEP = 1e-5


def check_finite(name: str, a) -> None:
    arr = np.asarray(a)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        raise NonFiniteError(f"{name} contains non-finite values (first at index {tuple(bad[0])})")


def as_matrix(name: str, a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    check_finite(name, arr)
    return arr


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalues sorted by descending modulus, conjugate pairs adjacent."""

    values: np.ndarray
    vectors: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.values)

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(v.real), float(v.imag)) for v in self.values]

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def sort_spectrum(values: np.ndarray, vectors: np.ndarray | None = None) -> ComplexSpectrum:
    values = np.asarray(values, dtype=np.complex128)
    # modulus rounded so that conjugates tie and then order by imaginary part
    modulus = np.round(np.abs(values), 12)
    order = np.lexsort((-values.imag, -modulus))
    vecs = None if vectors is None else np.asarray(vectors)[:, order]
    return ComplexSpectrum(values=values[order], vectors=vecs)


def svd(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD, A = U diag(S) V^T with S descending."""
    A = as_matrix("svd input", A)
    U, S, Vh = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    return U, S, Vh.T


def eig_small(A) -> ComplexSpectrum:
    A = as_matrix("eig input", A)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"eig_small needs a square matrix, got {A.shape}")
    if A.shape[0] > EIG_MAX_DIM:
        raise ShapeError(f"eig_small is limited to {EIG_MAX_DIM}x{EIG_MAX_DIM}, got {A.shape}")
    # geev: Hessenberg reduction followed by shifted QR
    values, vectors = scipy.linalg.eig(A)
    return sort_spectrum(values, vectors)


def eigenvalues(A) -> np.ndarray:
    """Eigenvalues only, any size; sorted like eig_small."""
    A = as_matrix("eigenvalues input", A)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"eigenvalues needs a square matrix, got {A.shape}")
    return sort_spectrum(scipy.linalg.eigvals(A)).values


def pinv_solve(A, B) -> np.ndarray:
    """Minimum-norm least-squares X for A X = B."""
    A = as_matrix("pinv_solve A", A)
    B = np.asarray(B, dtype=np.float64)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise ShapeError(f"pinv_solve row mismatch: A is {A.shape}, B is {B.shape}")
    check_finite("pinv_solve B", B)

    U, S, V = svd(A)
    X = np.zeros((A.shape[1], B.shape[1]))
    if S.size and S[0] > 0.0:
        keep = S > PINV_RTOL * S[0]
        X = V[:, keep] @ ((U[:, keep].T @ B) / S[keep][:, None])
    return X[:, 0] if vector_rhs else X


def numerical_rank(S: np.ndarray, rtol: float = PINV_RTOL) -> int:
    if S.size == 0 or S[0] == 0.0:
        return 0
    return int(np.count_nonzero(S > rtol * S[0]))


class GradientTape:
    """Named parameter slots plus the forward record of one evaluation.

    Torch's autograd graph is the record itself; `record` runs a forward pass with
    recording enabled and `gradient` walks it backwards once.
    """

    def __init__(self, slots: Mapping[str, torch.Tensor]):
        self.slots = dict(slots)
        for name, p in self.slots.items():
            if not p.requires_grad:
                p.requires_grad_(True)
        self.output: torch.Tensor | None = None

    @classmethod
    def of(cls, module: torch.nn.Module) -> "GradientTape":
        return cls(dict(module.named_parameters()))

    def record(self, fn: Callable[[], torch.Tensor]) -> torch.Tensor:
        with torch.enable_grad():
            self.output = fn()
        return self.output

    def gradient(self, loss: torch.Tensor | None = None) -> dict[str, torch.Tensor]:
        loss = self.output if loss is None else loss
        if loss is None:
            raise ShapeError("nothing recorded on this tape")
        if loss.numel() != 1:
            raise ShapeError(f"gradients need a scalar loss, got shape {tuple(loss.shape)}")
        names = list(self.slots)
        grads = torch.autograd.grad(loss.reshape(()), [self.slots[k] for k in names], allow_unused=True)
        return {
            name: torch.zeros_like(self.slots[name]) if g is None else g
            for name, g in zip(names, grads)
        }


def gradients(tape: GradientTape, loss: torch.Tensor | None = None) -> dict[str, torch.Tensor]:
    return tape.gradient(loss)


@torch.no_grad()
def central_differences(
    fn: Callable[[], torch.Tensor], slots: Mapping[str, torch.Tensor], step: float = FD_STEP
) -> dict[str, torch.Tensor]:
    """Finite-difference oracle: perturbs every slot element in place and restores it."""
    out = {}
    for name, p in slots.items():
        g = torch.zeros_like(p)
        flat, gflat = p.view(-1), g.view(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + step
            up = float(fn())
            flat[i] = orig - step
            down = float(fn())
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        out[name] = g
    return out


def relative_error(a, b) -> float:
    """Norm-wise relative error between two gradient blocks."""
    a = torch.as_tensor(a, dtype=DTYPE).reshape(-1)
    b = torch.as_tensor(b, dtype=DTYPE).reshape(-1)
    scale = max(float(a.norm()), float(b.norm()), 1e-12)
    return float((a - b).norm()) / scale
