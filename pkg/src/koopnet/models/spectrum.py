import math

import numpy as np

from koopnet.models.layers import SpectralAdvance
from koopnet.numerics import ComplexSpectrum


def spectrum_report(values) -> list[dict]:
    """Rows of (re, im, modulus, angle, period in steps), largest modulus first.

    Accepts a SpectralAdvance, a ComplexSpectrum, or any sequence of complex numbers or
    (re, im) pairs.
    """
    match values:
        case SpectralAdvance():
            lam = values.eigenvalues.numpy()
        case ComplexSpectrum():
            lam = values.values
        case _:
            arr = np.asarray(values)
            lam = arr[:, 0] + 1j * arr[:, 1] if arr.ndim == 2 and arr.shape[1] == 2 else arr.astype(np.complex128)
    lam = np.asarray(lam, dtype=np.complex128).ravel()

    rows = []
    for v in lam:
        angle = math.atan2(v.imag, v.real)
        rows.append({
            "re": float(v.real),
            "im": float(v.imag),
            "modulus": float(abs(v)),
            "angle": angle,
            "period": 2 * math.pi / abs(angle) if angle != 0.0 else math.inf,
        })
    rows.sort(key=lambda r: -r["modulus"])
    return rows
