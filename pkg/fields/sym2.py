"""
Symmetric 2x2 Matrices

Sym2 stores the three independent entries of a symmetric 2x2 matrix. Entries
may be scalars or equally shaped arrays, in which case every operation acts
node by node (a Hessian field is a single Sym2 of arrays).

For 2x2 matrices det(M) M^{-1} is the adjugate, which is linear in M:

    cof2(M)                 = [[a22, -a12], [-a12, a11]]
    det2(A) - det2(B)       = < (cof2(A) + cof2(B)) / 2 , A - B >

where <S, T> = s11 t11 + 2 s12 t12 + s22 t22 is the Frobenius pairing of
symmetric matrices. The identity is exact, not a first-order expansion.

Time Complexity:
- every operation: O(1) per entry
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

Scalar = Union[float, np.ndarray]


@dataclass(frozen=True)
class Sym2:
    """Symmetric matrix [[a11, a12], [a12, a22]]"""
    a11: Scalar
    a12: Scalar
    a22: Scalar

    @classmethod
    def identity(cls) -> "Sym2":
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m) -> "Sym2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    def to_matrix(self) -> np.ndarray:
        """Dense (..., 2, 2) array"""
        a11, a12, a22 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in self))
        return np.stack([np.stack([a11, a12], axis=-1), np.stack([a12, a22], axis=-1)], axis=-2)

    def __iter__(self):
        return iter((self.a11, self.a12, self.a22))

    def __add__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other: "Sym2") -> "Sym2":
        return Sym2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __mul__(self, scale) -> "Sym2":
        return Sym2(scale * self.a11, scale * self.a12, scale * self.a22)

    __rmul__ = __mul__

    def __getitem__(self, index) -> "Sym2":
        """Select nodes of a field-valued Sym2"""
        return Sym2(np.asarray(self.a11)[index], np.asarray(self.a12)[index],
                    np.asarray(self.a22)[index])

    @property
    def det(self) -> Scalar:
        return det2(self)

    @property
    def cof(self) -> "Sym2":
        return cof2(self)

    @property
    def trace(self) -> Scalar:
        return self.a11 + self.a22


def det2(m: Sym2) -> Scalar:
    """Determinant a11 a22 - a12^2"""
    return m.a11 * m.a22 - m.a12 * m.a12


def cof2(m: Sym2) -> Sym2:
    """Cofactor (adjugate) matrix; equals det(m) m^{-1} when m is invertible"""
    return Sym2(m.a22, -m.a12, m.a11)


def pair(s: Sym2, t: Sym2) -> Scalar:
    """Frobenius pairing with the off-diagonal entry counted twice"""
    return s.a11 * t.a11 + 2.0 * s.a12 * t.a12 + s.a22 * t.a22


def det_diff_coeffs(a: Sym2, b: Sym2) -> Sym2:
    """
    Coefficients (a_ij) with det2(a) - det2(b) = pair(coeffs, a - b) exactly

    Args:
        a, b: symmetric matrices (or fields of them)

    Returns:
        Sym2: (cof2(a) + cof2(b)) / 2
    """
    ca, cb = cof2(a), cof2(b)
    return Sym2(0.5 * (ca.a11 + cb.a11), 0.5 * (ca.a12 + cb.a12), 0.5 * (ca.a22 + cb.a22))


def is_spd(m: Sym2):
    """Positive definiteness test a11 > 0 and det > 0; vectorised over fields"""
    result = np.logical_and(np.asarray(m.a11) > 0.0, np.asarray(det2(m)) > 0.0)
    return bool(result) if np.ndim(result) == 0 else result


def min_eigenvalue(m: Sym2) -> Scalar:
    """Smallest eigenvalue, used for the ellipticity bound m^2 of barrier checks"""
    half_trace = 0.5 * (m.a11 + m.a22)
    radius = np.hypot(0.5 * (m.a11 - m.a22), m.a12)
    return half_trace - radius


if __name__ == "__main__":
    a = Sym2(2.0, 0.0, 2.0)
    b = Sym2.identity()
    coeffs = det_diff_coeffs(a, b)
    print("coeffs:", coeffs)
    print("det difference:", det2(a) - det2(b), "pairing:", pair(coeffs, a - b))
    print("is_spd(1, 2, 1):", is_spd(Sym2(1.0, 2.0, 1.0)))
