"""Superoperators in the Bloch-Fano frame.

Every linear map on operators becomes a real d**2 x d**2 matrix acting on
Bloch vectors.  Conventions used throughout the package:

* ``hamiltonian_superop(H)`` returns the real generator of -i[H, .], i.e.
  the matrix K with entries K_ij = -(i/2) Tr([H, sigma_j] sigma_i), so that
  d|rho>>/dt = K |rho>> for purely Hamiltonian evolution.  K is
  antisymmetric with vanishing last row and column.
* ``dissipator_superop(jumps)`` returns R with entries
  R_ij = (1/2) sum_mu Tr([ (1/2){L+L, sigma_j} - L sigma_j L+ ] sigma_i),
  signed so that d|rho>>/dt contains -R |rho>>.  Trace preservation makes
  the last row of R vanish.
* A full generator is assembled as L = K - R (``assemble_liouvillian``).

All outputs are real; construction verifies that the imaginary residue is
below 1e-10.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from .basis import OperatorBasis, build_basis, _frozen_array
from .exceptions import DimensionError, NonHermitianError

__all__ = [
    "Superoperator",
    "LindbladModel",
    "HermitianParams",
    "KossakowskiMatrix",
    "SpinOperators",
    "hamiltonian_superop",
    "dissipator_superop",
    "assemble_liouvillian",
    "explicit_qutrit_superop",
    "params_from_superop",
    "kossakowski_generator",
    "kossakowski_shift",
    "spin1_operators",
    "zeeman_hamiltonian",
]

REALNESS_TOL = 1e-10
_HERM_TOL = 1e-12


@dataclass(frozen=True)
class Superoperator:
    """Real d**2 x d**2 matrix acting on Bloch vectors.

    Units depend on the role: rad/s for Hamiltonian generators, 1/s for
    dissipators, dimensionless for propagators.
    """

    dim: int
    matrix: NDArray[np.float64]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise DimensionError(f"expected a {n}x{n} matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", _frozen_array(m))

    def to_json(self) -> dict:
        return {"dim": self.dim, "matrix": self.matrix.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Superoperator":
        return cls(dim=int(obj["dim"]), matrix=np.asarray(obj["matrix"], dtype=float))


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian (rad/s) plus quantum-jump operators (sqrt(1/s) units)."""

    hamiltonian: NDArray[np.complex128]
    jumps: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if np.linalg.norm(h - h.conj().T) > _HERM_TOL * max(1.0, np.linalg.norm(h)):
            raise NonHermitianError("model Hamiltonian is not Hermitian")
        object.__setattr__(self, "hamiltonian", _frozen_array(h))
        object.__setattr__(
            self,
            "jumps",
            tuple(_frozen_array(np.asarray(j, dtype=complex)) for j in self.jumps),
        )

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def liouvillian(self, basis: OperatorBasis | None = None) -> Superoperator:
        """Full Bloch-frame generator K - R of the master equation."""
        basis = basis or build_basis(self.dim)
        return assemble_liouvillian(
            hamiltonian_superop(self.hamiltonian, basis),
            dissipator_superop(self.jumps, basis),
        )


@dataclass(frozen=True)
class HermitianParams:
    """Nine real parameters of a general 3x3 Hermitian operator.

    The parametrization places h[0], h[5], h[8] on the diagonal and
    (h[1] -/+ i h[2]), (h[3] -/+ i h[4]), (h[6] -/+ i h[7]) on the
    (1,2), (1,3) and (2,3) off-diagonals.
    """

    h: NDArray[np.float64]

    def __post_init__(self):
        v = np.asarray(self.h, dtype=float)
        if v.shape != (9,):
            raise DimensionError(f"expected 9 parameters, got shape {v.shape}")
        object.__setattr__(self, "h", _frozen_array(v))

    def to_matrix(self) -> np.ndarray:
        h = self.h
        return np.array(
            [
                [h[0], h[1] - 1j * h[2], h[3] - 1j * h[4]],
                [h[1] + 1j * h[2], h[5], h[6] - 1j * h[7]],
                [h[3] + 1j * h[4], h[6] + 1j * h[7], h[8]],
            ]
        )

    @classmethod
    def from_matrix(cls, m) -> "HermitianParams":
        m = np.asarray(m, dtype=complex)
        if np.linalg.norm(m - m.conj().T) > _HERM_TOL * max(1.0, np.linalg.norm(m)):
            raise NonHermitianError("matrix is not Hermitian")
        return cls(
            h=np.array(
                [
                    m[0, 0].real,
                    m[0, 1].real,
                    -m[0, 1].imag,
                    m[0, 2].real,
                    -m[0, 2].imag,
                    m[1, 1].real,
                    m[1, 2].real,
                    -m[1, 2].imag,
                    m[2, 2].real,
                ]
            )
        )

    def to_json(self) -> dict:
        return {"h": self.h.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianParams":
        return cls(h=np.asarray(obj["h"], dtype=float))


@dataclass(frozen=True)
class KossakowskiMatrix:
    """Coefficient matrix of the basis-form dissipator (1/s).

    The generator built from it is
        drho/dt = -i[H, rho] + sum_ij c_ij ([s_i, rho s_j] + [s_i rho, s_j]),
    with the basis including the scaled identity as its last element.
    Hermitian (and PSD) before a shift; a shifted matrix that absorbs a
    Hamiltonian need be neither.
    """

    dim: int
    c: NDArray[np.complex128]

    def __post_init__(self):
        m = np.asarray(self.c, dtype=complex)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise DimensionError(f"expected a {n}x{n} matrix, got shape {m.shape}")
        object.__setattr__(self, "c", _frozen_array(m))


class SpinOperators(NamedTuple):
    """Dimensionless f=1 angular-momentum matrices in the |+1>,|0>,|-1> basis."""

    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray


def _check_square(m: np.ndarray, d: int, what: str):
    if m.shape != (d, d):
        raise DimensionError(f"{what} has shape {m.shape}, expected ({d}, {d})")


def _real_part(m: np.ndarray, what: str) -> np.ndarray:
    resid = np.abs(m.imag).max() if np.iscomplexobj(m) else 0.0
    if resid > REALNESS_TOL * max(1.0, np.abs(m).max()):
        raise ValueError(f"{what} has imaginary residue {resid:.3e}")
    return np.ascontiguousarray(m.real) if np.iscomplexobj(m) else m


def hamiltonian_superop(hamiltonian, basis: OperatorBasis) -> Superoperator:
    """Real Bloch-frame generator of -i[H, .].

    Entries are K_ij = -(i/2) Tr([H, sigma_j] sigma_i).  The output is
    antisymmetric, has zero diagonal, and zero last row and column (the
    identity component neither drives nor is driven).

    Raises:
        NonHermitianError: if H is not Hermitian.
        DimensionError: on shape mismatch with the basis.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    _check_square(h, basis.dim, "Hamiltonian")
    if np.linalg.norm(h - h.conj().T) > _HERM_TOL * max(1.0, np.linalg.norm(h)):
        raise NonHermitianError("Hamiltonian is not Hermitian")
    comm = np.einsum("ab,jbc->jac", h, basis.elements) - np.einsum(
        "jab,bc->jac", basis.elements, h
    )
    k = -0.5j * np.einsum("jab,iba->ij", comm, basis.elements)
    return Superoperator(dim=basis.dim, matrix=_real_part(k, "Hamiltonian superoperator"))


def dissipator_superop(jumps: Sequence, basis: OperatorBasis) -> Superoperator:
    """Bloch-frame relaxation matrix R of a set of jump operators.

    R_ij = (1/2) sum_mu Tr([ (1/2){L+L, sigma_j} - L sigma_j L+ ] sigma_i);
    the generated evolution contains -R |rho>>.  The last row vanishes
    because the jump terms conserve the trace.

    Raises:
        DimensionError: if any jump operator has the wrong shape.
    """
    d = basis.dim
    r = np.zeros((d * d, d * d), dtype=complex)
    for mu, jump in enumerate(jumps):
        l = np.asarray(jump, dtype=complex)
        _check_square(l, d, f"jump operator {mu}")
        ldl = l.conj().T @ l
        anti = 0.5 * (
            np.einsum("ab,jbc->jac", ldl, basis.elements)
            + np.einsum("jab,bc->jac", basis.elements, ldl)
        )
        sandwich = np.einsum("ab,jbc,cd->jad", l, basis.elements, l.conj().T)
        r += 0.5 * np.einsum("jab,iba->ij", anti - sandwich, basis.elements)
    return Superoperator(dim=d, matrix=_real_part(r, "dissipator superoperator"))


def assemble_liouvillian(hc: Superoperator, rt: Superoperator) -> Superoperator:
    """Combine a Hamiltonian generator and a relaxation matrix: L = hc - rt.

    ``hc`` already carries the -i convention of :func:`hamiltonian_superop`,
    so subtraction of the dissipator is all that is left.
    """
    if hc.dim != rt.dim:
        raise DimensionError(f"dimension mismatch: {hc.dim} vs {rt.dim}")
    return Superoperator(dim=hc.dim, matrix=hc.matrix - rt.matrix)


def explicit_qutrit_superop(params: HermitianParams) -> Superoperator:
    """Closed-form qutrit Hamiltonian generator, entry by entry.

    Returns the same matrix as ``hamiltonian_superop(params.to_matrix())``
    but written out explicitly; it exists as an independent cross-check of
    the generic trace construction and as the linear parametrization used
    by the Hermitian-constrained fits.
    """
    h1, h2, h3, h4, h5, h6, h7, h8, h9 = params.h
    r3 = np.sqrt(3.0)
    m = np.array(
        [
            [0, h6 - h1, 2 * h3, -h8, h7, -h5, h4, 0, 0],
            [h1 - h6, 0, -2 * h2, -h7, -h8, h4, h5, 0, 0],
            [-2 * h3, 2 * h2, 0, -h5, h4, h8, -h7, 0, 0],
            [h8, h7, h5, 0, h9 - h1, -h3, -h2, r3 * h5, 0],
            [-h7, h8, -h4, h1 - h9, 0, h2, -h3, -r3 * h4, 0],
            [h5, -h4, -h8, h3, -h2, 0, h9 - h6, r3 * h8, 0],
            [-h4, -h5, h7, h2, h3, h6 - h9, 0, -r3 * h7, 0],
            [0, 0, 0, -r3 * h5, r3 * h4, -r3 * h8, r3 * h7, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, 0],
        ],
        dtype=float,
    )
    return Superoperator(dim=3, matrix=m)


@functools.lru_cache(maxsize=1)
def _explicit_design_matrix() -> np.ndarray:
    """81 x 9 matrix whose columns are the flattened unit-parameter generators."""
    cols = [
        explicit_qutrit_superop(HermitianParams(h=np.eye(9)[k])).matrix.ravel()
        for k in range(9)
    ]
    return np.column_stack(cols)


class ParamsFit(NamedTuple):
    params: HermitianParams
    residual: float


def params_from_superop(hs: Superoperator) -> ParamsFit:
    """Least-squares Hermitian parameters of a 9x9 generator.

    Equates ``hs`` with the explicit qutrit form over all 81 entries and
    solves the overdetermined linear system; the returned residual is the
    Frobenius norm of the non-representable component.  Never raises on a
    poor fit -- the residual carries that information.

    The identity component of a Hamiltonian is unobservable (it commutes
    with everything), so the parameter-to-generator map has a one-
    dimensional null space along the trace; the minimum-norm solution
    returned here is the traceless gauge representative.
    """
    if hs.dim != 3:
        raise DimensionError("Hermitian parametrization is defined for dim 3 only")
    a = _explicit_design_matrix()
    sol, _, _, _ = np.linalg.lstsq(a, hs.matrix.ravel(), rcond=None)
    resid = float(np.linalg.norm(a @ sol - hs.matrix.ravel()))
    return ParamsFit(params=HermitianParams(h=sol), residual=resid)


@functools.lru_cache(maxsize=8)
def _triple_products(d: int):
    """sigma_a sigma_j sigma_b for all basis triples, cached per dimension."""
    s = build_basis(d).elements
    return np.einsum("axy,jyz,bzw->ajbxw", s, s, s)


def kossakowski_generator(
    c: KossakowskiMatrix, hamiltonian, basis: OperatorBasis
) -> Superoperator:
    """Bloch-frame generator of the basis-form master equation.

    Implements drho/dt = -i[H, rho]
    + sum_ij c_ij ([sigma_i, rho sigma_j] + [sigma_i rho, sigma_j]),
    where the basis sum includes the scaled-identity element.  A PSD
    coefficient matrix yields a completely positive relaxation.
    """
    if c.dim != basis.dim:
        raise DimensionError(f"dimension mismatch: {c.dim} vs {basis.dim}")
    d = basis.dim
    p3 = _triple_products(d)
    # action on basis element sigma_j: sum_ab c_ab (2 s_a s_j s_b - s_b s_a s_j - s_j s_b s_a)
    term = (
        2.0 * np.einsum("ab,ajbxy->jxy", c.c, p3)
        - np.einsum("ab,bajxy->jxy", c.c, p3)
        - np.einsum("ab,jbaxy->jxy", c.c, p3)
    )
    g = 0.5 * np.einsum("jxy,iyx->ij", term, basis.elements)
    h = np.asarray(hamiltonian, dtype=complex)
    _check_square(h, d, "Hamiltonian")
    out = _real_part(g, "Kossakowski generator") + hamiltonian_superop(h, basis).matrix
    return Superoperator(dim=d, matrix=out)


def kossakowski_shift(
    c: KossakowskiMatrix, hr, basis: OperatorBasis
) -> KossakowskiMatrix:
    """Absorb a Hamiltonian into the coefficient matrix.

    With h_k = Tr(H_R sigma_k), the replacement

        c'_ij = c_ij - (i sqrt(d) / (2 sqrt(2))) h_i (delta_{j,d^2} - delta_{i,d^2})

    makes the dissipator-only generator built from c' reproduce the
    evolution generated by (H_R, c).  Only the traceless part of H_R enters:
    its identity component commutes away, so h_{d^2} is dropped.  The
    shifted matrix mixes coherent and dissipative parts and is generally
    neither Hermitian nor positive semi-definite.
    """
    h = np.asarray(hr, dtype=complex)
    _check_square(h, basis.dim, "residual Hamiltonian")
    if np.linalg.norm(h - h.conj().T) > _HERM_TOL * max(1.0, np.linalg.norm(h)):
        raise NonHermitianError("residual Hamiltonian is not Hermitian")
    d = basis.dim
    hvec = np.einsum("ab,kba->k", h, basis.elements)
    hvec = _real_part(hvec, "Hamiltonian coefficients")
    hvec = hvec.copy()
    hvec[-1] = 0.0
    n = d * d
    delta = np.zeros((n, n), dtype=complex)
    coef = 1j * np.sqrt(d) / (2.0 * np.sqrt(2.0))
    delta[:, n - 1] = -coef * hvec
    # the delta_{i,d^2} term only ever multiplies h_{d^2}, which was dropped
    return KossakowskiMatrix(dim=d, c=c.c + delta)


def spin1_operators() -> SpinOperators:
    """Standard f=1 angular-momentum matrices; [fx, fy] = i fz and cyclic."""
    s2 = 1.0 / np.sqrt(2.0)
    fx = s2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    fy = s2 * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    fz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return SpinOperators(fx=fx, fy=fy, fz=fz)


def zeeman_hamiltonian(omega, q=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Linear plus quadratic Zeeman Hamiltonian (rad/s).

    H = sum_k omega[k] F_k + sum_k q[k] F_k**2 for the f=1 spin operators.
    """
    f = spin1_operators()
    omega = np.asarray(omega, dtype=float)
    q = np.asarray(q, dtype=float)
    h = np.zeros((3, 3), dtype=complex)
    for k, fk in enumerate(f):
        h += omega[k] * fk + q[k] * (fk @ fk)
    return h
