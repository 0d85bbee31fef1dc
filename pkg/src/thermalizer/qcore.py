"""Dense complex linear algebra on multi-qubit operators and states.

Conventions fixed package-wide:

* natural logarithms everywhere (entropies in nats),
* site 1 is the most significant qubit of the tensor index, so
  ``tensor_product(a, b)`` puts ``a`` on the heavy bits,
* eigenvalues in ``[-EIG_NEG_TOL, EIG_FLOOR]`` are clipped to ``EIG_FLOOR``
  before taking logarithms; anything more negative is treated as a real
  positivity violation and rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EIG_FLOOR",
    "EIG_NEG_TOL",
    "PauliString",
    "pauli_matrix",
    "tensor_product",
    "kron_all",
    "ket",
    "pure_state",
    "plus_state",
    "maximally_mixed",
    "is_hermitian",
    "check_density_matrix",
    "partial_trace",
    "hermitian_function",
    "matrix_exp",
    "matrix_log",
    "matrix_sqrt",
    "von_neumann_entropy",
    "uhlmann_fidelity",
    "expectation",
    "num_qubits",
]

EIG_FLOOR = 1e-12
EIG_NEG_TOL = 1e-10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_matrix(label: str) -> np.ndarray:
    """2x2 matrix of a single Pauli label in {I, X, Y, Z}."""
    try:
        return _PAULI[label].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {label!r}") from None


@dataclass(frozen=True)
class PauliString:
    """A product of single-site Paulis with a real coefficient.

    ``ops`` holds one label per site, site 1 first (most significant).
    """

    ops: tuple
    coefficient: float = 1.0

    def __post_init__(self):
        for op in self.ops:
            if op not in _PAULI:
                raise ValueError(f"unknown Pauli label {op!r}")

    @property
    def n(self) -> int:
        return len(self.ops)

    def matrix(self) -> np.ndarray:
        return self.coefficient * kron_all([_PAULI[op] for op in self.ops])


def num_qubits(dim: int) -> int:
    """Number of qubits of a register of dimension ``dim`` (must be 2**n)."""
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` on the more significant qubits."""
    return np.kron(a, b)


def kron_all(ops) -> np.ndarray:
    """Kronecker product of a sequence, first factor most significant."""
    ops = list(ops)
    if not ops:
        raise ValueError("empty operator list")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def ket(bits) -> np.ndarray:
    """Computational-basis state vector for a bit sequence, site 1 first."""
    n = len(bits)
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    psi = np.zeros(2**n, dtype=complex)
    psi[idx] = 1.0
    return psi


def pure_state(psi: np.ndarray) -> np.ndarray:
    """Density matrix |psi><psi| of a (normalized) state vector."""
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def plus_state(n: int) -> np.ndarray:
    """|+>^n as a state vector."""
    d = 2**n
    return np.full(d, 1.0 / np.sqrt(d), dtype=complex)


def maximally_mixed(n: int) -> np.ndarray:
    d = 2**n
    return np.eye(d, dtype=complex) / d


def is_hermitian(a: np.ndarray, atol: float = 1e-12) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= atol)


def check_density_matrix(rho: np.ndarray, atol_herm: float = 1e-12,
                         atol_trace: float = 1e-10,
                         atol_eig: float = EIG_NEG_TOL) -> None:
    """Raise ValueError unless ``rho`` is a valid density matrix.

    Hermitian to ``atol_herm``, unit trace to ``atol_trace``, minimum
    eigenvalue >= ``-atol_eig``.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"state must be a square matrix, got shape {rho.shape}")
    if not is_hermitian(rho, atol_herm):
        raise ValueError("state is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol_trace:
        raise ValueError(f"state trace {tr} differs from 1")
    wmin = float(np.linalg.eigvalsh(rho)[0])
    if wmin < -atol_eig:
        raise ValueError(f"state has negative eigenvalue {wmin}")


def partial_trace(rho: np.ndarray, keep, n: int | None = None) -> np.ndarray:
    """Reduced state on the 1-based site set ``keep`` (ascending order).

    The traced-out sites are summed explicitly over the tensor index.
    """
    rho = np.asarray(rho, dtype=complex)
    if n is None:
        n = num_qubits(rho.shape[0])
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"site indices {keep} outside register 1..{n}")
    traced = [k for k in range(1, n + 1) if k not in keep]
    t = rho.reshape([2] * (2 * n))
    # sum matched row/column axes of each traced site, highest index first
    for site in reversed(traced):
        ax_row = site - 1
        ax_col = ax_row + (t.ndim // 2)
        t = np.trace(t, axis1=ax_row, axis2=ax_col)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def hermitian_function(a: np.ndarray, f, eig_floor: float | None = None) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigenbasis.

    With ``eig_floor`` set, eigenvalues in ``[-EIG_NEG_TOL, eig_floor]`` are
    clipped up to ``eig_floor`` first (the policy that makes logarithms of
    numerically-drifted density matrices well defined); eigenvalues below
    ``-EIG_NEG_TOL`` raise.
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a):
        raise ValueError("hermitian_function requires a Hermitian matrix")
    w, v = np.linalg.eigh(a)
    if eig_floor is not None:
        if w[0] < -EIG_NEG_TOL:
            raise ValueError(f"eigenvalue {w[0]} below the floor tolerance")
        w = np.maximum(w, eig_floor)
    fw = np.asarray([f(x) for x in w], dtype=complex)
    return (v * fw) @ v.conj().T


def matrix_exp(a: np.ndarray) -> np.ndarray:
    return hermitian_function(a, np.exp)


def matrix_log(a: np.ndarray) -> np.ndarray:
    return hermitian_function(a, np.log, eig_floor=EIG_FLOOR)


def matrix_sqrt(a: np.ndarray) -> np.ndarray:
    # clip tiny negatives so square roots of near-PSD states stay real
    return hermitian_function(a, lambda x: np.sqrt(max(x.real, 0.0)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S = -Tr[rho ln rho] in nats, with the eigenvalue floor policy."""
    rho = np.asarray(rho, dtype=complex)
    w = np.linalg.eigvalsh(rho)
    if w[0] < -EIG_NEG_TOL:
        raise ValueError(f"state has negative eigenvalue {w[0]}")
    w = np.maximum(w, EIG_FLOOR)
    return float(-np.sum(w * np.log(w)))


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    s = matrix_sqrt(rho)
    inner = s @ sigma @ s
    # inner is PSD up to drift; take sqrt of clipped eigenvalues directly
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    val = float(np.sum(np.sqrt(np.maximum(w, 0.0)))) ** 2
    return min(max(val, 0.0), 1.0)


def expectation(rho: np.ndarray, obs: np.ndarray) -> float:
    """Tr[obs rho] for Hermitian ``obs``; returns the real part."""
    rho = np.asarray(rho, dtype=complex)
    obs = np.asarray(obs, dtype=complex)
    if rho.shape != obs.shape:
        raise ValueError(f"dimension mismatch {rho.shape} vs {obs.shape}")
    if not is_hermitian(obs):
        raise ValueError("observable is not Hermitian")
    return float(np.real(np.einsum("ij,ji->", obs, rho)))
