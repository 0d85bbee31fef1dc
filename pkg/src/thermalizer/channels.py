"""Nonunitary circuit elements: Kraus channels, local Lindblad evolution,
engineered jump operators, and superoperator machinery.

Vectorization is column-stacking throughout: vec(A X B) = (B^T kron A) vec(X),
with vec taking Fortran order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import qcore

__all__ = [
    "KrausChannel",
    "LindbladGenerator",
    "ChannelLayer",
    "pauli_channel",
    "identity_channel",
    "apply_channel",
    "apply_kraus_ops",
    "lindblad_superoperator",
    "lindblad_channel",
    "lindblad_evolve",
    "tfim_jump",
    "heisenberg_pair_jumps",
    "EffectiveRates",
    "effective_rates_from_physical",
    "ising_projector_channel",
    "small_time_kraus",
    "channel_superoperator",
    "unitary_superoperator",
    "choi_matrix",
    "vec",
    "unvec",
]

COMPLETENESS_TOL = 1e-10


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d, order="F")


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map in operator-sum form."""

    kraus_ops: tuple
    arity: int

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        object.__setattr__(self, "kraus_ops", ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = 2**self.arity
        for k in ops:
            if k.shape != (d, d):
                raise ValueError(
                    f"Kraus operator shape {k.shape} does not match arity {self.arity}")
        defect = np.max(np.abs(self.completeness_defect()))
        if defect > COMPLETENESS_TOL:
            raise ValueError(f"Kraus completeness defect {defect:.2e}")

    def completeness_defect(self) -> np.ndarray:
        d = 2**self.arity
        acc = sum(k.conj().T @ k for k in self.kraus_ops)
        return acc - np.eye(d)

    @property
    def dim(self) -> int:
        return 2**self.arity


@dataclass(frozen=True)
class LindbladGenerator:
    """Hamiltonian plus jump operators of a local Lindblad master equation."""

    hamiltonian: np.ndarray
    jumps: tuple
    arity: int

    def __post_init__(self):
        d = 2**self.arity
        h = np.asarray(self.hamiltonian, dtype=complex)
        object.__setattr__(self, "hamiltonian", h)
        js = tuple(np.asarray(j, dtype=complex) for j in self.jumps)
        object.__setattr__(self, "jumps", js)
        if h.shape != (d, d):
            raise ValueError(f"Hamiltonian shape {h.shape} does not match arity")
        for j in js:
            if j.shape != (d, d):
                raise ValueError(f"jump shape {j.shape} does not match arity")

    @property
    def dim(self) -> int:
        return 2**self.arity


@dataclass(frozen=True)
class ChannelLayer:
    """Placements of channels or generators within one nonunitary layer.

    Each placement is (element, sites, parameter) where ``element`` is a
    KrausChannel or LindbladGenerator, ``sites`` a 1-based tuple, and
    ``parameter`` the evolution time for generators (ignored for channels).
    """

    placements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for element, sites, _ in self.placements:
            if len(set(sites)) != len(sites):
                raise ValueError(f"repeated site in placement {sites}")
            if len(sites) != element.arity:
                raise ValueError("placement sites do not match element arity")

    def apply(self, rho: np.ndarray, n: int) -> np.ndarray:
        for element, sites, parameter in self.placements:
            if isinstance(element, KrausChannel):
                rho = apply_channel(element, rho, sites)
            else:
                rho = lindblad_evolve(element, rho, parameter, sites)
        return rho


def pauli_channel(kind: str, p: float) -> KrausChannel:
    """Single-qubit bitflip, phaseflip or depolarizing channel.

    Depolarizing uses the four-Kraus form whose non-identity weight matches
    (1 - p) rho + p I/2.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    ident = np.eye(2, dtype=complex)
    if kind == "bitflip":
        ops = (np.sqrt(1 - p) * ident, np.sqrt(p) * qcore.pauli_matrix("X"))
    elif kind == "phaseflip":
        ops = (np.sqrt(1 - p) * ident, np.sqrt(p) * qcore.pauli_matrix("Z"))
    elif kind == "depolarizing":
        ops = (np.sqrt(1 - 3 * p / 4) * ident,
               np.sqrt(p / 4) * qcore.pauli_matrix("X"),
               np.sqrt(p / 4) * qcore.pauli_matrix("Y"),
               np.sqrt(p / 4) * qcore.pauli_matrix("Z"))
    else:
        raise ValueError(f"unknown Pauli channel kind {kind!r}")
    return KrausChannel(kraus_ops=ops, arity=1)


def identity_channel(arity: int) -> KrausChannel:
    return KrausChannel(kraus_ops=(np.eye(2**arity, dtype=complex),), arity=arity)


def _site_axes(sites, n):
    axes = tuple(s - 1 for s in sites)
    if any(a < 0 or a >= n for a in axes):
        raise ValueError(f"sites {sites} outside register 1..{n}")
    return axes


def _apply_op_left(op: np.ndarray, rho: np.ndarray, sites, n: int) -> np.ndarray:
    """(op on sites, identity elsewhere) @ rho."""
    axes = _site_axes(sites, n)
    k = len(axes)
    d = 2**n
    t = rho.reshape([2] * n + [d])
    t = np.moveaxis(t, axes, range(k))
    shape = t.shape
    t = op @ t.reshape(2**k, -1)
    t = t.reshape(shape)
    t = np.moveaxis(t, range(k), axes)
    return t.reshape(d, d)


def _apply_op_right(op: np.ndarray, rho: np.ndarray, sites, n: int) -> np.ndarray:
    """rho @ (op on sites, identity elsewhere)."""
    k = len(sites)
    d = 2**n
    col_axes = [1 + s - 1 for s in sites]  # axis 0 is the merged row index
    t = rho.reshape([d] + [2] * n)
    t = np.moveaxis(t, col_axes, range(t.ndim - k, t.ndim))
    shape = t.shape
    t = t.reshape(-1, 2**k) @ op
    t = t.reshape(shape)
    t = np.moveaxis(t, range(t.ndim - k, t.ndim), col_axes)
    return t.reshape(d, d)


def _superop_tensor(kraus_ops, q: int) -> np.ndarray:
    """t[i, k, j, l] = sum_K K[i, k] conj(K[j, l]) on a local dimension q."""
    t = np.zeros((q, q, q, q), dtype=complex)
    for k in kraus_ops:
        t += np.einsum("ik,jl->ikjl", k, k.conj())
    return t


def _apply_superop_block(t: np.ndarray, rho: np.ndarray, first_site: int,
                         q: int, n: int) -> np.ndarray:
    """Apply a local map jointly to the row and column axes of adjacent sites.

    Contiguous reshape keeps this allocation-free up to the one output array.
    """
    d = 2**n
    a = 2 ** (first_site - 1)
    c = d // (a * q)
    mid = c * a
    view = rho.reshape(a, q, mid, q, c)
    out = np.einsum("ikjl,akmlc->aimjc", t, view, optimize=True)
    return out.reshape(d, d)


def apply_kraus_ops(kraus_ops, rho: np.ndarray, sites, n: int) -> np.ndarray:
    """sum_i K_i rho K_i^dag with each K acting on the listed 1-based sites."""
    if len(sites) == 1:
        t = _superop_tensor(kraus_ops, 2)
        return _apply_superop_block(t, rho, sites[0], 2, n)
    if len(sites) == 2 and sites[1] == sites[0] + 1:
        t = _superop_tensor(kraus_ops, 4)
        return _apply_superop_block(t, rho, sites[0], 4, n)
    out = np.zeros_like(rho)
    for k in kraus_ops:
        tmp = _apply_op_left(k, rho, sites, n)
        out += _apply_op_right(k.conj().T, tmp, sites, n)
    return out


def apply_channel(channel: KrausChannel, rho: np.ndarray, sites) -> np.ndarray:
    """Apply a local channel to the register state, identity off ``sites``."""
    rho = np.asarray(rho, dtype=complex)
    n = qcore.num_qubits(rho.shape[0])
    sites = tuple(int(s) for s in sites)
    if len(sites) != channel.arity:
        raise ValueError(
            f"channel arity {channel.arity} does not match sites {sites}")
    _site_axes(sites, n)
    return apply_kraus_ops(channel.kraus_ops, rho, sites, n)


def lindblad_superoperator(gen: LindbladGenerator) -> np.ndarray:
    """Column-stacking matrix of rho -> -i[H, rho] + sum_j D[L_j](rho)."""
    d = gen.dim
    ident = np.eye(d, dtype=complex)
    h = gen.hamiltonian
    s = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    for L in gen.jumps:
        ll = L.conj().T @ L
        s += np.kron(L.conj(), L)
        s -= 0.5 * (np.kron(ident, ll) + np.kron(ll.T, ident))
    return s


def _kraus_from_choi(choi: np.ndarray, d: int, tol: float = 1e-12) -> tuple:
    w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
    ops = []
    for lam, col in zip(w, v.T):
        if lam < -1e-9:
            raise ValueError(f"map is not completely positive (Choi eigenvalue {lam})")
        if lam > tol:
            ops.append(np.sqrt(lam) * col.reshape(d, d))
    return tuple(ops)


def choi_matrix(channel: KrausChannel) -> np.ndarray:
    """Unnormalized Choi matrix sum_ij E(|i><j|) kron |i><j| ordered as (out, in)."""
    d = channel.dim
    c = np.zeros((d * d, d * d), dtype=complex)
    for k in channel.kraus_ops:
        vk = k.reshape(-1)  # row-major (out, in) flattening
        c += np.outer(vk, vk.conj())
    return c


def lindblad_channel(gen: LindbladGenerator, t: float) -> KrausChannel:
    """Exact channel exp(t L) of a local generator, as a Kraus set."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if gen.arity > 2:
        raise ValueError("local Lindblad evolution supports arity <= 2 only")
    d = gen.dim
    s = scipy.linalg.expm(t * lindblad_superoperator(gen))
    # Choi in (out, in) row-major pairing, from the superoperator columns
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            eij = np.zeros((d, d), dtype=complex)
            eij[i, j] = 1.0
            out = unvec(s @ vec(eij))
            choi += np.kron(out, eij)
    # np.kron(out, eij) realizes sum E(|i><j|) kron |i><j| with (out, in) rows
    ops = _kraus_from_choi(choi, d)
    return KrausChannel(kraus_ops=ops, arity=gen.arity)


def lindblad_evolve(gen: LindbladGenerator, rho: np.ndarray, t: float,
                    sites) -> np.ndarray:
    """Evolve ``rho`` for time ``t`` under a generator embedded on ``sites``."""
    channel = lindblad_channel(gen, t)
    return apply_channel(channel, rho, sites)


def tfim_jump(p: float, q: float, conjugated: bool = False) -> LindbladGenerator:
    """Single-qubit heating jump sqrt(p) (Z + q Y), zero Hamiltonian.

    With ``conjugated`` the Hadamard-rotated form sqrt(p) (X - q Y) is
    returned; the channel it generates equals conjugation of the unrotated
    channel by the Hadamard.
    """
    if p < 0:
        raise ValueError("rate p must be nonnegative")
    if conjugated:
        jump = np.sqrt(p) * (qcore.pauli_matrix("X") - q * qcore.pauli_matrix("Y"))
    else:
        jump = np.sqrt(p) * (qcore.pauli_matrix("Z") + q * qcore.pauli_matrix("Y"))
    return LindbladGenerator(hamiltonian=np.zeros((2, 2), dtype=complex),
                             jumps=(jump,), arity=1)


def heisenberg_pair_jumps(kappa_f: float, kappa_af: float) -> LindbladGenerator:
    """Two-qubit jumps that align or antialign a neighboring pair.

    L0 = sqrt(kf) |11><10| + sqrt(kaf) |01><00|
    L1 = sqrt(kf) |00><01| + sqrt(kaf) |10><11|

    Conjugating by X kron X swaps L0 and L1, so the generated channel is
    weakly but not strongly symmetric under the pair spin flip.
    """
    if kappa_f < 0 or kappa_af < 0:
        raise ValueError("rates must be nonnegative")
    l0 = np.zeros((4, 4), dtype=complex)
    l0[3, 2] = np.sqrt(kappa_f)   # |11><10|
    l0[1, 0] = np.sqrt(kappa_af)  # |01><00|
    l1 = np.zeros((4, 4), dtype=complex)
    l1[0, 1] = np.sqrt(kappa_f)   # |00><01|
    l1[2, 3] = np.sqrt(kappa_af)  # |10><11|
    return LindbladGenerator(hamiltonian=np.zeros((4, 4), dtype=complex),
                             jumps=(l0, l1), arity=2)


@dataclass(frozen=True)
class EffectiveRates:
    """Effective pair-jump parameters derived from the physical drive."""

    sqrt_kappa_f: complex
    sqrt_kappa_af: complex
    kappa_f: float
    kappa_af: float
    h_eff_diag: tuple  # energies of |00> and |10| on the pair manifold


def effective_rates_from_physical(g: float, omega: float, delta_tilde: complex,
                                  Delta: float, kappa: float) -> EffectiveRates:
    """Closed-form jump rates of the driven pair coupled to a lossy oscillator.

    sqrt(kf)  = sqrt(kappa) (Omega/2) dt / (dt D - g^2)
    sqrt(kaf) = sqrt(kappa) (Omega/2) (dt D - g^2) / (dt D^2 - 2 g^2 D)

    with dt the (possibly complex) oscillator detuning and D the excited-state
    shift. The residual Hamiltonian acts diagonally on |00> and |10>.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if g == 0:
        raise ValueError("coupling g must be nonzero")
    den_f = delta_tilde * Delta - g**2
    den_af = delta_tilde * Delta**2 - 2 * g**2 * Delta
    scale = max(abs(delta_tilde) * abs(Delta), g**2, 1.0)
    if abs(den_f) < 1e-12 * scale:
        raise ValueError("singular parameters: dt * Delta = g^2")
    if abs(den_af) < 1e-12 * scale * max(abs(Delta), 1.0):
        raise ValueError("singular parameters: dt * Delta^2 = 2 g^2 Delta")
    drive = np.sqrt(kappa) * omega / 2.0
    sqrt_kf = drive * delta_tilde / den_f
    sqrt_kaf = drive * den_f / den_af
    h00 = (omega / 2.0) ** 2 * 2.0 * np.real(delta_tilde / den_f)
    h10 = (omega / 2.0) ** 2 * 2.0 * np.real(den_f / den_af)
    return EffectiveRates(
        sqrt_kappa_f=complex(sqrt_kf),
        sqrt_kappa_af=complex(sqrt_kaf),
        kappa_f=float(abs(sqrt_kf) ** 2),
        kappa_af=float(abs(sqrt_kaf) ** 2),
        h_eff_diag=(float(h00), float(h10)),
    )


def ising_projector_channel(p: float) -> KrausChannel:
    """Two-qubit channel that probabilistically pumps a bond into alignment.

    Kraus set {sqrt(1-p) I, sqrt(p) P, sqrt(p) T} with P the projector onto
    span{|00>, |11>} and T mapping |01> -> |00>, |10> -> |11|. Completeness
    holds exactly and the aligned subspace is invariant for every p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    proj = np.zeros((4, 4), dtype=complex)
    proj[0, 0] = proj[3, 3] = 1.0
    transfer = np.zeros((4, 4), dtype=complex)
    transfer[0, 1] = 1.0  # |00><01|
    transfer[3, 2] = 1.0  # |11><10|
    ops = (np.sqrt(1 - p) * np.eye(4, dtype=complex),
           np.sqrt(p) * proj,
           np.sqrt(p) * transfer)
    return KrausChannel(kraus_ops=ops, arity=2)


def small_time_kraus(gen: LindbladGenerator, dt: float) -> "ApproximateKraus":
    """First-order Kraus set {I + dt H_nh, sqrt(dt) L_j} of a generator.

    H_nh = -iH - (1/2) sum L^dag L. Completeness only holds to O(dt^2), so the
    result is returned without the exact-completeness validation; it is meant
    for symmetry cross-checks, not for state evolution.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    jump_scale = max((np.linalg.norm(j, 2) ** 2 for j in gen.jumps), default=0.0)
    if dt * jump_scale > 0.1:
        raise ValueError("dt too large for the first-order expansion")
    d = gen.dim
    h_nh = -1j * gen.hamiltonian
    for L in gen.jumps:
        h_nh -= 0.5 * (L.conj().T @ L)
    ops = [np.eye(d, dtype=complex) + dt * h_nh]
    ops += [np.sqrt(dt) * L for L in gen.jumps]
    return ApproximateKraus(kraus_ops=tuple(ops), arity=gen.arity)


@dataclass(frozen=True)
class ApproximateKraus:
    """Kraus set without the trace-preservation guarantee."""

    kraus_ops: tuple
    arity: int

    def completeness_defect(self) -> np.ndarray:
        d = 2**self.arity
        acc = sum(k.conj().T @ k for k in self.kraus_ops)
        return acc - np.eye(d)

    @property
    def dim(self) -> int:
        return 2**self.arity


def channel_superoperator(channel) -> np.ndarray:
    """Column-stacking superoperator matrix sum_i conj(K_i) kron K_i."""
    d = channel.dim
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in channel.kraus_ops:
        s += np.kron(k.conj(), k)
    return s


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.kron(u.conj(), u)
