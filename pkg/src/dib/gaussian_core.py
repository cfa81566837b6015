"""Vector-Gaussian model algebra: covariances, log-det information, regions.

The model is ``Y_k = H_k X + N_k`` with independent Gaussian noises, and the
descriptions are noisy linear projections ``U_k = A_k Y_k + Z_k``.  Real
symmetric mode is the default (mutual-information factor 1/2); the complex
Hermitian variant uses factor 1.  Conditioning never forms explicit inverses:
symmetric factorizations with a single ridge-jitter retry are used, and
PSD-singular covariances fall back to a floored pseudo-log-det.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

#: eigenvalue floor used by the pseudo-log-det on PSD-singular matrices
LOGDET_FLOOR = 1e-12

#: relative ridge added once when a symmetric factorization fails
RIDGE_SCALE = 1e-10


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Matrix failed a positive-(semi)definiteness requirement."""


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _check_hermitian_pd(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(m, m.conj().T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric/Hermitian")
    eig = np.linalg.eigvalsh(m)
    if eig.min() <= 0:
        raise NotPositiveDefiniteError(f"{name} must be positive definite")


def psd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian PD ``a`` via Cholesky, with one
    ridge-jitter retry on factorization failure."""
    a = _herm(a)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError:
        ridge = RIDGE_SCALE * max(np.trace(a).real / a.shape[0], 1.0)
        try:
            factor = scipy.linalg.cho_factor(
                a + ridge * np.eye(a.shape[0], dtype=a.dtype), lower=True
            )
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "matrix is singular beyond jitter tolerance"
            ) from exc
    return scipy.linalg.cho_solve(factor, b)


def psd_inverse(a: np.ndarray) -> np.ndarray:
    return _herm(psd_solve(a, np.eye(a.shape[0], dtype=a.dtype)))


def pseudo_logdet(m: np.ndarray, floor: float = LOGDET_FLOOR
                  ) -> tuple[float, bool]:
    """Log-determinant with eigenvalues floored at ``floor``.

    Returns ``(value, floored)``; ``floored`` flags a rank-deficient input.
    Eigenvalues materially below ``-floor`` raise.
    """
    eig = np.linalg.eigvalsh(_herm(m))
    if eig.min() < -1e-8 * max(abs(eig.max()), 1.0):
        raise NotPositiveDefiniteError("matrix has a negative eigenvalue")
    floored = bool(np.any(eig < floor))
    return float(np.log(np.maximum(eig, floor)).sum()), floored


def inv_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Hermitian inverse square root (eigendecomposition based)."""
    eig, vec = np.linalg.eigh(_herm(m))
    if eig.min() <= 0:
        raise NotPositiveDefiniteError("inverse square root needs a PD matrix")
    return _herm((vec * (1.0 / np.sqrt(eig))) @ vec.conj().T)


# ---------------------------------------------------------------------------
# model containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSource:
    """Zero-mean Gaussian ``X`` observed through K noisy linear channels."""

    sigma_x: np.ndarray
    h: tuple[np.ndarray, ...]
    sigma_n: tuple[np.ndarray, ...]
    complex_mode: bool = False

    def __post_init__(self):
        dtype = complex if self.complex_mode else float
        sigma_x = np.asarray(self.sigma_x, dtype=dtype)
        h = tuple(np.asarray(m, dtype=dtype) for m in self.h)
        sigma_n = tuple(np.asarray(m, dtype=dtype) for m in self.sigma_n)
        if len(h) != len(sigma_n) or not h:
            raise ValueError("need matching, non-empty channel and noise lists")
        _check_hermitian_pd(sigma_x, "sigma_x")
        for k, (hk, nk) in enumerate(zip(h, sigma_n)):
            _check_hermitian_pd(nk, f"sigma_n[{k}]")
            if hk.ndim != 2 or hk.shape != (nk.shape[0], sigma_x.shape[0]):
                raise ValueError(f"h[{k}] has inconsistent dimensions")
        object.__setattr__(self, "sigma_x", sigma_x)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "sigma_n", sigma_n)

    @property
    def n_encoders(self) -> int:
        return len(self.h)

    @property
    def x_dim(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def y_dims(self) -> tuple[int, ...]:
        return tuple(hk.shape[0] for hk in self.h)

    @property
    def mi_factor(self) -> float:
        return 1.0 if self.complex_mode else 0.5

    def sigma_y(self, k: int) -> np.ndarray:
        return _herm(self.h[k] @ self.sigma_x @ self.h[k].conj().T
                     + self.sigma_n[k])

    def normalized_channel(self, k: int) -> np.ndarray:
        """``H_bar_k = sigma_n_k^{-1/2} H_k sigma_x^{1/2}``."""
        eig, vec = np.linalg.eigh(_herm(self.sigma_x))
        sqrt_x = (vec * np.sqrt(eig)) @ vec.conj().T
        return inv_sqrt_psd(self.sigma_n[k]) @ self.h[k] @ sqrt_x

    def stacked(self) -> "GaussianSource":
        """Single-encoder source observing all Y_k jointly."""
        h = np.vstack(self.h)
        sigma_n = scipy.linalg.block_diag(*self.sigma_n)
        return GaussianSource(self.sigma_x, (h,), (sigma_n,),
                              complex_mode=self.complex_mode)


@dataclass(frozen=True)
class LinearEncoderSet:
    """Per-encoder noisy linear projections ``U_k = A_k Y_k + Z_k``."""

    a: tuple[np.ndarray, ...]
    sigma_z: tuple[np.ndarray, ...]

    def __post_init__(self):
        a = tuple(np.asarray(m) for m in self.a)
        sigma_z = tuple(np.asarray(m) for m in self.sigma_z)
        if len(a) != len(sigma_z) or not a:
            raise ValueError("need matching, non-empty projection/noise lists")
        for k, (ak, zk) in enumerate(zip(a, sigma_z)):
            _check_hermitian_pd(zk, f"sigma_z[{k}]")
            if ak.ndim != 2 or ak.shape[0] != zk.shape[0]:
                raise ValueError(f"a[{k}] row count != sigma_z[{k}] dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma_z", sigma_z)

    @property
    def u_dims(self) -> tuple[int, ...]:
        return tuple(ak.shape[0] for ak in self.a)


@dataclass(frozen=True)
class BMatrixSet:
    """Normalized MMSE matrices ``0 <= B_k <= I`` parameterizing the region."""

    b: tuple[np.ndarray, ...]
    eigen_slack: float = 1e-9

    def __post_init__(self):
        b = tuple(_herm(np.asarray(m)) for m in self.b)
        for k, bk in enumerate(b):
            eig = np.linalg.eigvalsh(bk)
            if eig.min() < -self.eigen_slack or eig.max() > 1.0 + self.eigen_slack:
                raise ValueError(
                    f"b[{k}] eigenvalues outside [0, 1]: {eig.min()}, {eig.max()}"
                )
        object.__setattr__(self, "b", b)


# ---------------------------------------------------------------------------
# second-order statistics of (X, Y_1..K, U_1..K)
# ---------------------------------------------------------------------------

class GaussianJoint:
    """Cached second-order statistics of the source plus an encoder set."""

    def __init__(self, source: GaussianSource, encoders: LinearEncoderSet):
        if len(encoders.a) != source.n_encoders:
            raise ValueError("encoder count != channel count")
        for k, ak in enumerate(encoders.a):
            if ak.shape[1] != source.y_dims[k]:
                raise ValueError(f"a[{k}] column count != observation dim")
        self.source = source
        self.encoders = encoders
        self.K = source.n_encoders
        dtype = complex if source.complex_mode else float

        n = source.x_dim
        m_dims = source.y_dims
        d_dims = encoders.u_dims
        m_total = sum(m_dims)
        self._y_slices = _slices(m_dims)
        self._u_slices = _slices(d_dims)

        h_stack = np.vstack([np.asarray(hk, dtype=dtype) for hk in source.h])
        n_blk = scipy.linalg.block_diag(
            *[np.asarray(s, dtype=dtype) for s in source.sigma_n]
        )
        a_blk = scipy.linalg.block_diag(
            *[np.asarray(ak, dtype=dtype) for ak in encoders.a]
        )
        z_blk = scipy.linalg.block_diag(
            *[np.asarray(zk, dtype=dtype) for zk in encoders.sigma_z]
        )

        self.sigma_yy = _herm(h_stack @ source.sigma_x @ h_stack.conj().T + n_blk)
        self.sigma_xy = source.sigma_x @ h_stack.conj().T          # (N, M)
        self.sigma_uu = _herm(a_blk @ self.sigma_yy @ a_blk.conj().T + z_blk)
        self.sigma_xu = self.sigma_xy @ a_blk.conj().T             # (N, D)
        self.sigma_yu = self.sigma_yy @ a_blk.conj().T             # (M, D)
        self.sigma_z_blk = z_blk

        # per-encoder blocks and the conditionals the updates need
        self.sigma_y = [self.sigma_yy[self._y_slices[k], self._y_slices[k]]
                        for k in range(self.K)]
        self.sigma_u = [self.sigma_uu[self._u_slices[k], self._u_slices[k]]
                        for k in range(self.K)]
        self.sigma_u_given_x = []
        self.sigma_y_given_urest = []
        self.sigma_u_given_urest = []
        for k in range(self.K):
            ak = np.asarray(encoders.a[k], dtype=dtype)
            zk = np.asarray(encoders.sigma_z[k], dtype=dtype)
            nk = np.asarray(source.sigma_n[k], dtype=dtype)
            self.sigma_u_given_x.append(_herm(ak @ nk @ ak.conj().T + zk))
            rest = [j for j in range(self.K) if j != k]
            syr = self._cond_block(self.sigma_y[k],
                                   self._cross_y_u(k, rest),
                                   self._u_block(rest))
            self.sigma_y_given_urest.append(syr)
            self.sigma_u_given_urest.append(_herm(ak @ syr @ ak.conj().T + zk))

    # -- block helpers -----------------------------------------------------

    def _u_block(self, ks) -> np.ndarray:
        idx = np.concatenate(
            [np.arange(self._u_slices[k].start, self._u_slices[k].stop)
             for k in ks]
        ) if ks else np.array([], dtype=int)
        return self.sigma_uu[np.ix_(idx, idx)]

    def _cross_y_u(self, k: int, ks) -> np.ndarray:
        idx = np.concatenate(
            [np.arange(self._u_slices[j].start, self._u_slices[j].stop)
             for j in ks]
        ) if ks else np.array([], dtype=int)
        return self.sigma_yu[self._y_slices[k], :][:, idx]

    def _cross_x_u(self, ks) -> np.ndarray:
        idx = np.concatenate(
            [np.arange(self._u_slices[j].start, self._u_slices[j].stop)
             for j in ks]
        ) if ks else np.array([], dtype=int)
        return self.sigma_xu[:, idx]

    @staticmethod
    def _cond_block(sigma_a, sigma_ab, sigma_b) -> np.ndarray:
        if sigma_b.size == 0:
            return _herm(np.array(sigma_a))
        return conditional_covariance(sigma_a, sigma_ab, sigma_b)

    # -- conditionals and information --------------------------------------

    def sigma_x_given_u(self, subset=None) -> np.ndarray:
        """``Sigma_{x | u_S}``; ``subset=None`` means all encoders."""
        ks = list(range(self.K)) if subset is None else sorted(subset)
        return self._cond_block(self.source.sigma_x, self._cross_x_u(ks),
                                self._u_block(ks))

    def mi_x_u_all(self) -> float:
        return gaussian_mi(self.source.sigma_x, self.sigma_x_given_u(),
                           complex_mode=self.source.complex_mode)

    def mi_x_u(self, k: int) -> float:
        return gaussian_mi(self.source.sigma_x, self.sigma_x_given_u([k]),
                           complex_mode=self.source.complex_mode)

    def mi_y_u(self, k: int) -> float:
        # Sigma_{u_k | y_k} is exactly the description noise covariance
        return gaussian_mi(self.sigma_u[k], self.encoders.sigma_z[k],
                           complex_mode=self.source.complex_mode)

    def mi_x_y_all(self) -> float:
        sigma_x_given_y = self._cond_block(self.source.sigma_x, self.sigma_xy,
                                           self.sigma_yy)
        return gaussian_mi(self.source.sigma_x, sigma_x_given_y,
                           complex_mode=self.source.complex_mode)


def _slices(dims) -> list[slice]:
    out, start = [], 0
    for d in dims:
        out.append(slice(start, start + d))
        start += d
    return out


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def conditional_covariance(sigma_a, sigma_ab, sigma_b) -> np.ndarray:
    """``Sigma_a - Sigma_ab Sigma_b^{-1} Sigma_ab^H``, symmetrized."""
    sigma_a = np.asarray(sigma_a)
    sigma_ab = np.atleast_2d(np.asarray(sigma_ab))
    sigma_b = np.atleast_2d(np.asarray(sigma_b))
    return _herm(sigma_a - sigma_ab @ psd_solve(sigma_b, sigma_ab.conj().T))


def gaussian_mi(sigma_a, sigma_a_given_b, complex_mode: bool = False) -> float:
    """Mutual information from a marginal and a conditional covariance.

    ``factor * [ln det Sigma_a - ln det Sigma_{a|b}]`` with factor 1/2 in
    real mode and 1 in complex mode; PSD-singular inputs go through the
    floored pseudo-log-det.
    """
    ld_a, _ = pseudo_logdet(np.atleast_2d(np.asarray(sigma_a)))
    ld_ab, _ = pseudo_logdet(np.atleast_2d(np.asarray(sigma_a_given_b)))
    factor = 1.0 if complex_mode else 0.5
    return max(factor * (ld_a - ld_ab), 0.0)


def induce_gaussian_joint(source: GaussianSource,
                          encoders: LinearEncoderSet) -> GaussianJoint:
    """Cache the second-order statistics of (X, Y_1..K, U_1..K)."""
    return GaussianJoint(source, encoders)


def region_bound(source: GaussianSource, b: BMatrixSet, rates) -> float:
    """Min-over-subsets relevance bound of the Gaussian region.

    For each subset S the right-hand side is
    ``sum_{k in S} [R_k + c ln|I - B_k|] + c ln|sum_{k in S^c} Hb_k^H B_k Hb_k + I|``
    with ``c`` the real/complex factor.  A unit eigenvalue of ``B_k`` for
    ``k in S`` makes that subset's value ``-inf`` explicitly.
    """
    if len(b.b) != source.n_encoders:
        raise ValueError("B-matrix count != encoder count")
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (source.n_encoders,):
        raise ValueError("need one rate per encoder")
    if np.any(rates[np.isfinite(rates)] < 0):
        raise ValueError("rates must be nonnegative")
    factor = source.mi_factor
    hbar = [source.normalized_channel(k) for k in range(source.n_encoders)]
    n = source.x_dim
    best = math.inf
    for mask in range(1 << source.n_encoders):
        subset = [k for k in range(source.n_encoders) if mask >> k & 1]
        comp = [k for k in range(source.n_encoders) if not mask >> k & 1]
        if any(math.isinf(rates[k]) for k in subset):
            continue  # unconstrained rate: this subset never binds
        value = 0.0
        blocked = False
        for k in subset:
            eye = np.eye(b.b[k].shape[0], dtype=b.b[k].dtype)
            eig = np.linalg.eigvalsh(_herm(eye - b.b[k]))
            if eig.min() <= LOGDET_FLOOR:
                blocked = True  # unit eigenvalue: this subset is -inf
                break
            value += rates[k] + factor * float(np.log(eig).sum())
        if blocked:
            return -math.inf
        acc = np.eye(n, dtype=complex if source.complex_mode else float)
        for k in comp:
            acc = acc + hbar[k].conj().T @ b.b[k] @ hbar[k]
        ld, _ = pseudo_logdet(acc)
        value += factor * ld
        best = min(best, value)
    return best


def b_from_encoders(source: GaussianSource,
                    encoders: LinearEncoderSet) -> BMatrixSet:
    """Map linear encoders to their normalized MMSE region matrices.

    ``B_k = I - sigma_n_k^{-1/2} mmse(Y_k | X, U_k) sigma_n_k^{-1/2}`` where
    the MMSE matrix is the Gaussian conditional covariance of ``Y_k`` given
    ``(X, U_k)``.
    """
    joint = induce_gaussian_joint(source, encoders)
    out = []
    for k in range(source.n_encoders):
        mmse = _mmse_y_given_x_u(joint, k)
        w = inv_sqrt_psd(np.asarray(source.sigma_n[k]))
        bk = _herm(np.eye(mmse.shape[0], dtype=mmse.dtype) - w @ mmse @ w)
        # clip round-off excursions outside [0, 1]
        eig, vec = np.linalg.eigh(bk)
        eig = np.clip(eig, 0.0, 1.0)
        out.append(_herm((vec * eig) @ vec.conj().T))
    return BMatrixSet(tuple(out))


def _mmse_y_given_x_u(joint: GaussianJoint, k: int) -> np.ndarray:
    src = joint.source
    ak = np.asarray(joint.encoders.a[k], dtype=src.sigma_x.dtype)
    sigma_y = joint.sigma_y[k]
    sigma_yx = src.h[k] @ src.sigma_x
    sigma_yu = sigma_y @ ak.conj().T
    sigma_xu = src.sigma_x @ src.h[k].conj().T @ ak.conj().T
    top = np.hstack([src.sigma_x, sigma_xu])
    bottom = np.hstack([sigma_xu.conj().T, joint.sigma_u[k]])
    sigma_cond = np.vstack([top, bottom])
    cross = np.hstack([sigma_yx, sigma_yu])
    return conditional_covariance(sigma_y, cross, sigma_cond)


def fisher_identity_residual(source: GaussianSource,
                             encoders: LinearEncoderSet, subset) -> float:
    """Max-abs residual of the Fisher/MMSE identity on a subset's complement.

    For Gaussian test channels the conditional Fisher information equals the
    inverse conditional covariance, so
    ``Sigma_{x|u_{S^c}}^{-1} - Sigma_x^{-1} - sum_{k in S^c} H_k^H Bbar_k H_k``
    is expected to vanish.
    """
    subset = sorted(set(subset))
    if not set(subset) <= set(range(source.n_encoders)):
        raise ValueError("subset out of range")
    comp = [k for k in range(source.n_encoders) if k not in subset]
    joint = induce_gaussian_joint(source, encoders)
    b = b_from_encoders(source, encoders)
    lhs = psd_inverse(joint.sigma_x_given_u(comp))
    rhs = psd_inverse(np.asarray(source.sigma_x))
    for k in comp:
        w = inv_sqrt_psd(np.asarray(source.sigma_n[k]))
        bbar = w @ b.b[k] @ w
        rhs = rhs + source.h[k].conj().T @ bbar @ source.h[k]
    return float(np.abs(lhs - rhs).max())
