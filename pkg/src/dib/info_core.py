"""Discrete probability containers and information functionals.

Conventions: natural logarithms everywhere, ``0 * ln 0 = 0`` and
``p * ln(p/0) = +inf`` as explicit values (never NaN).  All containers are
immutable after construction and validated once, so the functionals below can
skip re-checking their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr, xlogy

#: Pmf entries must sum to one within this drift before renormalization.
NORMALIZATION_DRIFT = 1e-6

#: Default cap on |X| * prod|Y_k| * prod|U_k| when inducing a joint.
DEFAULT_CELL_CAP = 10_000_000


class DimensionMismatchError(ValueError):
    """Alphabet sizes of the operands do not line up."""


class JointSizeError(RuntimeError):
    """The (factored) joint would exceed the configured cell cap."""


def _as_prob_vector(values, drift: float = NORMALIZATION_DRIFT) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("probability vector must be 1-D and non-empty")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("probabilities must be finite and nonnegative")
    total = float(v.sum())
    if abs(total - 1.0) > drift:
        raise ValueError(f"probabilities sum to {total}, beyond drift {drift}")
    return v / total


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over a finite alphabet.

    Inputs within ``NORMALIZATION_DRIFT`` of unit mass are renormalized;
    anything further off is rejected.
    """

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_prob_vector(self.probs))
        self.probs.setflags(write=False)

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class ConditionalPmf:
    """Row-stochastic table: one Pmf over the output alphabet per input symbol."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.size == 0:
            raise ValueError("conditional pmf must be a non-empty 2-D table")
        rows = np.stack([_as_prob_vector(r) for r in rows])
        object.__setattr__(self, "rows", rows)
        self.rows.setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class DiscreteSource:
    """Hidden signal ``X`` observed through K independent noisy channels.

    The joint factors as ``p(x) * prod_k p(y_k | x)``: the observations are
    independent conditionally on X by construction.
    """

    px: Pmf
    channels: tuple[ConditionalPmf, ...]

    def __post_init__(self):
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("need at least one channel")
        for k, ch in enumerate(channels):
            if ch.n_inputs != len(self.px):
                raise DimensionMismatchError(
                    f"channel {k} has {ch.n_inputs} rows, expected {len(self.px)}"
                )
        object.__setattr__(self, "channels", channels)

    @property
    def n_encoders(self) -> int:
        return len(self.channels)

    @property
    def x_size(self) -> int:
        return len(self.px)

    @property
    def y_sizes(self) -> tuple[int, ...]:
        return tuple(ch.n_outputs for ch in self.channels)


@dataclass(frozen=True)
class EncoderSet:
    """Per-encoder stochastic maps ``Y_k -> U_k`` (the test channels)."""

    encoders: tuple[ConditionalPmf, ...]

    def __post_init__(self):
        object.__setattr__(self, "encoders", tuple(self.encoders))
        if not self.encoders:
            raise ValueError("need at least one encoder")

    @property
    def u_sizes(self) -> tuple[int, ...]:
        return tuple(e.n_outputs for e in self.encoders)

    def replace(self, k: int, encoder: ConditionalPmf) -> "EncoderSet":
        enc = list(self.encoders)
        enc[k] = encoder
        return EncoderSet(tuple(enc))


@dataclass(frozen=True)
class DecoderSet:
    """Posterior tables over X: one per single description and one joint.

    ``per_encoder[k]`` has shape ``(|U_k|, |X|)``; ``joint`` has shape
    ``(|U_1|, ..., |U_K|, |X|)``.  Every stored row is a valid pmf.
    """

    per_encoder: tuple[np.ndarray, ...]
    joint: np.ndarray

    def __post_init__(self):
        per = tuple(np.asarray(q, dtype=float) for q in self.per_encoder)
        joint = np.asarray(self.joint, dtype=float)
        x_size = per[0].shape[1]
        for q in per:
            if q.ndim != 2 or q.shape[1] != x_size:
                raise DimensionMismatchError("inconsistent posterior tables")
            _validate_rows(q)
        if joint.shape[-1] != x_size:
            raise DimensionMismatchError("joint posterior X-axis mismatch")
        _validate_rows(joint.reshape(-1, x_size))
        object.__setattr__(self, "per_encoder", per)
        object.__setattr__(self, "joint", joint)


def _validate_rows(table: np.ndarray) -> None:
    if np.any(table < 0):
        raise ValueError("negative posterior entry")
    sums = table.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > NORMALIZATION_DRIFT):
        raise ValueError("posterior row not normalized")


# ---------------------------------------------------------------------------
# information functionals
# ---------------------------------------------------------------------------

def entropy(p) -> float:
    """Shannon entropy ``-sum p ln p`` in nats (``0 ln 0 = 0``)."""
    probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    return float(-xlogy(probs, probs).sum())


def kl_divergence(p, q) -> float:
    """``D_KL(p || q)`` in nats; ``+inf`` when p puts mass where q has none."""
    pv = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    qv = q.probs if isinstance(q, Pmf) else np.asarray(q, dtype=float)
    if pv.shape != qv.shape:
        raise DimensionMismatchError("KL divergence needs a common alphabet")
    return float(rel_entr(pv, qv).sum())


def mutual_information(joint) -> float:
    """Mutual information of a normalized 2-D joint pmf, in nats."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise DimensionMismatchError("joint must be 2-D")
    pa = j.sum(axis=1)
    pb = j.sum(axis=0)
    val = float(rel_entr(j, np.outer(pa, pb)).sum())
    # clip the tiny negative round-off that rel_entr can accumulate
    return max(val, 0.0)


def conditional_entropy(joint) -> float:
    """``H(A | B)`` from a 2-D joint over (A, B), in nats."""
    j = np.asarray(joint, dtype=float)
    return entropy(j.reshape(-1)) - entropy(j.sum(axis=0))


# ---------------------------------------------------------------------------
# induced joints
# ---------------------------------------------------------------------------

class InducedJoint:
    """Joint of (X, Y_1..K, U_1..K) induced by a source and an encoder set.

    Stored in factored form; the marginals the solvers need are materialized
    eagerly (they are all polynomial in the per-encoder alphabet sizes except
    the ``u_rest`` tables, whose cost the cell cap makes explicit).
    """

    def __init__(self, source: DiscreteSource, encoders: EncoderSet,
                 cell_cap: int = DEFAULT_CELL_CAP):
        if len(encoders.encoders) != source.n_encoders:
            raise DimensionMismatchError("encoder count != channel count")
        for k, enc in enumerate(encoders.encoders):
            if enc.n_inputs != source.y_sizes[k]:
                raise DimensionMismatchError(
                    f"encoder {k} expects {enc.n_inputs} inputs, "
                    f"channel emits {source.y_sizes[k]} symbols"
                )
        cells = source.x_size * math.prod(source.y_sizes) * math.prod(encoders.u_sizes)
        if cells > cell_cap:
            raise JointSizeError(f"joint would hold {cells} cells > cap {cell_cap}")

        self.source = source
        self.encoders = encoders
        self.K = source.n_encoders
        self.u_sizes = encoders.u_sizes

        px = source.px.probs
        chans = [ch.rows for ch in source.channels]
        encs = [e.rows for e in encoders.encoders]

        # p(u_k | x), shape (|X|, |U_k|)
        self.t = [chans[k] @ encs[k] for k in range(self.K)]

        # p(x, u_1..K), shape (|X|, |U_1|, ..., |U_K|)
        arr = px.reshape((-1,) + (1,) * self.K)
        for k in range(self.K):
            shape = [1] * (self.K + 1)
            shape[0] = source.x_size
            shape[k + 1] = self.u_sizes[k]
            arr = arr * self.t[k].reshape(shape)
        self.p_xu_all = arr
        self.p_u_all = arr.sum(axis=0)

        self.p_xu = [px[:, None] * self.t[k] for k in range(self.K)]
        self.p_u = [m.sum(axis=0) for m in self.p_xu]
        self.p_xy = [px[:, None] * chans[k] for k in range(self.K)]
        self.p_y = [m.sum(axis=0) for m in self.p_xy]

        # p(x | y_k) with the p(x) convention on zero-mass symbols
        self.p_x_given_y = []
        for k in range(self.K):
            py = self.p_y[k]
            cond = np.where(py[:, None] > 0, self.p_xy[k].T, px[None, :])
            cond = cond / cond.sum(axis=1, keepdims=True)
            self.p_x_given_y.append(cond)

        # tables over the other encoders' descriptions, rest axes flattened
        self.rest_shapes = []
        self.p_urest_given_y = []   # (|Y_k|, R_k)
        self.p_x_given_urest_y = []  # (|Y_k|, R_k, |X|)
        for k in range(self.K):
            rest_shape = tuple(self.u_sizes[j] for j in range(self.K) if j != k)
            r_size = math.prod(rest_shape) if rest_shape else 1
            rest = np.ones((source.x_size, 1))
            for j in range(self.K):
                if j == k:
                    continue
                rest = (rest[:, :, None] * self.t[j][:, None, :]).reshape(
                    source.x_size, -1
                )
            # p(x, u_rest | y_k) = p(x|y_k) * p(u_rest | x)
            pxur_y = self.p_x_given_y[k][:, :, None] * rest[None, :, :]
            pur_y = pxur_y.sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                px_ury = np.where(
                    pur_y[:, None, :] > 0,
                    pxur_y / pur_y[:, None, :],
                    px[None, :, None],
                )
            self.rest_shapes.append(rest_shape)
            self.p_urest_given_y.append(pur_y.reshape(-1, r_size))
            self.p_x_given_urest_y.append(
                np.moveaxis(px_ury, 1, 2).reshape(-1, r_size, source.x_size)
            )

    # -- information quantities -------------------------------------------

    def entropy_x(self) -> float:
        return entropy(self.source.px)

    def entropy_x_given_u_all(self) -> float:
        return entropy(self.p_xu_all.reshape(-1)) - entropy(self.p_u_all.reshape(-1))

    def entropy_x_given_u(self, k: int) -> float:
        return conditional_entropy(self.p_xu[k])

    def mi_x_u_all(self) -> float:
        return mutual_information(
            self.p_xu_all.reshape(self.source.x_size, -1)
        )

    def mi_x_u(self, k: int) -> float:
        return mutual_information(self.p_xu[k])

    def mi_y_u(self, k: int) -> float:
        p_yu = self.p_y[k][:, None] * self.encoders.encoders[k].rows
        return mutual_information(p_yu)

    def mi_x_y(self, k: int) -> float:
        return mutual_information(self.p_xy[k])

    def mi_y_u_given_x(self, k: int) -> float:
        """``I(Y_k; U_k | X)`` from the three-way joint p(x, y_k, u_k)."""
        px = self.source.px.probs
        chan = self.source.channels[k].rows
        enc = self.encoders.encoders[k].rows
        total = 0.0
        for x in range(self.source.x_size):
            joint = chan[x][:, None] * enc
            total += px[x] * mutual_information(joint)
        return total


def induce_joint(source: DiscreteSource, encoders: EncoderSet,
                 cell_cap: int = DEFAULT_CELL_CAP) -> InducedJoint:
    """Materialize the joint induced by ``source`` and ``encoders``."""
    return InducedJoint(source, encoders, cell_cap=cell_cap)
