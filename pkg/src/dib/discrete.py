"""Alternating-minimization solver for the discrete sum-rate problem.

The solver alternates a decoder step (Bayes posteriors, the unique minimizer
of the surrogate for fixed encoders) with an encoder step (exponential-family
reweighting) and descends the surrogate objective monotonically.  Trade-off
points are evaluated parametrically in the multiplier ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import rel_entr, xlogy

from dib.info_core import (
    ConditionalPmf,
    DecoderSet,
    DiscreteSource,
    EncoderSet,
    InducedJoint,
    entropy,
    induce_joint,
)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one discrete solve at a fixed trade-off multiplier ``s``."""

    s: float
    max_iters: int = 300
    tol: float = 1e-9
    restarts: int = 4
    seed: int = 0
    u_sizes: tuple[int, ...] | None = None  # default: |U_k| = |Y_k|
    init_jitter: float = 0.1
    cell_cap: int = 10_000_000

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if self.tol <= 0 or self.max_iters < 1 or self.restarts < 1:
            raise ValueError("tol, max_iters and restarts must be positive")
        if self.u_sizes is not None:
            sizes = tuple(int(u) for u in self.u_sizes)
            if any(u < 1 for u in sizes):
                raise ValueError("description alphabet sizes must be >= 1")
            object.__setattr__(self, "u_sizes", sizes)
        if self.init_jitter <= 0:
            raise ValueError("init_jitter must be positive")


@dataclass(frozen=True)
class TradeoffPoint:
    """One point on the information / sum-rate curve (all values in nats)."""

    s: float
    delta: float
    r_sum: float
    f_s_value: float
    iterations: int = 0
    converged: bool = True
    restart_index: int = 0
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

def f_s(source: DiscreteSource, encoders: EncoderSet, s: float,
        joint: InducedJoint | None = None) -> float:
    """``H(X|U_1..K) + s * sum_k [I(Y_k;U_k) + H(X|U_k)]`` in nats."""
    j = joint if joint is not None else induce_joint(source, encoders)
    value = j.entropy_x_given_u_all()
    for k in range(j.K):
        value += s * (j.mi_y_u(k) + j.entropy_x_given_u(k))
    return value


def f_bar_s(source: DiscreteSource, encoders: EncoderSet,
            decoders: DecoderSet, s: float,
            joint: InducedJoint | None = None) -> float:
    """Surrogate objective; ``>= f_s`` with equality at the Bayes decoders.

    Returns ``+inf`` when a decoder puts zero mass where the induced joint
    has support.
    """
    j = joint if joint is not None else induce_joint(source, encoders)
    value = 0.0
    for k in range(j.K):
        value += s * j.mi_y_u(k)
        value -= s * _expected_log_posterior(j.p_xu[k], decoders.per_encoder[k].T)
    x_size = source.x_size
    p_xu_all = j.p_xu_all.reshape(x_size, -1)
    q_joint = decoders.joint.reshape(-1, x_size).T
    value -= _expected_log_posterior(p_xu_all, q_joint)
    return value


def _expected_log_posterior(p_xu: np.ndarray, q_xu: np.ndarray) -> float:
    """``E_{X,U}[ln q(X|U)]`` with support-violation -> -inf."""
    mask = p_xu > 0
    if np.any(mask & (q_xu <= 0)):
        return -math.inf
    out = np.zeros_like(p_xu)
    np.log(q_xu, out=out, where=mask)
    return float((p_xu * out).sum())


# ---------------------------------------------------------------------------
# update steps
# ---------------------------------------------------------------------------

def update_decoders(source: DiscreteSource, encoders: EncoderSet,
                    joint: InducedJoint | None = None) -> DecoderSet:
    """Bayes posteriors of the induced joint; ``p(x)`` on zero-mass symbols."""
    j = joint if joint is not None else induce_joint(source, encoders)
    px = source.px.probs
    per = []
    for k in range(j.K):
        table = j.p_xu[k].T.copy()  # (|U_k|, |X|)
        mass = table.sum(axis=1)
        table[mass <= 0] = px
        per.append(table / table.sum(axis=1, keepdims=True))
    joint_table = np.moveaxis(j.p_xu_all, 0, -1).copy()
    flat = joint_table.reshape(-1, source.x_size)
    mass = flat.sum(axis=1)
    flat[mass <= 0] = px
    flat /= flat.sum(axis=1, keepdims=True)
    return DecoderSet(tuple(per), flat.reshape(joint_table.shape))


def update_encoders(source: DiscreteSource, encoders: EncoderSet,
                    decoders: DecoderSet, s: float,
                    cell_cap: int = 10_000_000) -> EncoderSet:
    """One sweep of the exponential-reweighting encoder step.

    Encoders are updated sequentially in ``k``; each step conditions on the
    freshest marginals of the other encoders.  ``s`` must be strictly
    positive (the exponent carries a ``1/s`` term).
    """
    if s <= 0:
        raise ValueError("encoder update undefined at s = 0")
    current = encoders
    for k in range(source.n_encoders):
        j = induce_joint(source, current, cell_cap=cell_cap)
        current = current.replace(k, _encoder_step(j, decoders, k, s))
    return current


def _encoder_step(j: InducedJoint, decoders: DecoderSet, k: int,
                  s: float) -> ConditionalPmf:
    x_size = j.source.x_size
    u_size = j.u_sizes[k]

    # single-description divergence D(P_{X|y} || Q_{X|u}), shape (|Y_k|, |U_k|)
    pxy = j.p_x_given_y[k]                       # (Y, X)
    q_k = decoders.per_encoder[k]                # (U, X)
    psi = rel_entr(pxy[:, None, :], q_k[None, :, :]).sum(axis=2)

    # cross-description divergence averaged over the other encoders
    p_rest = j.p_urest_given_y[k]                # (Y, R)
    p_x_rest = j.p_x_given_urest_y[k]            # (Y, R, X)
    q_joint = np.moveaxis(decoders.joint, k, -2).reshape(-1, u_size, x_size)
    # KL over x for every (y, r, u): (Y, R, 1, X) against (R, U, X)
    div = rel_entr(p_x_rest[:, :, None, :], q_joint[None, :, :, :]).sum(axis=3)
    # zero-probability rest tuples contribute nothing, even against inf KL
    weighted = np.where(p_rest[:, :, None] > 0, p_rest[:, :, None] * div, 0.0)
    psi = psi + weighted.sum(axis=1) / s

    with np.errstate(divide="ignore"):
        logits = np.log(j.p_u[k])[None, :] - psi
    rows = np.zeros_like(logits)
    finite = np.isfinite(logits)
    for y in range(rows.shape[0]):
        if not finite[y].any():
            # every candidate has zero mass; keep the current row
            rows[y] = j.encoders.encoders[k].rows[y]
            continue
        shifted = logits[y] - logits[y][finite[y]].max()
        rows[y] = np.where(finite[y], np.exp(shifted, where=finite[y],
                                             out=np.zeros_like(shifted)), 0.0)
        rows[y] /= rows[y].sum()
    return ConditionalPmf(rows)


# ---------------------------------------------------------------------------
# solve / evaluate
# ---------------------------------------------------------------------------

def solve(source: DiscreteSource, config: SolverConfig
          ) -> tuple[EncoderSet, DecoderSet, TradeoffPoint]:
    """Best-of-restarts alternating minimization at multiplier ``config.s``.

    The surrogate value is recorded after every half-step; it is
    non-increasing along each run.  At ``s = 0`` the unconstrained endpoint
    is returned analytically via copy encoders.
    """
    u_sizes = config.u_sizes or source.y_sizes
    if config.s == 0:
        return _zero_s_endpoint(source, u_sizes, config)

    best = None
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    for r in range(config.restarts):
        rng = np.random.default_rng(seeds[r])
        encoders = _jittered_uniform_encoders(source, u_sizes, rng,
                                              config.init_jitter)
        encoders, decoders, trace, iters, converged = _run(
            source, encoders, config
        )
        final = trace[-1]
        if best is None or final < best[0]:
            best = (final, encoders, decoders, trace, iters, converged, r)

    final, encoders, decoders, trace, iters, converged, r = best
    joint = induce_joint(source, encoders, cell_cap=config.cell_cap)
    point = evaluate_point(source, encoders, config.s, joint=joint)
    point = replace(
        point,
        f_s_value=f_s(source, encoders, config.s, joint=joint),
        iterations=iters,
        converged=converged,
        restart_index=r,
        diagnostics={**point.diagnostics, "f_bar_trace": trace},
    )
    return encoders, decoders, point


def _run(source, encoders, config):
    trace = []
    prev_full = None
    converged = False
    iters = 0
    for it in range(1, config.max_iters + 1):
        joint = induce_joint(source, encoders, cell_cap=config.cell_cap)
        decoders = update_decoders(source, encoders, joint=joint)
        trace.append(f_s(source, encoders, config.s, joint=joint))
        encoders = update_encoders(source, encoders, decoders, config.s,
                                   cell_cap=config.cell_cap)
        trace.append(f_bar_s(source, encoders, decoders, config.s))
        iters = it
        if prev_full is not None and abs(prev_full - trace[-1]) < config.tol:
            converged = True
            break
        prev_full = trace[-1]
    # return decoders consistent with the final encoders
    decoders = update_decoders(source, encoders)
    return encoders, decoders, trace, iters, converged


def _jittered_uniform_encoders(source, u_sizes, rng, jitter) -> EncoderSet:
    # exact uniform rows are a fixed point of the encoder step; jitter off it
    encs = []
    for k in range(source.n_encoders):
        rows = np.ones((source.y_sizes[k], u_sizes[k]))
        rows *= 1.0 + jitter * rng.uniform(-1.0, 1.0, size=rows.shape)
        rows /= rows.sum(axis=1, keepdims=True)
        encs.append(ConditionalPmf(rows))
    return EncoderSet(tuple(encs))


def _copy_encoders(source, u_sizes) -> EncoderSet:
    encs = []
    for k in range(source.n_encoders):
        y = source.y_sizes[k]
        rows = np.zeros((y, u_sizes[k]))
        for i in range(y):
            rows[i, min(i, u_sizes[k] - 1)] = 1.0
        encs.append(ConditionalPmf(rows))
    return EncoderSet(tuple(encs))


def _zero_s_endpoint(source, u_sizes, config):
    encoders = _copy_encoders(source, u_sizes)
    decoders = update_decoders(source, encoders)
    point = evaluate_point(source, encoders, 0.0)
    point = replace(point, converged=True, iterations=1,
                    f_s_value=f_s(source, encoders, 0.0))
    return encoders, decoders, point


def evaluate_point(source: DiscreteSource, encoders: EncoderSet, s: float,
                   joint: InducedJoint | None = None) -> TradeoffPoint:
    """Trade-off point for given encoders at multiplier ``s``.

    The sum-rate is ``I(X;U_1..K) + sum_k [I(Y_k;U_k) - I(X;U_k)]``; the
    relevance is recovered parametrically from the objective and
    cross-checked against the direct ``I(X;U_1..K)``.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    j = joint if joint is not None else induce_joint(source, encoders)
    delta_direct = j.mi_x_u_all()
    r_sum = delta_direct
    for k in range(j.K):
        r_sum += j.mi_y_u(k) - j.mi_x_u(k)
    hx = entropy(source.px)
    f_val = f_s(source, encoders, s, joint=j)
    delta_s = ((1.0 + s * j.K) * hx + s * r_sum - f_val) / (1.0 + s)
    return TradeoffPoint(
        s=s,
        delta=delta_s,
        r_sum=max(r_sum, 0.0),
        f_s_value=f_val,
        diagnostics={
            "delta_direct": delta_direct,
            "delta_gap": abs(delta_s - delta_direct),
        },
    )


def region_rhs(source: DiscreteSource, encoders: EncoderSet,
               rates, subset, joint: InducedJoint | None = None) -> float:
    """Single-subset right-hand side of the rate-information region.

    ``sum_{k in S} [R_k - I(Y_k;U_k|X)] + I(X;U_{S^c})``.  The achievable
    relevance for (encoders, rates) is the minimum over all subsets; see
    :func:`region_min`.
    """
    j = joint if joint is not None else induce_joint(source, encoders)
    subset = frozenset(subset)
    if not subset <= set(range(j.K)):
        raise ValueError("subset out of range")
    rates = np.asarray(rates, dtype=float)
    value = 0.0
    for k in subset:
        value += rates[k] - j.mi_y_u_given_x(k)
    complement = [k for k in range(j.K) if k not in subset]
    value += _mi_x_u_subset(j, complement)
    return value


def region_min(source: DiscreteSource, encoders: EncoderSet, rates,
               joint: InducedJoint | None = None) -> float:
    """Minimum of :func:`region_rhs` over all 2^K subsets."""
    j = joint if joint is not None else induce_joint(source, encoders)
    best = math.inf
    for mask in range(1 << j.K):
        subset = [k for k in range(j.K) if mask >> k & 1]
        best = min(best, region_rhs(source, encoders, rates, subset, joint=j))
    return best


def _mi_x_u_subset(j: InducedJoint, ks) -> float:
    if not ks:
        return 0.0
    px = j.source.px.probs
    table = np.ones((px.size, 1))
    for k in ks:
        table = (table[:, :, None] * j.t[k][:, None, :]).reshape(px.size, -1)
    p_joint = px[:, None] * table
    from dib.info_core import mutual_information

    return mutual_information(p_joint)
