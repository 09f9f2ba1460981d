"""Fixed-size cross-product accumulators.

All sums are alpha-free and beta-free products against R(phi)^-1; parameter
dependent quantities are expanded from them at query time. A chain keeps one
row of accumulators per fine-grid phi; its own row doubles as the temporal
statistics used by the Gibbs sampler.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from seqeb.errors import ContractViolation, DomainError
from seqeb.spatial.gaussian import LOG_2PI, GaussianFactorization

# Block order inside the flat accumulator vector.
MATRIX_BLOCKS = ("GG0", "GG_cc", "GG_cp", "GG_pp")
VECTOR_BLOCKS = ("Gx0", "Gx_cc", "Gx_cp", "Gx_pc", "Gx_pp")
SCALAR_BLOCKS = ("xx0", "xx_cc", "xx_cp", "xx_pp")


def stat_size(m: int) -> int:
    return len(MATRIX_BLOCKS) * m * m + len(VECTOR_BLOCKS) * m + len(SCALAR_BLOCKS)


class StatBlocks(NamedTuple):
    """Named views of a flat accumulator array with arbitrary leading dims.

    Suffixes: ``c`` is time s, ``p`` is time s-1, ``0`` is the initial state.
    """
    GG0: np.ndarray
    GG_cc: np.ndarray
    GG_cp: np.ndarray
    GG_pp: np.ndarray
    Gx0: np.ndarray
    Gx_cc: np.ndarray
    Gx_cp: np.ndarray
    Gx_pc: np.ndarray
    Gx_pp: np.ndarray
    xx0: np.ndarray
    xx_cc: np.ndarray
    xx_cp: np.ndarray
    xx_pp: np.ndarray


def split_blocks(flat: np.ndarray, m: int) -> StatBlocks:
    lead = flat.shape[:-1]
    parts: list[np.ndarray] = []
    pos = 0
    for _ in MATRIX_BLOCKS:
        parts.append(flat[..., pos : pos + m * m].reshape(lead + (m, m)))
        pos += m * m
    for _ in VECTOR_BLOCKS:
        parts.append(flat[..., pos : pos + m])
        pos += m
    for _ in SCALAR_BLOCKS:
        parts.append(flat[..., pos])
        pos += 1
    return StatBlocks(*parts)


def _join(blocks: list[np.ndarray], lead: tuple[int, ...]) -> np.ndarray:
    return np.concatenate([b.reshape(lead + (-1,)) for b in blocks], axis=-1)


def initial_increment(a0: np.ndarray, B0: np.ndarray) -> np.ndarray:
    """Accumulator contribution of the initial state.

    ``a0`` is (J, n) whitened x_0, ``B0`` is (J, n, m) whitened G_0.
    """
    J, _, m = B0.shape
    zeros_mm = np.zeros((J, m, m))
    zeros_m = np.zeros((J, m))
    zeros = np.zeros(J)
    GG0 = np.einsum("jni,jnk->jik", B0, B0)
    Gx0 = np.einsum("jni,jn->ji", B0, a0)
    xx0 = np.einsum("jn,jn->j", a0, a0)
    return _join(
        [GG0, zeros_mm, zeros_mm, zeros_mm, Gx0, zeros_m, zeros_m, zeros_m, zeros_m, xx0, zeros, zeros, zeros],
        (J,),
    )


def step_increment(a_c: np.ndarray, a_p: np.ndarray, B_c: np.ndarray, B_p: np.ndarray) -> np.ndarray:
    """Accumulator contribution of one transition s-1 -> s (whitened inputs)."""
    J, _, m = B_c.shape
    zeros_mm = np.zeros((J, m, m))
    return _join(
        [
            zeros_mm,
            np.einsum("jni,jnk->jik", B_c, B_c),
            np.einsum("jni,jnk->jik", B_c, B_p),
            np.einsum("jni,jnk->jik", B_p, B_p),
            np.zeros((J, m)),
            np.einsum("jni,jn->ji", B_c, a_c),
            np.einsum("jni,jn->ji", B_c, a_p),
            np.einsum("jni,jn->ji", B_p, a_c),
            np.einsum("jni,jn->ji", B_p, a_p),
            np.zeros(J),
            np.einsum("jn,jn->j", a_c, a_c),
            np.einsum("jn,jn->j", a_c, a_p),
            np.einsum("jn,jn->j", a_p, a_p),
        ],
        (J,),
    )


def kahan_add(sums: np.ndarray, comp: np.ndarray, inc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Compensated addition; returns new (sums, compensation)."""
    y = inc - comp
    total = sums + y
    return total, (total - sums) - y


def _quad(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,i,j->...", M, v, v)


def _lin(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,i->...", w, v)


def transition_precision(blocks: StatBlocks, alpha: float) -> np.ndarray:
    """G_0'PG_0 + sum_s (G_s - a G_{s-1})' P (G_s - a G_{s-1})."""
    cross = blocks.GG_cp + np.swapaxes(blocks.GG_cp, -1, -2)
    return blocks.GG0 + blocks.GG_cc - alpha * cross + alpha * alpha * blocks.GG_pp


def transition_shift(blocks: StatBlocks, alpha: float) -> np.ndarray:
    """G_0'Px_0 + sum_s (G_s - a G_{s-1})' P (x_s - a x_{s-1})."""
    return (
        blocks.Gx0
        + blocks.Gx_cc
        - alpha * (blocks.Gx_cp + blocks.Gx_pc)
        + alpha * alpha * blocks.Gx_pp
    )


def lagged_moments(blocks: StatBlocks, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sum d_{s-1}'P d_{s-1}, sum d_{s-1}'P d_s) with d_s = x_s - G_s beta."""
    s_pp = blocks.xx_pp - 2.0 * _lin(blocks.Gx_pp, beta) + _quad(blocks.GG_pp, beta)
    s_pc = blocks.xx_cp - _lin(blocks.Gx_cp, beta) - _lin(blocks.Gx_pc, beta) + _quad(blocks.GG_cp, beta)
    return s_pp, s_pc


def state_ssr(blocks: StatBlocks, alpha: float, beta: np.ndarray) -> np.ndarray:
    """Full residual quadratic form of the state dynamics, all times 0..t."""
    initial = blocks.xx0 - 2.0 * _lin(blocks.Gx0, beta) + _quad(blocks.GG0, beta)
    xx = blocks.xx_cc - 2.0 * alpha * blocks.xx_cp + alpha * alpha * blocks.xx_pp
    gx = blocks.Gx_cc - alpha * (blocks.Gx_cp + blocks.Gx_pc) + alpha * alpha * blocks.Gx_pp
    cross = blocks.GG_cp + np.swapaxes(blocks.GG_cp, -1, -2)
    gg = blocks.GG_cc - alpha * cross + alpha * alpha * blocks.GG_pp
    return initial + xx - 2.0 * _lin(gx, beta) + _quad(gg, beta)


@dataclass(frozen=True, eq=False)
class Theta:
    """Temporal parameters (alpha, beta, sigma2)."""
    alpha: float
    beta: np.ndarray
    sigma2: float

    def __post_init__(self) -> None:
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float)).copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0.0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def m(self) -> int:
        return int(self.beta.shape[0])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.alpha], self.beta, [self.sigma2]])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Theta":
        v = np.asarray(v, dtype=float)
        return cls(alpha=v[0], beta=v[1:-1], sigma2=v[-1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Theta):
            return NotImplemented
        return bool(np.array_equal(self.to_vector(), other.to_vector()))

    __hash__ = None  # type: ignore[assignment]


def _loglik(n: int, t: int, logdet: np.ndarray, ssr: np.ndarray, sigma2: float) -> np.ndarray:
    k = t + 1
    return -0.5 * k * n * (LOG_2PI + np.log(sigma2)) - 0.5 * k * logdet - 0.5 * ssr / sigma2


@dataclass(frozen=True, eq=False)
class TemporalSuffStats:
    """Accumulators for one phi. ``sums`` and ``comp`` are flat (D,) arrays."""
    phi: Optional[float]
    t: int
    n: int
    m: int
    logdet: float
    sums: np.ndarray
    comp: np.ndarray

    @property
    def blocks(self) -> StatBlocks:
        return split_blocks(self.sums, self.m)

    @property
    def nbytes(self) -> int:
        return int(self.sums.nbytes + self.comp.nbytes)

    def __getattr__(self, name: str) -> np.ndarray:
        if name in StatBlocks._fields:
            return getattr(split_blocks(self.sums, self.m), name)
        raise AttributeError(name)


@dataclass(frozen=True, eq=False)
class PhiLikStats:
    """Accumulators for every phi of the fine grid, rows aligned with ``phis``."""
    phis: np.ndarray
    logdets: np.ndarray
    t: int
    n: int
    m: int
    sums: np.ndarray
    comp: np.ndarray

    @property
    def J(self) -> int:
        return int(self.phis.shape[0])

    @property
    def nbytes(self) -> int:
        return int(self.sums.nbytes + self.comp.nbytes)

    @property
    def blocks(self) -> StatBlocks:
        return split_blocks(self.sums, self.m)

    def entry(self, j: int) -> TemporalSuffStats:
        """Row ``j`` as a TemporalSuffStats sharing this object's memory."""
        return TemporalSuffStats(
            phi=float(self.phis[j]),
            t=self.t,
            n=self.n,
            m=self.m,
            logdet=float(self.logdets[j]),
            sums=self.sums[j],
            comp=self.comp[j],
        )

    @classmethod
    def initial(cls, x0: np.ndarray, WG0: np.ndarray, whiteners: np.ndarray, phis: np.ndarray, logdets: np.ndarray) -> "PhiLikStats":
        """Statistics at t = 0 from whitened covariates ``WG0`` (J, n, m)."""
        x0 = np.asarray(x0, dtype=float)
        a0 = np.einsum("jab,b->ja", whiteners, x0)
        sums = initial_increment(a0, WG0)
        J, n, m = WG0.shape
        return cls._frozen(phis, logdets, 0, n, m, sums, np.zeros_like(sums))

    def updated(
        self,
        x_t: np.ndarray,
        x_prev: np.ndarray,
        WG_t: np.ndarray,
        WG_prev: np.ndarray,
        whiteners: np.ndarray,
    ) -> "PhiLikStats":
        """New statistics with the transition x_prev -> x_t added."""
        a_c = np.einsum("jab,b->ja", whiteners, np.asarray(x_t, dtype=float))
        a_p = np.einsum("jab,b->ja", whiteners, np.asarray(x_prev, dtype=float))
        inc = step_increment(a_c, a_p, WG_t, WG_prev)
        sums, comp = kahan_add(self.sums, self.comp, inc)
        return self._frozen(self.phis, self.logdets, self.t + 1, self.n, self.m, sums, comp)

    def loglik(self, theta: Theta) -> np.ndarray:
        """log p(x_{0:t} | theta, phi) for every phi of the grid."""
        ssr = state_ssr(self.blocks, theta.alpha, theta.beta)
        return _loglik(self.n, self.t, self.logdets, ssr, theta.sigma2)

    @classmethod
    def _frozen(cls, phis, logdets, t, n, m, sums, comp) -> "PhiLikStats":  # type: ignore[no-untyped-def]
        sums = np.ascontiguousarray(sums)
        comp = np.ascontiguousarray(comp)
        sums.setflags(write=False)
        comp.setflags(write=False)
        return cls(phis=phis, logdets=logdets, t=int(t), n=int(n), m=int(m), sums=sums, comp=comp)


def _single(fac: GaussianFactorization) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    phi = np.array([np.nan if fac.phi is None else fac.phi])
    return fac.whitener[None, :, :], phi, np.array([fac.logdet])


def _as_design(G: np.ndarray, n: int) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.shape[0] != n:
        raise DomainError(f"covariate matrix has {G.shape[0]} rows, expected {n}")
    return G


def init_stats(x0: np.ndarray, G0: np.ndarray, fac: GaussianFactorization) -> TemporalSuffStats:
    """Statistics of the initial state for a single phi."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (fac.n,):
        raise DomainError(f"x_0 has shape {x0.shape}, expected ({fac.n},)")
    W, phis, logdets = _single(fac)
    WG0 = np.einsum("jab,bm->jam", W, _as_design(G0, fac.n))
    return PhiLikStats.initial(x0, WG0, W, phis, logdets).entry(0)


def update_stats(
    u: TemporalSuffStats,
    x_t: np.ndarray,
    x_prev: np.ndarray,
    G_t: np.ndarray,
    G_prev: np.ndarray,
    fac: GaussianFactorization,
) -> TemporalSuffStats:
    """Add the transition at time t to single-phi statistics.

    Raises:
        ContractViolation: ``u`` was built against another correlation matrix.
    """
    same_phi = (u.phi is None or np.isnan(u.phi)) == (fac.phi is None) and (
        fac.phi is None or u.phi == fac.phi
    )
    if not same_phi or u.logdet != fac.logdet or u.n != fac.n:
        raise ContractViolation(f"statistics built for phi={u.phi} used with phi={fac.phi}")
    W, phis, logdets = _single(fac)
    WG_t = np.einsum("jab,bm->jam", W, _as_design(G_t, fac.n))
    WG_p = np.einsum("jab,bm->jam", W, _as_design(G_prev, fac.n))
    wrapped = PhiLikStats(phis, logdets, u.t, u.n, u.m, u.sums[None, :], u.comp[None, :])
    return wrapped.updated(x_t, x_prev, WG_t, WG_p, W).entry(0)


def joint_state_loglik(z: TemporalSuffStats, theta: Theta) -> float:
    """log p(x_{0:t} | theta, phi) from one phi's accumulators."""
    ssr = state_ssr(z.blocks, theta.alpha, theta.beta)
    return float(_loglik(z.n, z.t, np.asarray(z.logdet), ssr, theta.sigma2))


def path_stats(
    x: np.ndarray,
    Gs: np.ndarray,
    whiteners: np.ndarray,
    phis: np.ndarray,
    logdets: np.ndarray,
) -> PhiLikStats:
    """Accumulators of a complete path x_{0:t} in one pass, for offline samplers.

    ``x`` is (t+1, n), ``Gs`` is (t+1, n, m) and ``whiteners`` is (J, n, n).
    """
    x = np.asarray(x, dtype=float)
    Gs = np.asarray(Gs, dtype=float)
    if x.ndim != 2 or Gs.shape[:2] != x.shape:
        raise DomainError(f"path {x.shape} and covariates {Gs.shape} do not align")
    steps, n = x.shape
    m = Gs.shape[2]
    J = whiteners.shape[0]
    a = np.einsum("jab,sb->sja", whiteners, x)
    B = np.einsum("jab,sbm->sjam", whiteners, Gs)
    sums = initial_increment(a[0], B[0])
    if steps > 1:
        T = steps - 1
        inc = step_increment(
            a[1:].reshape(T * J, n),
            a[:-1].reshape(T * J, n),
            B[1:].reshape(T * J, n, m),
            B[:-1].reshape(T * J, n, m),
        )
        sums = sums + inc.reshape(T, J, -1).sum(axis=0)
    return PhiLikStats._frozen(
        np.asarray(phis, dtype=float), np.asarray(logdets, dtype=float), steps - 1, n, m, sums, np.zeros_like(sums)
    )
