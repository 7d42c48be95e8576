"""Killing-vector machinery: residuals, brackets, algebra dimension.

The dimension estimator uses the classical prolongation trick: a Killing
field is determined by its value and the antisymmetric part of its first
covariant derivative at one point, so candidate initial data lives in a
dim*(dim+1)/2-dimensional space.  Requiring the Lie derivative of the
Riemann tensor (and, at depth 2, of its first covariant derivative) to
vanish imposes linear constraints on that data; the estimate is the
dimension of the constraint kernel, with rank read off a singular-value
threshold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exprlang import ExprAst, eval_jet_bindings, free_symbols, parse_expr, to_text
from .geometry import (
    GeometryError,
    MetricSpec,
    _Pipeline,
    _metric_jets,
    _vals,
    coordinate_seeds,
)
from .jets import Jet, jet_constant
from .report import CheckReport, make_report

__all__ = [
    "VectorFieldSpec",
    "killing_residual",
    "lie_bracket_at",
    "killing_dimension_estimate",
    "killing_dimension",
    "independence_rank",
    "closure_residual",
]

_RANK_CUTOFF = 1e-8


@dataclass(frozen=True)
class VectorFieldSpec:
    """Contravariant vector field with one component expression per coordinate."""

    components: tuple[ExprAst, ...]

    @staticmethod
    def parse(components: Sequence[str]) -> "VectorFieldSpec":
        return VectorFieldSpec(tuple(parse_expr(c) for c in components))

    def texts(self) -> list[str]:
        return [to_text(c) for c in self.components]


def _field_jets(xi: VectorFieldSpec, seeds, dim: int, order: int) -> list[Jet]:
    shape_ref = next(v for v in seeds.values() if isinstance(v, Jet)).coeffs[0]
    out = []
    for comp in xi.components:
        v = eval_jet_bindings(comp, seeds)
        if not isinstance(v, Jet):
            v = jet_constant(
                np.broadcast_to(v, np.shape(shape_ref)).copy() if np.ndim(shape_ref) else v,
                dim,
                order,
            )
        out.append(v)
    return out


def killing_residual(
    m: MetricSpec,
    xi: VectorFieldSpec,
    grid: np.ndarray,
    tolerance: float = 1e-9,
    check_id: str = "killing",
    case: Optional[str] = None,
) -> CheckReport:
    """Max over the grid of |L_xi g| = |D_mu xi_nu + D_nu xi_mu|, normalized
    by 1 + |xi| |dg|."""
    t0 = time.perf_counter()
    grid = np.asarray(grid, dtype=float)
    per_point = killing_residual_values(m, xi, grid)
    worst = int(np.argmax(per_point))
    return make_report(
        check_id=check_id,
        case=case,
        max_residual=float(per_point[worst]),
        tolerance=tolerance,
        grid=f"{len(grid)} points",
        params=dict(m.env),
        worst_point=list(map(float, grid[worst])),
        wall_time=time.perf_counter() - t0,
    )


def killing_residual_values(m: MetricSpec, xi: VectorFieldSpec, grid: np.ndarray) -> np.ndarray:
    if len(xi.components) != m.dim:
        raise GeometryError("vector field dimension does not match the metric")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    seeds = coordinate_seeds(m.coords, tuple(grid[:, i] for i in range(m.dim)), m.env, 1)
    g = _metric_jets(m, seeds)
    xij = _field_jets(xi, seeds, m.dim, 1)
    dim = m.dim
    npts = grid.shape[0]
    lie = np.zeros((dim, dim, npts))
    for a in range(dim):
        for b in range(a, dim):
            tot = 0.0
            for l in range(dim):
                tot = tot + np.asarray(xij[l].derivative(a).coeffs[0]) * np.asarray(g[l][b].coeffs[0])
                tot = tot + np.asarray(xij[l].derivative(b).coeffs[0]) * np.asarray(g[a][l].coeffs[0])
                tot = tot + np.asarray(xij[l].coeffs[0]) * np.asarray(g[a][b].derivative(l).coeffs[0])
            lie[a, b] = lie[b, a] = tot
    xi_mag = np.max(np.abs(np.array([np.asarray(j.coeffs[0]) for j in xij])), axis=0)
    dg_mag = np.max(
        np.abs(
            np.array([
                np.asarray(g[i][j].derivative(l).coeffs[0])
                for i in range(dim)
                for j in range(dim)
                for l in range(dim)
            ])
        ),
        axis=0,
    )
    norm = 1.0 + xi_mag * dg_mag
    return np.max(np.abs(lie), axis=(0, 1)) / norm


def lie_bracket_at(
    xi: VectorFieldSpec,
    eta: VectorFieldSpec,
    p: Sequence[float],
    env: Optional[dict] = None,
) -> np.ndarray:
    """[xi, eta]^mu = xi^l d_l eta^mu - eta^l d_l xi^mu at a point."""
    dim = len(xi.components)
    if len(eta.components) != dim:
        raise GeometryError("vector fields have different dimensions")
    return _bracket_values(xi, eta, tuple(float(v) for v in p), dim, env=env)


def _bracket_values(xi, eta, p, dim, coords: Optional[Sequence[str]] = None, env=None):
    coords = coords or _infer_coords(xi, eta, dim, env)
    seeds = coordinate_seeds(coords, p, env or {}, 1)
    xij = _field_jets(xi, seeds, dim, 1)
    etj = _field_jets(eta, seeds, dim, 1)
    out = np.zeros((dim,) + np.shape(np.asarray(xij[0].coeffs[0])))
    for mu in range(dim):
        tot = 0.0
        for l in range(dim):
            tot = tot + np.asarray(xij[l].coeffs[0]) * np.asarray(etj[mu].derivative(l).coeffs[0])
            tot = tot - np.asarray(etj[l].coeffs[0]) * np.asarray(xij[mu].derivative(l).coeffs[0])
        out[mu] = tot
    return out


_DEFAULT_COORDS = ("t", "x", "y")


def _infer_coords(xi, eta, dim, env=None) -> tuple[str, ...]:
    used = set().union(*(free_symbols(c) for c in xi.components + eta.components))
    unknown = used - set(_DEFAULT_COORDS[:dim]) - set(env or {})
    if unknown:
        raise GeometryError(
            f"bracket fields use symbols {sorted(unknown)}; expected coordinates {_DEFAULT_COORDS[:dim]}"
        )
    return _DEFAULT_COORDS[:dim]


def independence_rank(m: MetricSpec, fields: Sequence[VectorFieldSpec], p: Sequence[float]) -> int:
    """Rank of the stacked value + first-derivative matrix at a point."""
    seeds = coordinate_seeds(m.coords, tuple(float(v) for v in p), m.env, 1)
    rows = []
    for xi in fields:
        jets = _field_jets(xi, seeds, m.dim, 1)
        row = [float(np.asarray(j.coeffs[0])) for j in jets]
        for j in jets:
            for l in range(m.dim):
                row.append(float(np.asarray(j.derivative(l).coeffs[0])))
        rows.append(row)
    return _rank(np.array(rows))


def closure_residual(
    fields: Sequence[VectorFieldSpec],
    points: Sequence[Sequence[float]],
    coords: Sequence[str] = _DEFAULT_COORDS,
    env: Optional[dict] = None,
) -> float:
    """Worst least-squares residual of expressing pairwise brackets in the
    span of the fields, sampled at the given points."""
    dim = len(fields[0].components)
    pts = [tuple(float(v) for v in p) for p in points]
    basis = []
    for xi in fields:
        cols = []
        for p in pts:
            seeds = coordinate_seeds(coords[:dim], p, env or {}, 1)
            vals = [float(np.asarray(v.coeffs[0])) if isinstance(v, Jet) else float(v)
                    for v in (eval_jet_bindings(c, seeds) for c in xi.components)]
            cols.extend(vals)
        basis.append(cols)
    A = np.array(basis).T  # (dim*npts, nfields)
    worst = 0.0
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            b = np.concatenate([
                _bracket_values(fields[i], fields[j], p, dim, coords[:dim], env=env) for p in pts
            ])
            sol = np.linalg.lstsq(A, b, rcond=None)[0]
            resid = np.linalg.norm(A @ sol - b) / (1.0 + np.linalg.norm(b))
            worst = max(worst, float(resid))
    return worst


# -- dimension estimator --------------------------------------------------------


def _cov_deriv_general(T, ups: int, downs: int, gamma, dim):
    """D_a T^{i...}_{j...} for a jet tensor with `ups` leading upper indices
    and `downs` trailing lower indices; the new index is the first lower one
    after the upper block.  Returns nested lists indexed [a][uppers][lowers]."""

    def walk(indices_up, indices_down):
        if len(indices_up) < ups:
            return [walk(indices_up + (k,), indices_down) for k in range(dim)]
        if len(indices_down) < downs:
            return [walk(indices_up, indices_down + (k,)) for k in range(dim)]
        return (indices_up, indices_down)

    def get(tensor, idx):
        cur = tensor
        for k in idx:
            cur = cur[k]
        return cur

    out = []
    for a in range(dim):
        def deriv_at(idx_up, idx_down):
            term = get(T, idx_up + idx_down).derivative(a)
            for pos, i in enumerate(idx_up):
                for l in range(dim):
                    rep = idx_up[:pos] + (l,) + idx_up[pos + 1:]
                    term = term + gamma[i][a][l] * get(T, rep + idx_down)
            for pos, jx in enumerate(idx_down):
                for l in range(dim):
                    rep = idx_down[:pos] + (l,) + idx_down[pos + 1:]
                    term = term - gamma[l][a][jx] * get(T, idx_up + rep)
            return term

        def build(idx_up=(), idx_down=()):
            if len(idx_up) < ups:
                return [build(idx_up + (k,), idx_down) for k in range(dim)]
            if len(idx_down) < downs:
                return [build(idx_up, idx_down + (k,)) for k in range(dim)]
            return deriv_at(idx_up, idx_down)

        out.append(build())
    return out


def killing_dimension_estimate(m: MetricSpec, p: Sequence[float], depth: int = 2) -> int:
    """Dimension of the linear space of Killing initial data (xi, L) at p
    compatible with L_xi Riemann = 0 (depth 1) and additionally
    L_xi (D Riemann) = 0 (depth 2)."""
    if depth < 1 or depth > 2:
        raise GeometryError("depth must be 1 or 2 (jet order budget)")
    point = tuple(float(v) for v in p)
    order = 3 if depth == 1 else 4
    pipe = _Pipeline(m, point, order=order)
    dim = m.dim
    ginv = _vals(pipe.ginv)
    gamma = pipe.gamma
    riem = pipe.riemann

    tensors = []
    dR = _cov_deriv_general(riem, 1, 3, gamma, dim)
    # reorder so the derivative index is a trailing lower slot: T^r_{s m n; a}
    dR_t = [[[[[dR[a][r][s][mu][nu] for a in range(dim)] for nu in range(dim)] for mu in range(dim)] for s in range(dim)] for r in range(dim)]
    tensors.append((riem, 3, _tensor_vals(riem, 4), _tensor_vals(dR_t, 5)))
    if depth == 2:
        d2R = _cov_deriv_general(dR_t, 1, 4, gamma, dim)
        d2R_t = [
            [[[[[d2R[a][r][s][mu][nu][b] for a in range(dim)] for b in range(dim)] for nu in range(dim)] for mu in range(dim)] for s in range(dim)]
            for r in range(dim)
        ]
        tensors.append((dR_t, 4, _tensor_vals(dR_t, 5), _tensor_vals(d2R_t, 6)))

    pairs = [(c, d) for c in range(dim) for d in range(c + 1, dim)]
    n_unknowns = dim + len(pairs)
    # constraint rows that are pure roundoff must count as zero, so the
    # rank cutoff is relative to the curvature magnitude, not only to the
    # largest singular value of the (possibly all-noise) matrix
    scale = 1.0
    for _, _, Tv, DTv in tensors:
        scale = max(scale, float(np.max(np.abs(Tv))), float(np.max(np.abs(DTv))))
    rows = []
    for _, ndown, Tv, DTv in tensors:
        # component loop: one constraint row per tensor component
        for comp in np.ndindex(*Tv.shape):
            rho, lower = comp[0], comp[1:]
            row = np.zeros(n_unknowns)
            for a in range(dim):
                # DTv indexing: derivative index is the last axis
                row[a] = DTv[comp + (a,)]
            for k, (c, d) in enumerate(pairs):
                coeff = 0.0
                # -(D_l xi^rho) T^l_{lower}
                for l in range(dim):
                    dxi = ginv[rho][d] * (1.0 if l == c else 0.0) - ginv[rho][c] * (1.0 if l == d else 0.0)
                    if dxi:
                        coeff -= dxi * Tv[(l,) + lower]
                # +(D_sigma xi^l) T^rho_{... l ...} for each lower slot
                for pos in range(ndown):
                    sig = lower[pos]
                    for l in range(dim):
                        dxi = ginv[l][d] * (1.0 if sig == c else 0.0) - ginv[l][c] * (1.0 if sig == d else 0.0)
                        if dxi:
                            rep = lower[:pos] + (l,) + lower[pos + 1:]
                            coeff += dxi * Tv[(rho,) + rep]
                row[dim + k] = coeff
            rows.append(row)
    M = np.array(rows)
    return n_unknowns - _rank(M, scale)


def _tensor_vals(T, rank: int) -> np.ndarray:
    def walk(node, depth):
        if depth == 0:
            return float(np.asarray(node.coeffs[0]))
        return [walk(child, depth - 1) for child in node]

    return np.array(walk(T, rank))


def _rank(M: np.ndarray, scale: float = 0.0) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_CUTOFF * max(s[0], scale)))


def killing_dimension(
    m: MetricSpec, points: Sequence[Sequence[float]], depth: int = 2
) -> int:
    """Estimate at several generic points; disagreement is an error, never
    averaged away."""
    estimates = [killing_dimension_estimate(m, p, depth) for p in points]
    if len(set(estimates)) != 1:
        raise GeometryError(f"killing dimension estimates disagree across points: {estimates}")
    return estimates[0]
