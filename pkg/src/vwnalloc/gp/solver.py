"""Interior-point solver for geometric programs.

Pipeline: compile to the log domain, eliminate monomial equalities exactly
(they are affine in z), find a strictly feasible point with a phase-I
subproblem if the supplied start is not interior, then run a log-barrier
method: damped Newton centering steps with backtracking line search and a
barrier parameter that grows by a factor mu = 10 per stage.

All centering works on the t-scaled potential

    phi(z) = F0(z) + (1/t) * sum_i log(1 / (-F_i(z)))

so floating-point precision does not degrade as t grows.  With duals
lambda_i = 1 / (t * (-F_i)) the gradient of phi *is* the KKT stationarity
residual, and the complementary-slackness residual is exactly m/t, so the
reported kkt_residual is

    max( ||grad phi||_inf, m/t, max(0, F_i), |E z - d|_inf ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .logdomain import CompiledGp, _Stack, _row_scale, log_transform
from .posynomial import GpProblem, GpSolution

_MU = 10.0
_MAX_CENTER_STEPS = 60
_LS_BETA = 0.5
_LS_C1 = 0.01


class _Infeasible(Exception):
    pass


@dataclass
class _Reduced:
    """Equality-eliminated view: z = lift(u) with E lift(u) = d exactly."""

    compiled: CompiledGp
    free: np.ndarray
    basic: np.ndarray
    W: np.ndarray  # z_basic = W @ u + c0b
    c0b: np.ndarray
    obj: _Stack
    ineq: _Stack
    lb_u: np.ndarray
    ub_u: np.ndarray

    @classmethod
    def build(cls, compiled: CompiledGp) -> "_Reduced":
        n = compiled.n
        E, d = compiled.E, compiled.d
        p = E.shape[0]
        if p == 0:
            free = np.arange(n)
            basic = np.empty(0, dtype=np.int64)
            W = np.zeros((0, n))
            c0b = np.empty(0)
            obj, ineq = compiled.obj, compiled.ineq
        else:
            Ed = E.toarray()
            q, r, piv = sla.qr(Ed, pivoting=True, mode="economic")
            diag = np.abs(np.diag(r))
            tol_rank = max(Ed.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
            rank = int(np.sum(diag > max(tol_rank, 1e-13)))
            if rank < p:
                # redundant rows must still be consistent
                zstar, *_ = np.linalg.lstsq(Ed, d, rcond=None)
                if np.max(np.abs(Ed @ zstar - d)) > 1e-8:
                    raise _Infeasible("inconsistent monomial equalities")
            basic = np.sort(piv[:rank])
            free = np.setdiff1d(np.arange(n), basic)
            EB = Ed[:, basic]
            EF = Ed[:, free]
            W_sol, *_ = np.linalg.lstsq(EB, -EF, rcond=None)
            c0b_sol, *_ = np.linalg.lstsq(EB, d, rcond=None)
            W, c0b = W_sol, c0b_sol
            obj = cls._transform(compiled.obj, free, basic, W, c0b)
            ineq = cls._transform(compiled.ineq, free, basic, W, c0b)
        return cls(
            compiled=compiled,
            free=free,
            basic=basic,
            W=W,
            c0b=c0b,
            obj=obj,
            ineq=ineq,
            lb_u=compiled.lb_z[free],
            ub_u=compiled.ub_z[free],
        )

    @staticmethod
    def _transform(stack: _Stack, free, basic, W, c0b) -> _Stack:
        A_free = stack.A[:, free]
        A_basic = stack.A[:, basic]
        A_new = (A_free + A_basic @ sp.csr_matrix(W)).tocsr()
        b_new = stack.b + np.asarray(A_basic @ c0b).ravel()
        out = _Stack(
            A=A_new,
            b=b_new,
            fptr=stack.fptr,
            cptr=stack.cptr,
            term_rep=stack.term_rep,
            term_con=stack.term_con,
            fac_con=stack.fac_con,
            Sfac=stack.Sfac,
            Scon=stack.Scon,
        )
        return out

    @property
    def n_u(self) -> int:
        return len(self.free)

    def lift(self, u: np.ndarray) -> np.ndarray:
        z = np.empty(self.compiled.n)
        z[self.free] = u
        if len(self.basic):
            z[self.basic] = self.W @ u + self.c0b
        return z

    def drop(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)[self.free]


def _chol_solve(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.abs(np.diag(H)))), 1.0)
    jitter = 1e-13 * scale
    for _ in range(8):
        try:
            c = sla.cho_factor(H + jitter * np.eye(H.shape[0]), lower=True, check_finite=False)
            return sla.cho_solve(c, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            jitter *= 100.0
    return np.linalg.lstsq(H, rhs, rcond=None)[0]


class _Barrier:
    """Newton machinery for one reduced problem."""

    def __init__(self, red: _Reduced):
        self.red = red
        self.steps = 0

    # -- plain potential values -------------------------------------------
    def phi(self, u, t):
        F0, _, _ = self.red.obj.values(u)
        val = float(F0[0])
        if self.red.ineq.n_con:
            F, _, _ = self.red.ineq.values(u)
            if np.any(F >= 0):
                return np.inf
            val += float(np.sum(np.log(-1.0 / F))) / t
        return val

    def assemble(self, u, t):
        red = self.red
        F0, _, w0 = red.obj.values(u)
        g = np.asarray(red.obj.A.T @ w0).ravel()
        Gf0 = red.obj.Sfac @ _row_scale(red.obj.A, w0)
        H = (
            _row_scale(red.obj.A, np.sqrt(w0)).T @ _row_scale(red.obj.A, np.sqrt(w0))
            - Gf0.T @ Gf0
        )
        F = None
        if red.ineq.n_con:
            F, _, w = red.ineq.values(u)
            if np.any(F >= 0):
                raise FloatingPointError("assemble called at infeasible point")
            s = 1.0 / (-F)
            d1 = w * s[red.ineq.term_con] / t
            g = g + np.asarray(red.ineq.A.T @ (w * s[red.ineq.term_con])).ravel() / t
            B1 = _row_scale(red.ineq.A, np.sqrt(d1))
            Gf = red.ineq.Sfac @ _row_scale(red.ineq.A, w)
            B2 = _row_scale(Gf, np.sqrt(s[red.ineq.fac_con] / t))
            Gc = red.ineq.Scon @ Gf
            B3 = _row_scale(Gc, s / math.sqrt(t))
            H = H + B1.T @ B1 - B2.T @ B2 + B3.T @ B3
        phi = float(F0[0]) + (float(np.sum(np.log(-1.0 / F))) / t if F is not None else 0.0)
        return phi, g, np.asarray(H.todense())

    def center(self, u, t, gtol):
        """Damped Newton until the decrement is negligible. Returns (u, ||g||_inf)."""
        gnorm = np.inf
        for _ in range(_MAX_CENTER_STEPS):
            phi0, g, H = self.assemble(u, t)
            gnorm = float(np.max(np.abs(g))) if g.size else 0.0
            du = _chol_solve(H, -g)
            lam2 = float(-g @ du)
            if lam2 / 2.0 <= max(1e-13, min(1e-9, gtol * gtol)):
                break
            alpha = 1.0
            gd = float(g @ du)
            accepted = False
            for _ in range(60):
                cand = u + alpha * du
                val = self.phi(cand, t)
                if np.isfinite(val) and val <= phi0 + _LS_C1 * alpha * gd:
                    u = cand
                    accepted = True
                    break
                alpha *= _LS_BETA
            self.steps += 1
            if not accepted:
                break
        return u, gnorm

    # -- phase I ------------------------------------------------------------
    def phase1(self, u, budget):
        """Drive max_i F_i(u) strictly negative; raise _Infeasible if impossible."""
        red = self.red
        if red.ineq.n_con == 0:
            return u
        F, _, _ = red.ineq.values(u)
        if np.max(F) < -1e-9:
            return u
        tau = float(np.max(F)) + 1.0
        t = 1.0
        m = red.ineq.n_con
        for _stage in range(40):
            for _ in range(_MAX_CENTER_STEPS):
                F, _, w = red.ineq.values(u)
                maxF = float(np.max(F))
                if maxF <= -1e-4:
                    return u
                G = F - tau
                s = 1.0 / (-G)
                g_u = np.asarray(red.ineq.A.T @ (w * s[red.ineq.term_con])).ravel() / t
                g_tau = 1.0 - float(np.sum(s)) / t
                d1 = w * s[red.ineq.term_con] / t
                B1 = _row_scale(red.ineq.A, np.sqrt(d1))
                Gf = red.ineq.Sfac @ _row_scale(red.ineq.A, w)
                B2 = _row_scale(Gf, np.sqrt(s[red.ineq.fac_con] / t))
                Gc = red.ineq.Scon @ Gf
                B3 = _row_scale(Gc, s / math.sqrt(t))
                H_uu = np.asarray((B1.T @ B1 - B2.T @ B2 + B3.T @ B3).todense())
                gc_dense = np.asarray(Gc.todense())
                h_ut = -(gc_dense.T @ (s * s)) / t
                h_tt = float(np.sum(s * s)) / t
                nn = red.n_u
                Hx = np.zeros((nn + 1, nn + 1))
                Hx[:nn, :nn] = H_uu
                Hx[:nn, nn] = h_ut
                Hx[nn, :nn] = h_ut
                Hx[nn, nn] = h_tt
                gx = np.concatenate([g_u, [g_tau]])
                dx = _chol_solve(Hx, -gx)
                lam2 = float(-gx @ dx)
                phi0 = tau + float(np.sum(np.log(s))) / t
                if lam2 / 2.0 <= 1e-11:
                    break
                alpha = 1.0
                gd = float(gx @ dx)
                accepted = False
                for _ in range(60):
                    u_c = u + alpha * dx[:nn]
                    tau_c = tau + alpha * dx[nn]
                    Fc, _, _ = red.ineq.values(u_c)
                    if np.all(Fc - tau_c < 0):
                        val = tau_c + float(np.sum(np.log(1.0 / (tau_c - Fc)))) / t
                        if val <= phi0 + _LS_C1 * alpha * gd:
                            u, tau = u_c, tau_c
                            accepted = True
                            break
                    alpha *= _LS_BETA
                self.steps += 1
                if not accepted or self.steps > budget:
                    break
            F, _, _ = red.ineq.values(u)
            if float(np.max(F)) <= -1e-4:
                return u
            # duality bound: tau* >= tau - m/t
            if tau - m / t > -1e-9:
                raise _Infeasible("phase I: no strictly feasible point")
            if self.steps > budget:
                break
            t *= _MU
        F, _, _ = red.ineq.values(u)
        if float(np.max(F)) < 0:
            return u
        raise _Infeasible("phase I stalled before reaching the interior")


def _initial_u(red: _Reduced, compiled: CompiledGp, initial) -> np.ndarray:
    if initial is not None:
        z = compiled.z_from_x(initial) if isinstance(initial, dict) else np.asarray(initial, float)
        u = red.drop(z)
    else:
        u = np.zeros(red.n_u)
        both = np.isfinite(red.lb_u) & np.isfinite(red.ub_u)
        u[both] = 0.5 * (red.lb_u[both] + red.ub_u[both])
        lo_only = np.isfinite(red.lb_u) & ~both
        u[lo_only] = red.lb_u[lo_only] + 3.0
        hi_only = np.isfinite(red.ub_u) & ~both
        u[hi_only] = red.ub_u[hi_only] - 3.0
    # clamp strictly inside any box bounds
    span = red.ub_u - red.lb_u
    delta = np.where(np.isfinite(span), np.minimum(1e-3, 0.45 * span), 1e-3)
    lo = np.where(np.isfinite(red.lb_u), red.lb_u + delta, -np.inf)
    hi = np.where(np.isfinite(red.ub_u), red.ub_u - delta, np.inf)
    return np.clip(u, lo, hi)


def solve(
    problem: GpProblem,
    tol: float = 1e-8,
    max_iter: int = 200,
    initial: dict[str, float] | np.ndarray | None = None,
) -> GpSolution:
    """Solve a standard-form GP (with optional posynomial products).

    initial: warm-start point (positive variable values, or a log-domain
    vector); it does not need to be feasible.
    """
    compiled = log_transform(problem)
    try:
        red = _Reduced.build(compiled)
    except _Infeasible as exc:
        return GpSolution({}, math.nan, "infeasible", math.nan, 0, str(exc))

    bar = _Barrier(red)
    u = _initial_u(red, compiled, initial)
    try:
        u = bar.phase1(u, budget=max_iter)
    except _Infeasible as exc:
        z = red.lift(u)
        return GpSolution(
            compiled.x_from_z(z), math.nan, "infeasible", math.nan, bar.steps, str(exc)
        )

    m = red.ineq.n_con
    t = 100.0 if initial is not None else 1.0
    status = "max_iter"
    kkt = math.inf
    if m == 0:
        u, gnorm = bar.center(u, 1.0, tol)
        kkt = gnorm
        status = "optimal" if kkt <= tol else "max_iter"
    else:
        while bar.steps < max_iter:
            u, gnorm = bar.center(u, t, tol)
            kkt = max(gnorm, m / t)
            if kkt <= tol:
                status = "optimal"
                break
            t *= _MU
        else:
            pass

    z = red.lift(u)
    F_ineq = compiled.ineq_values(z)
    viol = float(max(0.0, np.max(F_ineq))) if F_ineq.size else 0.0
    eqres = compiled.eq_residuals(z)
    eqv = float(np.max(np.abs(eqres))) if eqres.size else 0.0
    kkt = max(kkt, viol, eqv)
    if status == "optimal" and kkt > tol:
        status = "max_iter"
    return GpSolution(
        x=compiled.x_from_z(z),
        objective_value=float(np.exp(compiled.objective_value(z))),
        status=status,
        kkt_residual=float(kkt),
        iterations=bar.steps,
        message="",
    )
