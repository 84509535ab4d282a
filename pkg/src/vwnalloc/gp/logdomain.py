"""Logarithmic change of variables z = log x.

Under z = log x a monomial c * prod x^a becomes the affine form
log c + a.z, a posynomial becomes log-sum-exp of affine forms, and a
product of posynomials becomes a *sum* of log-sum-exps (still smooth and
convex).  Monomial equalities become affine equalities.  All functions
here evaluate the transformed problem and its derivatives with stacked
CSR matrices so the barrier solver can assemble Newton systems in a few
vectorized operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .posynomial import GpProblem, as_factors


def _stack_terms(factors_per_con, var_index, n):
    """Stack [(label, [Posynomial, ...])] into CSR + segment pointers."""
    rows, cols, vals = [], [], []
    b = []
    fptr = [0]
    cptr = [0]
    t = 0
    f = 0
    for _, factors in factors_per_con:
        for posy in factors:
            for term in posy.terms:
                for v, a in term.exponents.items():
                    rows.append(t)
                    cols.append(var_index[v])
                    vals.append(a)
                b.append(math.log(term.coefficient))
                t += 1
            f += 1
            fptr.append(t)
        cptr.append(f)
    A = sp.csr_matrix(
        (np.array(vals), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(t, n),
    )
    return A, np.array(b), np.array(fptr, dtype=np.int64), np.array(cptr, dtype=np.int64)


def _segment_lse(y, ptr, rep):
    """Per-segment log-sum-exp and softmax weights (segments nonempty)."""
    mx = np.maximum.reduceat(y, ptr[:-1]) if len(y) else np.empty(0)
    e = np.exp(y - mx[rep])
    s = np.add.reduceat(e, ptr[:-1]) if len(y) else np.empty(0)
    return mx + np.log(s), e / s[rep]


def _row_scale(A: sp.csr_matrix, d: np.ndarray) -> sp.csr_matrix:
    data = A.data * np.repeat(d, np.diff(A.indptr))
    return sp.csr_matrix((data, A.indices, A.indptr), shape=A.shape)


def _aggregator(ptr: np.ndarray, ncols: int) -> sp.csr_matrix:
    """0/1 CSR summing contiguous segments: (len(ptr)-1) x ncols."""
    nseg = len(ptr) - 1
    data = np.ones(ptr[-1])
    indices = np.arange(ptr[-1], dtype=np.int64)
    return sp.csr_matrix((data, indices, ptr), shape=(nseg, ncols))


@dataclass
class _Stack:
    """One stacked group of log-sum-exp factors (objective or inequalities)."""

    A: sp.csr_matrix
    b: np.ndarray
    fptr: np.ndarray  # term segments per factor
    cptr: np.ndarray  # factor segments per constraint
    term_rep: np.ndarray  # term -> factor
    term_con: np.ndarray  # term -> constraint
    fac_con: np.ndarray  # factor -> constraint
    Sfac: sp.csr_matrix  # factor x term aggregation
    Scon: sp.csr_matrix  # constraint x factor aggregation

    @classmethod
    def build(cls, factors_per_con, var_index, n):
        A, b, fptr, cptr = _stack_terms(factors_per_con, var_index, n)
        term_rep = np.repeat(np.arange(len(fptr) - 1), np.diff(fptr))
        fac_con = np.repeat(np.arange(len(cptr) - 1), np.diff(cptr))
        term_con = fac_con[term_rep] if len(term_rep) else term_rep
        return cls(
            A=A,
            b=b,
            fptr=fptr,
            cptr=cptr,
            term_rep=term_rep,
            term_con=term_con,
            fac_con=fac_con,
            Sfac=_aggregator(fptr, A.shape[0]),
            Scon=_aggregator(cptr, len(fptr) - 1),
        )

    @property
    def n_con(self) -> int:
        return len(self.cptr) - 1

    def values(self, z: np.ndarray):
        """Constraint values F_i(z) plus per-term softmax weights."""
        y = self.A @ z + self.b
        lse, w = _segment_lse(y, self.fptr, self.term_rep)
        F = np.add.reduceat(lse, self.cptr[:-1]) if self.n_con else np.empty(0)
        return F, lse, w

    def con_gradients(self, w: np.ndarray) -> sp.csr_matrix:
        """Per-constraint gradient rows: sum of softmax-weighted exponent rows."""
        return self.Scon @ (self.Sfac @ _row_scale(self.A, w))


class CompiledGp:
    """A GpProblem compiled to the smooth convex log-domain form.

    Box bounds are folded into the inequality stack as affine rows; their
    log-domain bounds are also kept per variable so the solver can clamp
    warm starts strictly inside.
    """

    def __init__(self, problem: GpProblem):
        self.problem = problem
        self.var_names = list(problem.variables)
        self.n = len(self.var_names)
        self.var_index = {v: i for i, v in enumerate(self.var_names)}

        self.obj = _Stack.build([("obj", as_factors(problem.objective))], self.var_index, self.n)

        from .posynomial import Monomial, Posynomial

        ineq_items = [
            (label, as_factors(expr)) for label, expr in zip(problem.ineq_labels, problem.ineq)
        ]
        self.n_structural = len(ineq_items)
        self.lb_z = np.full(self.n, -np.inf)
        self.ub_z = np.full(self.n, np.inf)
        for v, lo in problem.lower.items():
            self.lb_z[self.var_index[v]] = math.log(lo)
            ineq_items.append((f"lb[{v}]", [Posynomial([Monomial(lo, {v: -1.0})])]))
        for v, hi in problem.upper.items():
            self.ub_z[self.var_index[v]] = math.log(hi)
            ineq_items.append((f"ub[{v}]", [Posynomial([Monomial(1.0 / hi, {v: 1.0})])]))
        self.ineq_labels = [label for label, _ in ineq_items]
        self.ineq = _Stack.build(ineq_items, self.var_index, self.n)

        # Monomial equalities: affine rows E z = d with d = -log c.
        rows, cols, vals, d = [], [], [], []
        for j, mono in enumerate(problem.eq):
            for v, a in mono.exponents.items():
                rows.append(j)
                cols.append(self.var_index[v])
                vals.append(a)
            d.append(-math.log(mono.coefficient))
        self.E = sp.csr_matrix(
            (np.array(vals), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
            shape=(len(problem.eq), self.n),
        )
        self.d = np.array(d)

    # -- point conversions ------------------------------------------------
    def z_from_x(self, x: dict[str, float]) -> np.ndarray:
        z = np.zeros(self.n)
        for v, val in x.items():
            if val <= 0:
                raise ValueError(f"variable {v} must be positive")
            z[self.var_index[v]] = math.log(val)
        return z

    def x_from_z(self, z: np.ndarray) -> dict[str, float]:
        return {v: float(np.exp(z[i])) for i, v in enumerate(self.var_names)}

    # -- evaluation API (log domain) --------------------------------------
    def objective_value(self, z: np.ndarray) -> float:
        """F0(z) = sum_j log f_j(exp z) over objective factors."""
        F, _, _ = self.obj.values(np.asarray(z, dtype=float))
        return float(F[0])

    def objective_grad(self, z: np.ndarray) -> np.ndarray:
        _, _, w = self.obj.values(np.asarray(z, dtype=float))
        return np.asarray((self.obj.A.T @ w)).ravel()

    def ineq_values(self, z: np.ndarray) -> np.ndarray:
        """F_i(z) = log f_i(exp z); feasible iff <= 0. Bounds included."""
        F, _, _ = self.ineq.values(np.asarray(z, dtype=float))
        return F

    def eq_residuals(self, z: np.ndarray) -> np.ndarray:
        """E z - d; zero iff every monomial equality holds."""
        if self.E.shape[0] == 0:
            return np.empty(0)
        return np.asarray(self.E @ np.asarray(z, dtype=float)).ravel() - self.d


def log_transform(problem: GpProblem) -> CompiledGp:
    """Compile a GP to its convex log-domain form."""
    return CompiledGp(problem)
