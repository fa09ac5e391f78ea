"""Core data model: graded inner-product spaces carrying a differential and a
degree-reversing duality, plus the axiom checks that certify them.

A complex is "Poincaré" here exactly when both D+S and D-S are invertible,
where D = d + d* (the adjoint taken with respect to the stored inner
products) and S is the duality.  Two tiers are tracked: the strict tier
additionally has S^2 = 1 and SD = -DS; the weak tier only needs D+-S
invertible.  All values are immutable and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import spectral
from .spectral import InvertibilityCertificate, NoSpectralGapError, operator_norm

ADJOINT_CONVENTION = "d* = G_p^{-1} d^H G_{p+1} (metric adjoint of the coboundary)"


class StructuralError(ValueError):
    """Shapes, block patterns, or combinatorial invariants are violated."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class DualityDegenerateError(NoSpectralGapError):
    """D+S or D-S fails invertibility: the input is not a Poincaré complex."""


@dataclass(frozen=True)
class Tolerances:
    """Shared numeric thresholds.  sym and inv are relative to matrix norm;
    pd and chain are absolute; identity is relative, used by product witnesses."""

    sym: float = 1e-10
    inv: float = 1e-8
    pd: float = 1e-12
    chain: float = 1e-12
    identity: float = 1e-9

    def to_dict(self) -> dict:
        return {"sym": self.sym, "inv": self.inv, "pd": self.pd,
                "chain": self.chain, "identity": self.identity}


DEFAULT_TOL = Tolerances()


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _cmat(a, rows: int, cols: int, what: str) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.shape != (rows, cols):
        raise StructuralError(f"{what}: expected shape {(rows, cols)}, got {m.shape}")
    return _freeze(m)


@dataclass(frozen=True, eq=False)
class GradedSpace:
    """Degrees 0..n with per-degree dimensions and Hermitian positive-definite
    inner products (None means the identity)."""

    n: int
    dims: tuple[int, ...]
    inner: tuple[np.ndarray | None, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 0:
            raise StructuralError("top degree must be nonnegative")
        if len(self.dims) != self.n + 1:
            raise StructuralError(
                f"need {self.n + 1} dimensions for degrees 0..{self.n}, got {len(self.dims)}")
        if any(d < 0 for d in self.dims):
            raise StructuralError("dimensions must be nonnegative")
        if sum(self.dims) <= 0:
            raise StructuralError("total dimension must be positive")
        inner = self.inner
        if inner is None:
            inner = tuple(None for _ in self.dims)
        if len(inner) != self.n + 1:
            raise StructuralError("need one inner product per degree")
        fixed = []
        for p, g in enumerate(inner):
            if g is None:
                fixed.append(None)
                continue
            gm = _cmat(g, self.dims[p], self.dims[p], f"G_{p}")
            fixed.append(gm)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "inner", tuple(fixed))

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for d in self.dims:
            out.append(out[-1] + d)
        return tuple(out)

    def degree_slice(self, p: int) -> slice:
        return slice(self.offsets[p], self.offsets[p + 1])

    @cached_property
    def degree_of_index(self) -> np.ndarray:
        out = np.zeros(self.total_dim, dtype=int)
        for p in range(self.n + 1):
            out[self.degree_slice(p)] = p
        return _freeze(out)

    @cached_property
    def parity(self) -> np.ndarray:
        """Diagonal of the even-odd grading operator: (-1)^p per index."""
        return _freeze(np.where(self.degree_of_index % 2 == 0, 1.0, -1.0))

    @cached_property
    def even_indices(self) -> np.ndarray:
        return _freeze(np.flatnonzero(self.degree_of_index % 2 == 0))

    def g_block(self, p: int) -> np.ndarray:
        g = self.inner[p]
        if g is None:
            return np.eye(self.dims[p], dtype=complex)
        return np.asarray(g)

    @property
    def has_weights(self) -> bool:
        return any(g is not None for g in self.inner)

    @cached_property
    def g_total(self) -> np.ndarray:
        if not self.has_weights:
            return _freeze(np.eye(self.total_dim, dtype=complex))
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for p in range(self.n + 1):
            out[self.degree_slice(p), self.degree_slice(p)] = self.g_block(p)
        return _freeze(out)

    @cached_property
    def _g_roots(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_weights:
            eye = np.eye(self.total_dim, dtype=complex)
            return _freeze(eye), _freeze(eye.copy())
        half = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        halfinv = np.zeros_like(half)
        for p in range(self.n + 1):
            g = self.g_block(p)
            if g.size == 0:
                continue
            es = spectral.eig_hermitian(g)
            vals = es.eigenvalues
            if vals.size and vals.min() <= 0:
                raise StructuralError(f"G_{p} is not positive definite")
            sq = (es.vectors * np.sqrt(vals)) @ es.vectors.conj().T
            sqi = (es.vectors / np.sqrt(vals)) @ es.vectors.conj().T
            half[self.degree_slice(p), self.degree_slice(p)] = sq
            halfinv[self.degree_slice(p), self.degree_slice(p)] = sqi
        return _freeze(half), _freeze(halfinv)

    @property
    def g_half(self) -> np.ndarray:
        return self._g_roots[0]

    @property
    def g_half_inv(self) -> np.ndarray:
        return self._g_roots[1]

    def check_inner_products(self, tol: Tolerances = DEFAULT_TOL) -> None:
        """Raise StructuralError unless every G_p is Hermitian positive definite."""
        for p in range(self.n + 1):
            g = self.inner[p]
            if g is None or g.size == 0:
                continue
            scale = operator_norm(g)
            if operator_norm(g - g.conj().T) > tol.sym * max(scale, 1.0):
                raise StructuralError(f"inner product G_{p} is not Hermitian")
            mineig = float(np.linalg.eigvalsh(np.asarray(g)).min())
            if mineig <= tol.pd:
                raise StructuralError(
                    f"inner product G_{p} is not positive definite (min eig {mineig:.3e})")


@dataclass(frozen=True, eq=False)
class HPComplex:
    """Graded space + differential blocks d_p: degree p -> p+1 + duality S.

    S is a matrix on the total space whose only allowed blocks map degree p to
    degree n-p.  S may be None for bare cochain complexes that have not been
    given a duality yet.  meta records provenance notes such as which duality
    construction produced S.
    """

    space: GradedSpace
    d: tuple[np.ndarray, ...]
    S: np.ndarray | None
    tier: str = "weak"
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        sp = self.space
        if self.tier not in ("strict", "weak"):
            raise StructuralError(f"unknown tier {self.tier!r}")
        if len(self.d) != sp.n:
            raise StructuralError(f"need {sp.n} differentials, got {len(self.d)}")
        blocks = []
        for p, dp in enumerate(self.d):
            blocks.append(_cmat(dp, sp.dims[p + 1], sp.dims[p], f"d_{p}"))
        object.__setattr__(self, "d", tuple(blocks))
        if self.S is not None:
            object.__setattr__(
                self, "S", _cmat(self.S, sp.total_dim, sp.total_dim, "S"))
        object.__setattr__(self, "meta", dict(self.meta))

    # -- derived operators (original coordinates) --

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def total_dim(self) -> int:
        return self.space.total_dim

    @cached_property
    def d_total(self) -> np.ndarray:
        sp = self.space
        out = np.zeros((sp.total_dim, sp.total_dim), dtype=complex)
        for p, dp in enumerate(self.d):
            out[sp.degree_slice(p + 1), sp.degree_slice(p)] = dp
        return _freeze(out)

    def adjoint(self, a: np.ndarray) -> np.ndarray:
        """Metric adjoint G^{-1} A^H G on the total space."""
        sp = self.space
        if not sp.has_weights:
            return a.conj().T
        ghalf_inv = sp.g_half_inv
        ghalf = sp.g_half
        on = ghalf @ a @ ghalf_inv
        return ghalf_inv @ on.conj().T @ ghalf

    @cached_property
    def d_star_total(self) -> np.ndarray:
        return _freeze(self.adjoint(self.d_total))

    @cached_property
    def D(self) -> np.ndarray:
        return _freeze(self.d_total + self.d_star_total)

    def to_orthonormal(self, a: np.ndarray) -> np.ndarray:
        """Conjugate an operator into G-orthonormal coordinates."""
        sp = self.space
        if not sp.has_weights:
            return a
        return sp.g_half @ a @ sp.g_half_inv

    @cached_property
    def D_on(self) -> np.ndarray:
        return _freeze(self.to_orthonormal(self.D))

    @cached_property
    def S_on(self) -> np.ndarray:
        if self.S is None:
            raise StructuralError("complex carries no duality operator")
        return _freeze(self.to_orthonormal(self.S))

    def b_plus_on(self) -> np.ndarray:
        return self.D_on + self.S_on

    def b_minus_on(self) -> np.ndarray:
        return self.D_on - self.S_on

    @property
    def even_indices(self) -> np.ndarray:
        return self.space.even_indices

    def duality_block_mask(self) -> np.ndarray:
        """Boolean mask of entries allowed by the degree-reversal pattern."""
        sp = self.space
        mask = np.zeros((sp.total_dim, sp.total_dim), dtype=bool)
        for p in range(sp.n + 1):
            mask[sp.degree_slice(sp.n - p), sp.degree_slice(p)] = True
        return mask

    def map_degrees(self, fn) -> np.ndarray:
        """Diagonal operator acting as the scalar fn(p) on degree p."""
        sp = self.space
        diag = np.array([complex(fn(p)) for p in sp.degree_of_index])
        return np.diag(diag)


# ---------------------------------------------------------------------------
# axiom validation


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual,
                "threshold": self.threshold, "passed": self.passed}


@dataclass(frozen=True)
class AxiomReport:
    """Deterministic record of every axiom check on one complex.

    The strict-tier residuals are always recorded, even for weak-declared
    complexes where they do not gate the verdict."""

    checks: tuple[CheckResult, ...]
    cert_plus: InvertibilityCertificate
    cert_minus: InvertibilityCertificate
    tier_declared: str
    tier_achieved: str
    poincare: bool
    passed: bool
    strict_s_squared_residual: float = 0.0
    strict_anticommute_residual: float = 0.0
    adjoint_convention: str = ADJOINT_CONVENTION

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "min_singular": [self.cert_plus.min_singular, self.cert_minus.min_singular],
            "cert_plus": self.cert_plus.to_dict(),
            "cert_minus": self.cert_minus.to_dict(),
            "tier_declared": self.tier_declared,
            "tier_achieved": self.tier_achieved,
            "poincare": self.poincare,
            "passed": self.passed,
            "strict_s_squared_residual": self.strict_s_squared_residual,
            "strict_anticommute_residual": self.strict_anticommute_residual,
            "adjoint_convention": self.adjoint_convention,
        }


def validate(c: HPComplex, tol: Tolerances = DEFAULT_TOL) -> AxiomReport:
    """Run every axiom check and certify invertibility of D+-S.

    The complex passes iff d^2 = 0, S is self-adjoint with the right block
    pattern, the declared tier's extra identities hold, and both D+S and D-S
    are invertible.
    """
    c.space.check_inner_products(tol)
    if c.S is None:
        raise StructuralError("cannot validate a complex without a duality operator")

    checks: list[CheckResult] = []

    dt = c.d_total
    resid_d2 = float(np.abs(dt @ dt).max()) if dt.size else 0.0
    checks.append(CheckResult("d_squared_zero", resid_d2, tol.chain, resid_d2 <= tol.chain))

    s_on = c.S_on
    s_scale = max(operator_norm(s_on), 1.0)
    resid_sa = operator_norm(s_on - s_on.conj().T)
    checks.append(CheckResult("S_self_adjoint", resid_sa, tol.sym * s_scale,
                              resid_sa <= tol.sym * s_scale))

    mask = c.duality_block_mask()
    off = np.where(mask, 0.0, np.abs(np.asarray(c.S)))
    resid_block = float(off.max()) if off.size else 0.0
    checks.append(CheckResult("S_degree_reversing", resid_block, tol.sym * s_scale,
                              resid_block <= tol.sym * s_scale))

    d_on = c.to_orthonormal(c.d_total)
    D_on = c.D_on
    strict_ok = True
    resid_s2 = operator_norm(s_on @ s_on - np.eye(c.total_dim))
    thr_s2 = tol.sym * max(1.0, operator_norm(s_on) ** 2)
    resid_anti = operator_norm(s_on @ D_on + D_on @ s_on)
    thr_anti = tol.sym * max(1.0, operator_norm(s_on) * max(operator_norm(D_on), 1.0))
    if c.tier == "strict":
        checks.append(CheckResult("strict_S_squared", resid_s2, thr_s2, resid_s2 <= thr_s2))
        checks.append(CheckResult("strict_anticommute", resid_anti, thr_anti,
                                  resid_anti <= thr_anti))
        strict_ok = resid_s2 <= thr_s2 and resid_anti <= thr_anti

    cert_plus = spectral.invertibility_certificate(D_on + s_on, tol.inv)
    cert_minus = spectral.invertibility_certificate(D_on - s_on, tol.inv)
    poincare = cert_plus.passed and cert_minus.passed
    checks.append(CheckResult("poincare_plus", -cert_plus.min_singular,
                              -cert_plus.threshold, cert_plus.passed))
    checks.append(CheckResult("poincare_minus", -cert_minus.min_singular,
                              -cert_minus.threshold, cert_minus.passed))

    base_ok = all(ch.passed for ch in checks)
    achieved = "weak"
    if resid_s2 <= thr_s2 and resid_anti <= thr_anti:
        achieved = "strict"
    passed = base_ok and (c.tier != "strict" or strict_ok)
    return AxiomReport(tuple(checks), cert_plus, cert_minus,
                       c.tier, achieved, poincare, passed,
                       float(resid_s2), float(resid_anti))


# ---------------------------------------------------------------------------
# constructors / operations


def direct_sum(a: HPComplex, b: HPComplex) -> HPComplex:
    """Block-diagonal sum; requires equal top degree."""
    if a.n != b.n:
        raise StructuralError(f"top degrees differ: {a.n} vs {b.n}")
    n = a.n
    dims = tuple(da + db for da, db in zip(a.space.dims, b.space.dims))
    inner = []
    for p in range(n + 1):
        ga, gb = a.space.inner[p], b.space.inner[p]
        if ga is None and gb is None:
            inner.append(None)
        else:
            g = np.zeros((dims[p], dims[p]), dtype=complex)
            g[:a.space.dims[p], :a.space.dims[p]] = a.space.g_block(p)
            g[a.space.dims[p]:, a.space.dims[p]:] = b.space.g_block(p)
            inner.append(g)
    space = GradedSpace(n, dims, tuple(inner))
    ds = []
    for p in range(n):
        blk = np.zeros((dims[p + 1], dims[p]), dtype=complex)
        blk[:a.space.dims[p + 1], :a.space.dims[p]] = a.d[p]
        blk[a.space.dims[p + 1]:, a.space.dims[p]:] = b.d[p]
        ds.append(blk)
    S = None
    if a.S is not None and b.S is not None:
        S = np.zeros((space.total_dim, space.total_dim), dtype=complex)
        for p in range(n + 1):
            q = n - p
            SA = np.asarray(a.S)[a.space.degree_slice(q), a.space.degree_slice(p)]
            SB = np.asarray(b.S)[b.space.degree_slice(q), b.space.degree_slice(p)]
            r = space.offsets[q]
            cc = space.offsets[p]
            S[r:r + SA.shape[0], cc:cc + SA.shape[1]] = SA
            S[r + SA.shape[0]:r + dims[q], cc + SA.shape[1]:cc + dims[p]] = SB
    tier = "strict" if a.tier == b.tier == "strict" else "weak"
    return HPComplex(space, tuple(ds), S, tier)


def rescale_inner_products(c: HPComplex, lam: float) -> HPComplex:
    """Scale G_p by lam^(n/2 - p) and rebuild S so it stays self-adjoint.

    The differential is unchanged, the signature is unchanged, and the
    nonzero eigenvalues of D scale by lam^(-1/2).  S picks up the factor
    lam^(n/2 - p) on its degree-p block, which keeps G'S' = GS exactly.
    """
    if not lam > 0:
        raise DomainError(f"scale factor must be positive, got {lam}")
    sp = c.space
    n = sp.n
    if lam == 1.0:
        return c
    weights = [lam ** (n / 2.0 - p) for p in range(n + 1)]
    inner = []
    for p in range(n + 1):
        g = sp.g_block(p) * weights[p]
        inner.append(g)
    space = GradedSpace(n, sp.dims, tuple(inner))
    S = None
    if c.S is not None:
        S = np.array(c.S, dtype=complex)
        for p in range(n + 1):
            S[:, sp.degree_slice(p)] = S[:, sp.degree_slice(p)] * weights[p]
    return HPComplex(space, c.d, S, c.tier, dict(c.meta))


def reverse_orientation(c: HPComplex) -> HPComplex:
    """Flip the duality sign; negates the even-dimensional signature."""
    if c.S is None:
        raise StructuralError("complex carries no duality operator")
    return HPComplex(c.space, c.d, -np.asarray(c.S), c.tier, dict(c.meta))


def complex_betti(c: HPComplex) -> tuple[int, ...]:
    """Betti numbers of the underlying complex (float ranks; fixtures have
    integer-valued differentials so the rank decisions are safe)."""
    ranks = [int(np.linalg.matrix_rank(dp)) if dp.size else 0 for dp in c.d]
    out = []
    for p in range(c.n + 1):
        rk_out = ranks[p] if p < len(ranks) else 0
        rk_in = ranks[p - 1] if p >= 1 else 0
        out.append(c.space.dims[p] - rk_out - rk_in)
    return tuple(out)


# ---------------------------------------------------------------------------
# JSON encoding (matrices row-major, complex entries as [re, im])


def encode_matrix(a: np.ndarray) -> list:
    m = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(rows: Sequence, shape: tuple[int, int] | None = None) -> np.ndarray:
    out = np.array([[complex(e[0], e[1]) for e in row] for row in rows], dtype=complex)
    if out.size == 0 and shape is not None:
        out = out.reshape(shape)
    return out


def hpcomplex_to_json(c: HPComplex) -> dict:
    doc = {
        "n": c.n,
        "dims": list(c.space.dims),
        "d": [encode_matrix(dp) for dp in c.d],
        "S": encode_matrix(c.S) if c.S is not None else None,
        "tier": c.tier,
    }
    if c.space.has_weights:
        doc["G"] = [encode_matrix(c.space.g_block(p)) for p in range(c.n + 1)]
    if c.meta:
        doc["meta"] = dict(sorted(c.meta.items()))
    return doc


def hpcomplex_from_json(doc: Mapping) -> HPComplex:
    try:
        n = int(doc["n"])
        dims = tuple(int(x) for x in doc["dims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed complex document: {exc}") from exc
    inner = None
    if doc.get("G") is not None:
        inner = tuple(decode_matrix(g, (dims[p], dims[p]))
                      for p, g in enumerate(doc["G"]))
    space = GradedSpace(n, dims, inner)
    ds = [decode_matrix(dp, (dims[p + 1], dims[p])) for p, dp in enumerate(doc.get("d", []))]
    if len(ds) != n:
        raise StructuralError(f"need {n} differentials, got {len(ds)}")
    S = None
    if doc.get("S") is not None:
        S = decode_matrix(doc["S"], (space.total_dim, space.total_dim))
    tier = doc.get("tier", "weak")
    meta = doc.get("meta", {})
    return HPComplex(space, tuple(ds), S, tier, meta)
