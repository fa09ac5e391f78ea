"""Homotopy-equivalence data and the secondary invariants attached to it:
the six-segment duality path S_f(t) on the sum complex, invertibility
certificates along it, and the projection families for the even case.

The path lives on A' + A with D = D' + D and duality diag(S', -S).  It
connects diag(S', -S) at t = 0 to its negative at t = 6 through five
junctions; every sampled point must keep D +- S_f(t) invertible.  A failure
is reported with its location t* rather than assumed away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .hpc_core import (DEFAULT_TOL, DomainError, DualityDegenerateError,
                       HPComplex, StructuralError, Tolerances, decode_matrix,
                       direct_sum, encode_matrix, hpcomplex_from_json,
                       hpcomplex_to_json, reverse_orientation, validate)
from .signature import LocalizationSchedule, localized_signature_path
from .spectral import NoSpectralGapError

JUNCTIONS = (1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True, eq=False)
class HomotopyEquivalence:
    """Chain maps f: A' -> A and g: A -> A' with chain homotopies.

    h lives on the target (1 - f g = d h + h d), h_prime on the source
    (1 - g f = d' h' + h' d').  The uniform control constant of the geometric
    picture is vacuous at finite dimension and is recorded as such by
    validate_homotopy_equivalence.
    """

    source: HPComplex
    target: HPComplex
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray

    def __post_init__(self):
        ns, nt = self.source.total_dim, self.target.total_dim
        shapes = {"f": (nt, ns), "g": (ns, nt), "h": (nt, nt), "h_prime": (ns, ns)}
        for name, want in shapes.items():
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape != want:
                raise StructuralError(f"{name}: expected shape {want}, got {m.shape}")
            object.__setattr__(self, name, m)
        if self.source.n != self.target.n:
            raise StructuralError("source and target must share the top degree")

    @property
    def n(self) -> int:
        return self.source.n

    def f_adjoint(self) -> np.ndarray:
        """Metric adjoint of f: target -> source."""
        gs, gt = self.source.space, self.target.space
        if not (gs.has_weights or gt.has_weights):
            return self.f.conj().T
        return np.linalg.inv(gs.g_total) @ self.f.conj().T @ gt.g_total


def identity_equivalence(c: HPComplex) -> HomotopyEquivalence:
    eye = np.eye(c.total_dim, dtype=complex)
    zero = np.zeros_like(eye)
    return HomotopyEquivalence(c, c, eye, eye.copy(), zero, zero.copy())


@dataclass(frozen=True)
class HEReport:
    """Residuals of the four chain-level identities."""

    chain_map_f: float
    chain_map_g: float
    homotopy_target: float
    homotopy_source: float
    threshold: float
    control_condition: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "chain_map_f": self.chain_map_f,
            "chain_map_g": self.chain_map_g,
            "homotopy_target": self.homotopy_target,
            "homotopy_source": self.homotopy_source,
            "threshold": self.threshold,
            "control_condition": self.control_condition,
            "passed": self.passed,
        }


def validate_homotopy_equivalence(he: HomotopyEquivalence,
                                  tol: Tolerances = DEFAULT_TOL) -> HEReport:
    ds = he.source.d_total
    dt = he.target.d_total
    eye_s = np.eye(he.source.total_dim)
    eye_t = np.eye(he.target.total_dim)
    r_f = spectral.operator_norm(he.f @ ds - dt @ he.f)
    r_g = spectral.operator_norm(he.g @ dt - ds @ he.g)
    r_ht = spectral.operator_norm(eye_t - he.f @ he.g - dt @ he.h - he.h @ dt)
    r_hs = spectral.operator_norm(eye_s - he.g @ he.f - ds @ he.h_prime - he.h_prime @ ds)
    scale = max(1.0, spectral.operator_norm(he.f), spectral.operator_norm(he.g),
                spectral.operator_norm(ds), spectral.operator_norm(dt))
    thr = tol.sym * scale * scale
    passed = all(r <= thr for r in (r_f, r_g, r_ht, r_hs))
    return HEReport(r_f, r_g, r_ht, r_hs, thr,
                    "finite-dimensional: homotopy tracks bounded, constant recorded as 0",
                    passed)


# ---------------------------------------------------------------------------
# the six-branch path (orthonormal coordinates)


class _PathData:
    """Precomputed orthonormal-coordinate operators for the path."""

    def __init__(self, he: HomotopyEquivalence):
        src, tgt = he.source, he.target
        self.ns = src.total_dim
        self.nt = tgt.total_dim
        self.Sp = src.S_on
        self.S = tgt.S_on
        f = np.asarray(he.f)
        if src.space.has_weights or tgt.space.has_weights:
            f = tgt.space.g_half @ f @ src.space.g_half_inv
        self.f = f
        self.fSf = f.conj().T @ self.S @ f
        self.fS = f.conj().T @ self.S        # target -> source block
        self.Sf = self.S @ f                 # source -> target block
        D = np.zeros((self.ns + self.nt, self.ns + self.nt), dtype=complex)
        D[:self.ns, :self.ns] = src.D_on
        D[self.ns:, self.ns:] = tgt.D_on
        self.D = D

    def assemble(self, a11, a12, a21, a22) -> np.ndarray:
        m = np.zeros((self.ns + self.nt, self.ns + self.nt), dtype=complex)
        if a11 is not None:
            m[:self.ns, :self.ns] = a11
        if a12 is not None:
            m[:self.ns, self.ns:] = a12
        if a21 is not None:
            m[self.ns:, :self.ns] = a21
        if a22 is not None:
            m[self.ns:, self.ns:] = a22
        return m

    def branch(self, k: int, t: float) -> np.ndarray:
        """Branch k in {0..5} evaluated at path time t (valid on its segment)."""
        if k == 0:
            return self.assemble((1 - t) * self.Sp + t * self.fSf, None, None, -self.S)
        if k == 1:
            th = np.pi / 2.0 * (t - 1.0)
            c, s = np.cos(th), np.sin(th)
            return self.assemble(c * self.fSf, s * self.fS, s * self.Sf, -c * self.S)
        if k in (2, 3):
            # phase half-turn over t in [2, 4]; the printed per-segment phases
            # are glued into the unique continuous rotation
            ph = np.exp(1j * np.pi * (t - 2.0) / 2.0)
            return self.assemble(None, ph * self.fS, np.conj(ph) * self.Sf, None)
        if k == 4:
            th = np.pi / 2.0 * (5.0 - t)
            c, s = np.cos(th), np.sin(th)
            return self.assemble(-c * self.fSf, -s * self.fS, -s * self.Sf, c * self.S)
        if k == 5:
            return self.assemble(-((t - 5.0) * self.Sp + (6.0 - t) * self.fSf),
                                 None, None, self.S)
        raise ValueError(f"branch index {k} out of range")

    def value(self, t: float) -> np.ndarray:
        k = min(int(np.floor(t)), 5)
        return self.branch(k, t)

    def diag_duality(self) -> np.ndarray:
        return self.assemble(self.Sp, None, None, -self.S)


def _min_singular(pd: _PathData, t: float) -> tuple[float, float]:
    sf = pd.value(t)
    sp = np.linalg.svd(pd.D + sf, compute_uv=False)
    sm = np.linalg.svd(pd.D - sf, compute_uv=False)
    return float(sp[-1]), float(sm[-1])


@dataclass(frozen=True, eq=False)
class RhoPath:
    """Sampled duality path with invertibility certificates.

    passed means: every sampled D +- S_f(t) clears the invertibility
    threshold, branch junctions agree, endpoints match diag(S', -S) and its
    negative, and every sample is self-adjoint.
    """

    times: tuple[float, ...]
    min_sv_plus: tuple[float, ...]
    min_sv_minus: tuple[float, ...]
    refined_times: tuple[float, ...]
    refined_min_sv: tuple[float, ...]
    junction_residual: float
    endpoint_residual: float
    selfadjoint_residual: float
    threshold: float
    min_singular: float
    passed: bool
    failed_at: float | None

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "min_sv_plus": list(self.min_sv_plus),
            "min_sv_minus": list(self.min_sv_minus),
            "refined_times": list(self.refined_times),
            "refined_min_sv": list(self.refined_min_sv),
            "junction_residual": self.junction_residual,
            "endpoint_residual": self.endpoint_residual,
            "selfadjoint_residual": self.selfadjoint_residual,
            "threshold": self.threshold,
            "min_singular": self.min_singular,
            "passed": self.passed,
            "failed_at": self.failed_at,
        }


def rho_path(he: HomotopyEquivalence, samples: int = 601,
             tol: Tolerances = DEFAULT_TOL, refine: bool = True) -> RhoPath:
    """Scan D +- S_f(t) over [0, 6] and certify invertibility throughout."""
    if samples < 7:
        raise DomainError("need at least 7 samples across the six branches")
    her = validate_homotopy_equivalence(he, tol)
    if not her.passed:
        raise StructuralError(f"homotopy-equivalence identities fail: {her.to_dict()}")
    for c in (he.source, he.target):
        rep = validate(c, tol)
        if not rep.passed:
            raise DualityDegenerateError("source/target complex fails validation")

    pd = _PathData(he)
    scale = max(1.0, spectral.operator_norm(pd.D) + spectral.operator_norm(pd.diag_duality()))
    threshold = tol.inv * scale

    times = np.linspace(0.0, 6.0, samples)
    svp, svm, sa = [], [], 0.0
    for t in times:
        sf = pd.value(float(t))
        sa = max(sa, spectral.operator_norm(sf - sf.conj().T))
        p, m = _min_singular(pd, float(t))
        svp.append(p)
        svm.append(m)
    mins = np.minimum(svp, svm)

    refined_t: list[float] = []
    refined_v: list[float] = []
    if refine and samples > 1:
        k = int(np.argmin(mins))
        t_star = float(times[k])
        v_star = float(mins[k])
        h = float(times[1] - times[0])
        while h > 1e-3:
            h /= 2.0
            for cand in (t_star - h, t_star + h):
                if 0.0 <= cand <= 6.0:
                    p, m = _min_singular(pd, cand)
                    v = min(p, m)
                    refined_t.append(cand)
                    refined_v.append(v)
                    if v < v_star:
                        v_star, t_star = v, cand
        min_all = min(float(mins.min()), v_star)
    else:
        min_all = float(mins.min())

    junction = 0.0
    for j, tj in enumerate(JUNCTIONS):
        left = pd.branch(j, tj)
        right = pd.branch(j + 1, tj)
        junction = max(junction, spectral.operator_norm(left - right))
    s_scale = max(1.0, spectral.operator_norm(pd.diag_duality()))
    endpoint = max(
        spectral.operator_norm(pd.value(0.0) - pd.diag_duality()),
        spectral.operator_norm(pd.value(6.0) + pd.diag_duality()))

    failed_at = None
    order = sorted(zip([*map(float, times), *refined_t],
                       [*map(float, mins), *refined_v]))
    for t, v in order:
        if v <= threshold:
            failed_at = t
            break
    passed = (failed_at is None and junction <= tol.sym * s_scale
              and endpoint <= tol.sym * s_scale and sa <= tol.sym * s_scale)
    return RhoPath(tuple(float(t) for t in times), tuple(map(float, svp)),
                   tuple(map(float, svm)), tuple(refined_t), tuple(refined_v),
                   float(junction), float(endpoint), float(sa), float(threshold),
                   float(min_all), passed, failed_at)


# ---------------------------------------------------------------------------
# parity certificates


def _sum_complex(he: HomotopyEquivalence) -> HPComplex:
    """A' + A with the duality diag(S', -S), as an honest complex."""
    return direct_sum(he.source, reverse_orientation(he.target))


def _even_indices_path(pd: _PathData, he: HomotopyEquivalence) -> np.ndarray:
    ev_s = he.source.even_indices
    ev_t = he.target.even_indices
    return np.concatenate([ev_s, pd.ns + ev_t])


@dataclass(frozen=True, eq=False)
class OddRhoCertificate:
    """Invertibility of (D+S)(D+S_f(t-1))^{-1} on even degrees, t in [1,7],
    continued by the localization schedule of the sum complex."""

    times: tuple[float, ...]
    min_singulars: tuple[float, ...]
    schedule: LocalizationSchedule
    threshold: float
    passed: bool
    failed_at: float | None

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "min_singulars": list(self.min_singulars),
            "schedule": self.schedule.to_dict(),
            "threshold": self.threshold,
            "passed": self.passed,
            "failed_at": self.failed_at,
        }


def rho_certificate_odd(he: HomotopyEquivalence, samples: int = 121,
                        t_max: float = 10.0, schedule_samples: int = 10,
                        tol: Tolerances = DEFAULT_TOL) -> OddRhoCertificate:
    if he.n % 2 != 1:
        raise DomainError("odd certificate needs odd top degree")
    path = rho_path(he, samples=samples, tol=tol)
    if not path.passed:
        raise DualityDegenerateError(
            f"duality path fails at t*={path.failed_at}: the map does not "
            "implement the duality")
    pd = _PathData(he)
    ev = _even_indices_path(pd, he)
    s_diag = pd.diag_duality()
    b_plus = pd.D + s_diag
    times = np.linspace(1.0, 7.0, samples)
    mins: list[float] = []
    scale = max(1.0, spectral.operator_norm(b_plus))
    threshold = tol.inv * scale
    failed_at = None
    for t in times:
        sf = pd.value(float(t) - 1.0)
        family = b_plus @ np.linalg.inv(pd.D + sf)
        u = family[np.ix_(ev, ev)]
        sv = float(np.linalg.svd(u, compute_uv=False)[-1])
        mins.append(sv)
        if failed_at is None and sv <= threshold:
            failed_at = float(t)
    schedule = localized_signature_path(_sum_complex(he), t_max, schedule_samples, tol)
    passed = failed_at is None and schedule.passed
    return OddRhoCertificate(tuple(map(float, times)), tuple(mins), schedule,
                             threshold, passed, failed_at)


@dataclass(frozen=True, eq=False)
class ThetaPair:
    """Projection families P+(D+S) and P+(D+S_f(t-1)) with rank bookkeeping."""

    times: tuple[float, ...]
    ranks_plus: tuple[int, ...]
    ranks_minus: tuple[int, ...]
    difference_norms: tuple[float, ...]
    schedule: LocalizationSchedule
    constant: bool
    equal: bool
    passed: bool
    failed_at: float | None

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "ranks_plus": list(self.ranks_plus),
            "ranks_minus": list(self.ranks_minus),
            "difference_norms": list(self.difference_norms),
            "schedule": self.schedule.to_dict(),
            "constant": self.constant,
            "equal": self.equal,
            "passed": self.passed,
            "failed_at": self.failed_at,
        }


def rho_certificate_even(he: HomotopyEquivalence, samples: int = 121,
                         t_max: float = 10.0, schedule_samples: int = 10,
                         tol: Tolerances = DEFAULT_TOL) -> ThetaPair:
    if he.n % 2 != 0:
        raise DomainError("even certificate needs even top degree")
    path = rho_path(he, samples=samples, tol=tol)
    if not path.passed:
        raise DualityDegenerateError(
            f"duality path fails at t*={path.failed_at}: the map does not "
            "implement the duality")
    pd = _PathData(he)
    s_diag = pd.diag_duality()
    theta_plus = spectral.positive_projection(pd.D + s_diag, tol.inv, tol.sym)
    rank_plus = int(np.round(np.trace(theta_plus).real))
    times = np.linspace(1.0, 7.0, samples)
    ranks_m: list[int] = []
    diffs: list[float] = []
    failed_at = None
    for t in times:
        sf = pd.value(float(t) - 1.0)
        try:
            theta_minus = spectral.positive_projection(pd.D + sf, tol.inv, tol.sym)
        except NoSpectralGapError as exc:
            raise DualityDegenerateError(
                f"eigenvalue crossing at sample t={float(t):.6g}: {exc}") from exc
        ranks_m.append(int(np.round(np.trace(theta_minus).real)))
        diffs.append(float(spectral.operator_norm(theta_plus - theta_minus)))
        if failed_at is None and ranks_m[-1] != ranks_m[0]:
            failed_at = float(t)
    schedule = localized_signature_path(_sum_complex(he), t_max, schedule_samples, tol)
    constant = len(set(ranks_m)) <= 1 and schedule.constant
    equal = all(r == rank_plus for r in ranks_m)
    if schedule.ranks:
        # the terminal segment continues both families as the +- projections
        equal = equal and all(rp == rank_plus and rm == rank_plus
                              for rp, rm in schedule.ranks)
    passed = constant and equal and failed_at is None and schedule.passed
    return ThetaPair(tuple(map(float, times)), tuple([rank_plus] * len(ranks_m)),
                     tuple(ranks_m), tuple(diffs), schedule, constant, equal,
                     passed, failed_at)


# ---------------------------------------------------------------------------
# JSON


def he_to_json(he: HomotopyEquivalence) -> dict:
    return {
        "source": hpcomplex_to_json(he.source),
        "target": hpcomplex_to_json(he.target),
        "f": encode_matrix(he.f),
        "g": encode_matrix(he.g),
        "h": encode_matrix(he.h),
        "h_prime": encode_matrix(he.h_prime),
    }


def he_from_json(doc) -> HomotopyEquivalence:
    try:
        source = hpcomplex_from_json(doc["source"])
        target = hpcomplex_from_json(doc["target"])
    except KeyError as exc:
        raise StructuralError(f"malformed homotopy-equivalence document: {exc}") from exc
    nt, ns = target.total_dim, source.total_dim
    return HomotopyEquivalence(
        source, target,
        decode_matrix(doc["f"], (nt, ns)),
        decode_matrix(doc["g"], (ns, nt)),
        decode_matrix(doc["h"], (nt, nt)),
        decode_matrix(doc["h_prime"], (ns, ns)),
    )
