"""Aggregate verification: every quantitative claim as a measured check.

run_all produces a VerificationReport whose checks cover the eigenvalue
claims (lambda_1 = n with the right multiplicity), the Takahashi identity,
coordinate orthogonality, the beta-sweep Rayleigh limit, Willmore and
volume values, the pointwise and integrated gradient identities, the Morse
index and the two-eigenvalue average bound, plus observed convergence
orders.  Reports serialize deterministically: two runs with the same
inputs and seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import canonical, trial
from .canonical import CanonicalSurface
from .eigen import (
    IndeterminateIndex,
    Spectrum,
    morse_index,
    observed_order,
    solve_lowest,
)
from .fem import (
    assemble,
    coordinate_gradient_identity,
    takahashi_residual,
    willmore_energy,
)
from .mesh import generate, mesh_stats
from .trial import TruncationParams, orthogonality_defect, sweep_beta

__all__ = [
    "Check",
    "VerificationReport",
    "CLAIMS",
    "run_all",
    "conjecture_check",
    "volume_bound_check",
    "convergence_table",
    "ConvergenceTable",
    "ConvergenceRow",
    "render_report",
    "report_csv",
    "write_report",
]

REPORT_VERSION = "EIGENMIN-REPORT 1"

DEFAULT_RESOLUTIONS = {"clifford": [16, 32, 64], "sphere": [2, 3, 4]}
DEFAULT_BETAS = [float(2 ** j) for j in range(11)]

# Claim text per check id.  Serves as the auditable coverage list: every
# check in a report carries one of these, and the tests assert the two
# reports together exercise every entry.
CLAIMS = {
    "C1-lambda1": "first nonzero Laplace eigenvalue of the Clifford torus equals 2",
    "C1-cluster": "the eigenvalue 2 of the Clifford torus has multiplicity 4",
    "C1-order": "discrete lambda_1 converges at second order on the torus",
    "C2-lambda1": "first nonzero Laplace eigenvalue of the equatorial 2-sphere equals 2",
    "C2-cluster": "the eigenvalue 2 of the 2-sphere has multiplicity 3",
    "C2-level2": "the second sphere eigenvalue level is 6 with multiplicity starting at index 4",
    "C2-order": "discrete lambda_1 converges at second order on the sphere",
    "C3-residual": "ambient coordinates satisfy Laplace(x_i) = -n x_i on a minimal surface",
    "C3-trend": "the discrete residual of Laplace(x_i) = -n x_i shrinks under refinement",
    "C4-mean-zero": "ambient coordinates integrate to zero over the surface",
    "C5-limit": "the Rayleigh quotient of u_beta tends to n as beta grows",
    "C5-sup-bound": "the truncation error obeys |u_beta - x_i| <= max|x_i|/beta",
    "C6-willmore": "the Willmore energy equals 2 pi^2 on the Clifford torus and 4 pi on the sphere",
    "C7-identity": "the tangential coordinate gradients satisfy sum_i |grad x_i|^2 = n pointwise",
    "C7-order": "the pointwise gradient identity deviation shrinks at second order",
    "C8-bound": "the surface volume is at least 4 pi^(n/2) / Gamma(n/2 + 1), with equality exactly for the equatorial sphere",
    "C8-odd-n": "for odd n the closed-form volume bound exceeds the sphere volume (informational)",
    "C9-index": "the Morse index is 5 for the Clifford torus and 1 for the equatorial sphere",
    "C9-combination": "the combination lambda_1 + |A|^2 + n is reported alongside the index convention",
    "C10-eigensum": "the average of the first two nonzero eigenvalues is at least 4 pi^2 / area, with equality for the Clifford torus",
    "C11-identity": "integration by parts gives integral |grad x_i|^2 = n integral x_i^2",
    "C11-order": "the integrated identity gap shrinks at second order",
    "area": "the mesh area converges to the closed-form surface area",
    "euler": "the mesh has the Euler characteristic of its surface",
}


@dataclass(frozen=True)
class Check:
    """One measured claim with its pass criterion.

    mode is one of 'relative' (|m - e| <= tol * max(|e|, 1)), 'absolute'
    (|m - e| <= tol), 'lower_bound' (m >= e - tol * max(|e|, 1)) or 'info'
    (always passes; recorded for the reader).
    """

    id: str
    description: str
    claim: str
    mode: str
    measured: float
    expected: float
    tolerance: float
    passed: bool


def make_check(check_id, description, measured, expected, tolerance,
               mode="relative", passed=None) -> Check:
    measured = float(measured)
    expected = float(expected)
    tolerance = float(tolerance)
    if passed is None:
        if mode == "relative":
            passed = abs(measured - expected) <= tolerance * max(abs(expected), 1.0)
        elif mode == "absolute":
            passed = abs(measured - expected) <= tolerance
        elif mode == "lower_bound":
            passed = measured >= expected - tolerance * max(abs(expected), 1.0)
        elif mode == "info":
            passed = True
        else:
            raise ValueError("unknown check mode %r" % mode)
    return Check(check_id, description, CLAIMS[check_id], mode,
                 measured, expected, tolerance, bool(passed))


@dataclass
class VerificationReport:
    surface: str
    resolutions: list
    betas: list
    tolerance_scale: float
    solver_tolerance: float
    seed: int
    checks: list
    overall_pass: bool
    wall_times: dict = field(default_factory=dict)


def conjecture_check(surface: CanonicalSurface, spectrum: Spectrum,
                     area: float, tol: float = 0.01) -> Check:
    """Average of the first two nonzero eigenvalues against 4 pi^2 / area.

    The bound is stated for embedded minimal surfaces of genus at least
    one, so the torus gets a hard equality check and the sphere result is
    recorded as informational.
    """
    if len(spectrum.eigenvalues) < 2:
        raise ValueError("need at least two nonzero eigenvalues")
    if not spectrum.deflated:
        raise ValueError("conjecture check expects a deflated spectrum")
    measured = float(np.mean(spectrum.eigenvalues[:2]))
    bound = 4.0 * math.pi ** 2 / area
    if surface.kind == "clifford":
        return make_check(
            "C10-eigensum",
            "(lambda_1 + lambda_2)/2 against 4 pi^2 / area; equality holds on the torus",
            measured, bound, tol, mode="relative",
        )
    return make_check(
        "C10-eigensum",
        "(lambda_1 + lambda_2)/2 = %.6g vs 4 pi^2 / area = %.6g; the bound is"
        " scoped to genus >= 1, so the sphere value is informational"
        % (measured, bound),
        measured, bound, tol, mode="info",
    )


def volume_bound_check(surface: CanonicalSurface, area: float,
                       tol: float = 0.01) -> Check:
    """Area against the closed-form volume lower bound.

    Passes when the bound holds within tolerance and the equality pattern
    matches the surface: equality exactly for the totally geodesic sphere,
    strict inequality otherwise.
    """
    bound = canonical.volume_lower_bound(surface.intrinsic_dim)
    holds = area >= bound * (1.0 - tol)
    equal = abs(area - bound) <= tol * bound
    should_be_equal = surface.kind == "sphere"
    consistent = equal == should_be_equal
    word = "attained" if equal else "strict"
    return make_check(
        "C8-bound",
        "area %.6g vs lower bound %.6g (%s); equality is expected exactly for"
        " the equatorial sphere" % (area, bound, word),
        area, bound, tol, mode="lower_bound",
        passed=bool(holds and consistent),
    )


@dataclass(frozen=True)
class ConvergenceRow:
    resolution: int
    error: float
    order: float | None


@dataclass(frozen=True)
class ConvergenceTable:
    quantity: str
    rows: list
    monotone: bool


_QUANTITIES = ("lambda1", "area", "willmore", "takahashi", "euler")


def convergence_table(surface: CanonicalSurface, resolutions, quantity: str,
                      tol: float = 1e-8, seed: int = 0) -> ConvergenceTable:
    """Error and observed order of one quantity across refinements.

    Orders are log error ratios scaled by the measured mesh-width ratio;
    errors at machine-precision level report an exact (infinite) order.
    """
    if quantity not in _QUANTITIES:
        raise ValueError("quantity must be one of %s" % (_QUANTITIES,))
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    n = surface.intrinsic_dim
    errors, widths = [], []
    for r in resolutions:
        m = generate(surface, r)
        ops = assemble(m)
        stats = mesh_stats(m)
        widths.append(stats.max_edge)
        if quantity == "lambda1":
            sp = solve_lowest(ops, 1, tol=tol, seed=seed)
            errors.append(abs(float(sp.eigenvalues[0]) - n))
        elif quantity == "area":
            errors.append(abs(stats.total_area - canonical.exact_area(surface)))
        elif quantity == "willmore":
            target = 2.0 * math.pi ** 2 if surface.kind == "clifford" else 4.0 * math.pi
            errors.append(abs(willmore_energy(m, ops) - target))
        elif quantity == "takahashi":
            worst = max(
                takahashi_residual(ops, m.vertices[:, i], n)
                for i in range(4)
            )
            errors.append(worst)
        else:  # euler
            target = 0 if surface.kind == "clifford" else 2
            errors.append(float(abs(stats.euler_char - target)))
    rows = [ConvergenceRow(resolutions[0], errors[0], None)]
    for j in range(1, len(errors)):
        rows.append(ConvergenceRow(
            resolutions[j], errors[j],
            observed_order(errors[j - 1:j + 1], widths[j - 1:j + 1]),
        ))
    monotone = all(e1 >= e2 - 1e-15 for e1, e2 in zip(errors, errors[1:]))
    return ConvergenceTable(quantity, rows, monotone)


class _SurfaceData:
    """Per-resolution memo so each mesh, operator pair and solve happens once."""

    def __init__(self, surface, solver_tol, seed):
        self.surface = surface
        self.solver_tol = solver_tol
        self.seed = seed
        self._mesh = {}
        self._ops = {}
        self._spectrum = {}

    def mesh(self, r):
        if r not in self._mesh:
            self._mesh[r] = generate(self.surface, r)
        return self._mesh[r]

    def ops(self, r):
        if r not in self._ops:
            self._ops[r] = assemble(self.mesh(r))
        return self._ops[r]

    def spectrum(self, r, k, deflate=True):
        key = (r, k, deflate)
        if key not in self._spectrum:
            self._spectrum[key] = solve_lowest(
                self.ops(r), k, tol=self.solver_tol,
                deflate_constants=deflate, seed=self.seed,
            )
        return self._spectrum[key]

    def coords(self, r):
        mesh = self.mesh(r)
        return [
            (i, mesh.vertices[:, i])
            for i in range(4)
            if float(np.abs(mesh.vertices[:, i]).max()) > 1e-12
        ]


def run_all(surface: CanonicalSurface, resolutions=None, betas=None,
            tol: float = 1.0, solver_tol: float = 1e-8,
            seed: int = 0) -> VerificationReport:
    """Run the full check set and return the report.

    ``tol`` scales every check tolerance (1.0 keeps the defaults; 0 makes
    every inexact check fail while leaving the report well-formed).
    ``solver_tol`` is the eigensolver residual certificate.  Individual
    check failures are recorded; infrastructure failures (assembly errors,
    solver non-convergence) propagate.
    """
    if resolutions is None:
        resolutions = DEFAULT_RESOLUTIONS[surface.kind]
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions")
    if betas is None:
        betas = list(DEFAULT_BETAS)
    betas = [float(b) for b in betas]
    n = surface.intrinsic_dim
    torus = surface.kind == "clifford"
    data = _SurfaceData(surface, solver_tol, seed)
    finest = resolutions[-1]
    checks = []
    wall = {}
    clock = time.perf_counter
    mark = clock()

    def add(check):
        # marginal cost accounting: each check is charged the time since
        # the previous one, so shared solves land on their first consumer
        nonlocal mark
        checks.append(check)
        now = clock()
        wall[check.id] = now - mark
        mark = now

    widths = [mesh_stats(data.mesh(r)).max_edge for r in resolutions]

    # --- eigenvalues: value, cluster, order -------------------------------
    prefix = "C1" if torus else "C2"
    cluster_target = 4 if torus else 3

    def eigen_checks():
        sp = data.spectrum(finest, 6)
        lam1 = float(sp.eigenvalues[0])
        add(make_check(
            "%s-lambda1" % prefix,
            "discrete lambda_1 at the finest resolution against the exact value n = %d" % n,
            lam1, float(n), 0.01 * tol,
        ))
        cluster = int(np.count_nonzero(np.abs(sp.eigenvalues - n) <= 0.01 * n))
        add(make_check(
            "%s-cluster" % prefix,
            "number of discrete eigenvalues within 1%% of the first exact level",
            cluster, cluster_target, 0.0, mode="absolute",
        ))
        if not torus:
            level2 = sp.eigenvalues[3:6]
            dev = float(np.max(np.abs(level2 / 6.0 - 1.0)))
            add(make_check(
                "C2-level2",
                "worst relative deviation of eigenvalues 4-6 from the exact level 6",
                dev, 0.0, 0.01 * tol, mode="absolute",
            ))
        errs = [abs(float(data.spectrum(r, 6).eigenvalues[0]) - n)
                for r in resolutions]
        add(make_check(
            "%s-order" % prefix,
            "observed convergence order of the lambda_1 error (second order expected;"
            " faster also passes)",
            observed_order(errs, widths), 2.0, 0.15 * tol, mode="lower_bound",
        ))

    eigen_checks()

    # --- Takahashi identity ----------------------------------------------
    def takahashi_checks():
        worst = [
            max(takahashi_residual(data.ops(r), vals, n)
                for _, vals in data.coords(r))
            for r in resolutions
        ]
        add(make_check(
            "C3-residual",
            "largest relative residual of S x_i = n M x_i over the coordinates"
            " at the finest resolution",
            worst[-1], 0.0, 0.05 * tol, mode="absolute",
        ))
        decreasing = all(a > b for a, b in zip(worst, worst[1:]))
        add(make_check(
            "C3-trend",
            "1 when the worst coordinate residual strictly decreases under"
            " refinement, else 0",
            1.0 if decreasing else 0.0, 1.0, 0.0, mode="absolute",
        ))

    takahashi_checks()

    # --- coordinate mean-zero ---------------------------------------------
    def mean_zero_check():
        ops = data.ops(finest)
        defect = max(
            orthogonality_defect(ops, vals) for _, vals in data.coords(finest)
        )
        add(make_check(
            "C4-mean-zero",
            "largest Cauchy-Schwarz-normalized defect |<1, x_i>_M| over the"
            " coordinates",
            defect, 0.0, 1e-10 * tol, mode="absolute",
        ))

    mean_zero_check()

    # --- beta sweep --------------------------------------------------------
    def sweep_checks():
        mesh = data.mesh(finest)
        ops = data.ops(finest)
        base_point = np.array([0.0, 0.0]) if torus else np.array([1.0, 0.0, 0.0, 0.0])
        base = TruncationParams(1, base_point, betas[0])
        records = sweep_beta(mesh, ops, base, betas)
        add(make_check(
            "C5-limit",
            "projected Rayleigh quotient of u_beta at beta = %g against n" % betas[-1],
            records[-1].rayleigh_projected, float(n), 0.005 * tol,
        ))
        sup_x = float(np.abs(mesh.vertices[:, 0]).max())
        excess = max(r.sup_error - sup_x / r.beta for r in records)
        add(make_check(
            "C5-sup-bound",
            "largest excess of sup|u_beta - x_1| over the exact bound"
            " max|x_1|/beta (clipped at zero)",
            max(excess, 0.0), 0.0, 1e-12, mode="absolute",
        ))

    sweep_checks()

    # --- Willmore energy ---------------------------------------------------
    def willmore_check():
        target = 2.0 * math.pi ** 2 if torus else 4.0 * math.pi
        value = willmore_energy(data.mesh(finest), data.ops(finest))
        add(make_check(
            "C6-willmore",
            "Willmore energy integral (1 + H^2) at the finest resolution",
            value, target, 0.02 * tol,
        ))

    willmore_check()

    # --- pointwise gradient identity ----------------------------------------
    def pointwise_checks():
        devs = [
            float(np.max(np.abs(coordinate_gradient_identity(data.mesh(r)) - n)) / n)
            for r in resolutions
        ]
        add(make_check(
            "C7-identity",
            "worst per-face relative deviation of sum_i |grad x_i|^2 from n",
            devs[-1], 0.0, 0.02 * tol, mode="absolute",
        ))
        order = observed_order(devs, widths)
        exact = math.isinf(order)
        add(make_check(
            "C7-order",
            "observed order of the per-face deviation"
            + ("; deviation is at machine precision on every mesh, reported"
               " as exact" if exact else " (second order expected)"),
            order, 2.0, 0.15 * tol, mode="lower_bound",
        ))

    pointwise_checks()

    # --- volume bound -------------------------------------------------------
    def volume_checks():
        area = mesh_stats(data.mesh(finest)).total_area
        add(volume_bound_check(surface, area, 0.01 * tol))
        vol_s1 = 2.0 * math.pi
        bound_1 = canonical.volume_lower_bound(1)
        add(make_check(
            "C8-odd-n",
            "odd-n spot check: Vol(S^1) = %.6g vs closed-form bound %.6g;"
            " the bound exceeds the volume, recorded as informational"
            % (vol_s1, bound_1),
            vol_s1, bound_1, 0.0, mode="info",
        ))
        exact_a = canonical.exact_area(surface)
        add(make_check(
            "area",
            "total mesh area at the finest resolution against the closed form",
            area, exact_a, 0.01 * tol,
        ))
        target_chi = 0 if torus else 2
        add(make_check(
            "euler",
            "Euler characteristic of the finest mesh",
            float(mesh_stats(data.mesh(finest)).euler_char), float(target_chi),
            0.0, mode="absolute",
        ))

    volume_checks()

    # --- Morse index ---------------------------------------------------------
    def index_checks():
        a_sq = canonical.second_fundamental_norm_sq(surface)
        potential = n + a_sq
        levels = [lam for lam, _ in canonical.exact_spectrum(surface, 6)]
        target = 5 if torus else 1
        try:
            idx = morse_index(data.ops(finest), potential, tol=solver_tol,
                              oracle_levels=levels, seed=seed)
            add(make_check(
                "C9-index",
                "eigenvalue count below the stability potential n + |A|^2 = %g"
                % potential,
                float(idx), float(target), 0.0, mode="absolute",
            ))
        except IndeterminateIndex as exc:
            add(make_check(
                "C9-index",
                "index could not be classified: %s" % exc,
                -1.0, float(target), 0.0, mode="absolute", passed=False,
            ))
        lam1 = float(data.spectrum(finest, 6).eigenvalues[0])
        add(make_check(
            "C9-combination",
            "alternative stability combination lambda_1 + |A|^2 + n"
            " (exact value 2n + |A|^2), reported alongside the index",
            lam1 + a_sq + n, 2.0 * n + a_sq, 0.0, mode="info",
        ))

    index_checks()

    # --- two-eigenvalue average ----------------------------------------------
    def conjecture_checks():
        area = mesh_stats(data.mesh(finest)).total_area
        add(conjecture_check(surface, data.spectrum(finest, 6), area, 0.01 * tol))

    conjecture_checks()

    # --- integrated identity ---------------------------------------------------
    def integrated_checks():
        gaps = []
        for r in resolutions:
            ops = data.ops(r)
            worst = 0.0
            for _, vals in data.coords(r):
                num = float(vals @ (ops.stiffness @ vals))
                den = float(n * (vals @ (ops.mass @ vals)))
                worst = max(worst, abs(num - den) / den)
            gaps.append(worst)
        add(make_check(
            "C11-identity",
            "largest relative gap in u' S u = n u' M u over the coordinates"
            " at the finest resolution",
            gaps[-1], 0.0, 0.01 * tol, mode="absolute",
        ))
        add(make_check(
            "C11-order",
            "observed order of the integrated identity gap (second order"
            " expected; faster also passes)",
            observed_order(gaps, widths), 2.0, 0.15 * tol, mode="lower_bound",
        ))

    integrated_checks()

    overall = all(c.passed for c in checks)
    return VerificationReport(
        surface=surface.kind,
        resolutions=resolutions,
        betas=betas,
        tolerance_scale=tol,
        solver_tolerance=solver_tol,
        seed=seed,
        checks=checks,
        overall_pass=overall,
        wall_times=wall,
    )


def _fmt(value) -> str:
    return repr(float(value))


def render_report(report: VerificationReport) -> str:
    """Versioned structured text, one block per check, byte-deterministic.

    Wall-clock times are intentionally not serialized; identical inputs
    must produce identical bytes.
    """
    out = io.StringIO()
    out.write(REPORT_VERSION + "\n")
    out.write("surface: %s\n" % report.surface)
    out.write("resolutions: %s\n" % " ".join(str(r) for r in report.resolutions))
    out.write("betas: %s\n" % " ".join("%g" % b for b in report.betas))
    out.write("tolerance-scale: %s\n" % _fmt(report.tolerance_scale))
    out.write("solver-tolerance: %s\n" % _fmt(report.solver_tolerance))
    out.write("seed: %d\n" % report.seed)
    out.write("checks: %d\n" % len(report.checks))
    out.write("overall: %s\n" % ("pass" if report.overall_pass else "fail"))
    for c in report.checks:
        out.write("\n")
        out.write("check: %s\n" % c.id)
        out.write("description: %s\n" % c.description)
        out.write("claim: %s\n" % c.claim)
        out.write("mode: %s\n" % c.mode)
        out.write("measured: %s\n" % _fmt(c.measured))
        out.write("expected: %s\n" % _fmt(c.expected))
        out.write("tolerance: %s\n" % _fmt(c.tolerance))
        out.write("passed: %s\n" % ("true" if c.passed else "false"))
    return out.getvalue()


def report_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "mode", "measured", "expected", "tolerance",
                     "passed", "description", "claim"])
    for c in report.checks:
        writer.writerow([c.id, c.mode, _fmt(c.measured), _fmt(c.expected),
                         _fmt(c.tolerance), "true" if c.passed else "false",
                         c.description, c.claim])
    return buf.getvalue()


def write_report(report: VerificationReport, path, csv_path=None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(render_report(report))
    if csv_path is not None:
        with open(csv_path, "w", encoding="ascii") as fh:
            fh.write(report_csv(report))
