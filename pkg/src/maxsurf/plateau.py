"""Variational solvers for the finite, asymptotic and flat area-maximization
problems.

The finite solver drives the fiber values of a graph surface by projected
area ascent (the first variation makes the area gradient an ascent
direction whose zeros are exactly the discrete stationary surfaces), with a
spacelikeness-guarded monotone line search, warm-started continuation from
the totally geodesic configuration, and a matrix-free Newton finish.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import kernels, sphere
from .ambient import AmbientSpace, PointedPlane, psi, psi_inv
from .loops import (
    FiniteCurve,
    LoopError,
    LoopKind,
    classify_loop,
    exhaustion_curve,
    interior_point,
    strongly_positive_check,
)
from .meshing import DiskMesh, MeshError, locate_points, structured_polar_mesh
from .surfaces import (
    SPACELIKE_GUARD,
    DiscreteSurface,
    SurfaceError,
    warp_factors,
)


class SolveError(RuntimeError):
    def __init__(self, message, stage_t=None):
        super().__init__(message)
        self.stage_t = stage_t


@dataclass(frozen=True)
class SolverOptions:
    tol_h: float = 1e-8          # residual tolerance (mean-curvature max norm)
    stage_tol: float = 1e-6      # looser tolerance for intermediate stages
    max_iterations: int = 50_000
    dt_init: float = 0.25        # continuity step control
    dt_floor: float = 1e-4
    guard_margin: float = SPACELIKE_GUARD
    endgame: bool = True         # Newton finish after the ascent phase
    newton_trigger: float = 0.3
    newton_max_outer: int = 60
    cg_iters: int = 400
    ascent_iters_per_stage: int = 4000


@dataclass(frozen=True)
class MeshOptions:
    n_rings: int = 10
    grading: str = "sin"


@dataclass
class SolveReport:
    iterations: int = 0
    final_residual: float = np.inf
    area_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    margin_trace: list = field(default_factory=list)
    continuity_ts: list = field(default_factory=list)
    stage_breaks: list = field(default_factory=list)  # trace index per stage
    wall_time: float = 0.0

    def as_dict(self, include_wall_time=False):
        out = {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "area_trace": list(self.area_trace),
            "residual_trace": list(self.residual_trace),
            "margin_trace": list(self.margin_trace),
            "continuity_ts": list(self.continuity_ts),
            "stage_breaks": list(self.stage_breaks),
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data for a graph solve: boundary parameter polygon and the
    sphere values above it."""

    space: AmbientSpace
    frame: PointedPlane
    params_uv: np.ndarray
    fiber: np.ndarray

    def __post_init__(self):
        uv = np.asarray(self.params_uv, dtype=float)
        f = np.asarray(self.fiber, dtype=float)
        if uv.ndim != 2 or uv.shape[1] != 2:
            raise ValueError("params_uv must be (m, 2)")
        if f.shape != (uv.shape[0], self.space.n + 1):
            raise ValueError("fiber shape mismatch")
        if np.any((uv * uv).sum(axis=1) >= 1.0):
            raise ValueError("boundary parameters must lie in the open unit disk")
        norms = np.linalg.norm(f, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("boundary fiber values must be unit vectors")
        object.__setattr__(self, "params_uv", uv)
        object.__setattr__(self, "fiber", f)

    @property
    def m(self):
        return self.params_uv.shape[0]

    def curve(self):
        return FiniteCurve(self.space, psi(self.frame, self.params_uv, self.fiber))

    def check_strongly_positive(self):
        report = strongly_positive_check(self.curve())
        if not report.ok:
            raise LoopError(f"boundary curve is not strongly positive: {report}")
        return report


def circle_boundary(space, frame=None, radius=0.6, m=64, fiber_fn=None):
    """Boundary circle of the given warped radius, with optional angular
    fiber profile (defaults to the frame's basepoint: a planar circle)."""
    if frame is None:
        frame = PointedPlane.standard(space)
    th = 2 * np.pi * np.arange(m) / m
    uv = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    if fiber_fn is None:
        fiber = np.tile(frame.fiber_basepoint, (m, 1))
    else:
        fiber = np.array([fiber_fn(t) for t in th])
    return BoundaryData(space, frame, uv, fiber)


def contracted_fiber(values, center, s):
    """Radial sphere contraction toward ``center`` by parameter s in [0,1];
    s = 0 returns the input bit-for-bit."""
    if s == 0.0:
        return values.copy()
    mixed = (1.0 - s) * values + s * center
    norms = np.linalg.norm(mixed, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise SolveError("contraction hit an antipodal degeneracy")
    return mixed / norms


def contraction_inverse(values, center, s):
    """Inverse of contracted_fiber at parameter s < 1: recover w from
    y = ((1-s) w + s c)/r by solving |r y - s c| = 1 - s for r."""
    if s == 0.0:
        return values.copy()
    if s >= 1.0 - 1e-12:
        raise ValueError("contraction is not invertible at s = 1")
    yc = values @ center
    disc = s * s * yc * yc + (1.0 - s) ** 2 - s * s
    if np.any(disc < 0):
        raise ValueError("point outside the contraction's range")
    r = s * yc + np.sqrt(disc)
    w = (r[:, None] * values - s * center) / (1.0 - s)
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def continuity_path(boundary, t):
    """Boundary data of the warped-contraction isotopy at time t in [0,1]:
    t = 0 is the planar curve at the frame basepoint, t = 1 the input."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must be in [0, 1]")
    v = boundary.frame.fiber_basepoint
    fiber = contracted_fiber(boundary.fiber, v, 1.0 - t)
    return replace(boundary, fiber=fiber)


class _Kinematics:
    """Positions / area / gradient / residual evaluations for a fixed mesh,
    frame and scale, as plain-array operations for the solver loop."""

    def __init__(self, space, mesh, frame, scale):
        self.space = space
        self.mesh = mesh
        self.frame = frame
        self.scale = scale
        self.flat = scale == 0.0
        self.tris = mesh.triangles
        self.interior_mask = ~mesh.is_boundary
        if not self.flat:
            a, b = warp_factors(mesh.params)
            self.b = b
            self.upart = (a[:, None] * mesh.params) @ frame.u_basis
            self.wmat = frame.w_basis
        self.inv_scale = 1.0 if self.flat else 1.0 / scale

    def positions(self, fiber):
        if self.flat:
            return np.hstack([self.mesh.params, fiber])
        return self.upart + (self.b[:, None] * fiber) @ self.wmat

    def retract(self, fiber):
        if self.flat:
            return fiber
        return fiber / np.linalg.norm(fiber, axis=1, keepdims=True)

    def project_tangent(self, fiber, vectors):
        if self.flat:
            return vectors
        return vectors - (vectors * fiber).sum(axis=1)[:, None] * fiber

    def evaluate(self, fiber):
        """(area, tangent gradient with boundary zeroed, residual max-norm,
        spacelike guard)."""
        pos = self.positions(fiber)
        area_q, grad_q, guard = kernels.tri_area_grad(pos, self.tris)
        area = self.inv_scale * area_q
        if self.flat:
            g = self.inv_scale * grad_q[:, 2:]
        else:
            g = self.b[:, None] * (grad_q @ self.wmat.T) * self.inv_scale
            g = self.project_tangent(fiber, g)
        g[self.mesh.is_boundary] = 0.0
        if guard <= 0:
            return area, g, np.inf, guard
        g11, g12, g22 = kernels.tri_grams(pos, self.tris)
        tri_areas = 0.5 * np.sqrt(np.maximum(g11 * g22 - g12 * g12, 0.0)) * self.inv_scale
        dual = np.zeros(len(fiber))
        np.add.at(dual, self.tris[:, 0], tri_areas / 3.0)
        np.add.at(dual, self.tris[:, 1], tri_areas / 3.0)
        np.add.at(dual, self.tris[:, 2], tri_areas / 3.0)
        norms = np.linalg.norm(g, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            res = np.where(dual > 0, norms / dual, np.inf)
        res = float(res[self.interior_mask].max(initial=0.0))
        return area, g, res, guard


def _stage_descend(kin, fiber, opts, report, tol=None, label=""):
    """Monotone ascent plus Newton finish; mutates nothing, returns the
    converged fiber array or raises _StageFailure."""
    if tol is None:
        tol = opts.tol_h
    report.stage_breaks.append(len(report.area_trace))
    area, grad, res, guard = kin.evaluate(fiber)
    if guard < opts.guard_margin:
        raise _StageFailure("warm start is not spacelike")
    report.area_trace.append(area)
    report.residual_trace.append(res)
    report.margin_trace.append(guard)

    prev_f = None
    prev_g = None
    alpha = 1.0
    iters = 0
    newton_fails = 0

    def accept(f_new, out):
        nonlocal fiber, area, grad, res, guard, prev_f, prev_g
        a_new, g_new, r_new, m_new = out
        prev_f, prev_g = fiber, grad
        fiber, area, grad, res, guard = f_new, a_new, g_new, r_new, m_new
        report.area_trace.append(area)
        report.residual_trace.append(res)
        report.margin_trace.append(guard)
        report.iterations += 1

    def try_step(direction, step):
        f_new = fiber + step * direction
        f_new[kin.interior_mask] = (
            kin.retract(f_new)[kin.interior_mask]
            if not kin.flat
            else f_new[kin.interior_mask]
        )
        f_new[~kin.interior_mask] = fiber[~kin.interior_mask]
        out = kin.evaluate(f_new)
        a_new, _, r_new, m_new = out
        ok = (
            m_new >= opts.guard_margin
            and a_new >= area - 1e-14 * max(1.0, abs(area))
            and r_new <= res
        )
        return ok, f_new, out

    # ascent phase
    while res > tol and iters < opts.ascent_iters_per_stage:
        if res <= max(opts.newton_trigger, tol) and opts.endgame:
            break
        if prev_g is not None:
            s = (fiber - prev_f).ravel()
            y = (prev_g - grad).ravel()
            sy = float(s @ y)
            yy = float(y @ y)
            if sy > 0 and yy > 0:
                alpha = min(max(sy / yy, 1e-12), 1e6)
        ok = False
        step = alpha
        for _ in range(70):
            ok, f_new, out = try_step(grad, step)
            if ok:
                break
            step *= 0.5
        if not ok:
            raise _StageFailure(f"line search exhausted at residual {res:.3e} {label}")
        accept(f_new, out)
        iters += 1

    # Newton finish: solve (-Hessian) d = grad with matrix-free CG on the
    # reduced space of interior tangent coordinates (no kernel directions)
    interior = np.nonzero(kin.interior_mask)[0]
    n_comp = fiber.shape[1] if kin.flat else fiber.shape[1] - 1
    while res > tol and opts.endgame:
        if report.iterations >= opts.max_iterations:
            raise _StageFailure("iteration budget exhausted")
        if newton_fails > 6:
            raise _StageFailure(f"newton stalled at residual {res:.3e} {label}")
        if kin.flat:
            bases = None
        else:
            bases = np.stack([sphere.tangent_basis(fiber[i]) for i in interior])

        def expand(u):
            full = np.zeros_like(fiber)
            if kin.flat:
                full[interior] = u.reshape(len(interior), n_comp)
            else:
                full[interior] = np.einsum(
                    "ik,ikb->ib", u.reshape(len(interior), n_comp), bases
                )
            return full

        def reduce_(g):
            if kin.flat:
                return g[interior].ravel()
            return np.einsum("ib,ikb->ik", g[interior], bases).ravel()

        eps_base = np.sqrt(np.finfo(float).eps)
        scale_f = 1.0 + np.linalg.norm(fiber)

        def hess_vec(u):
            v = expand(u)
            nv = np.linalg.norm(v)
            if nv == 0:
                return np.zeros_like(u)
            eps = eps_base * scale_f / nv
            fp = fiber + eps * v
            fm = fiber - eps * v
            if not kin.flat:
                fp = kin.retract(fp)
                fm = kin.retract(fm)
            fp[~kin.interior_mask] = fiber[~kin.interior_mask]
            fm[~kin.interior_mask] = fiber[~kin.interior_mask]
            _, gp, _, _ = kin.evaluate(fp)
            _, gm, _, _ = kin.evaluate(fm)
            dg = kin.project_tangent(fiber, (gp - gm) / (2 * eps))
            return -reduce_(dg)  # negated: CG wants the positive operator

        size = len(interior) * n_comp
        op = LinearOperator((size, size), matvec=hess_vec, dtype=float)
        rhs = reduce_(grad)
        forcing = min(0.1, np.sqrt(max(res, 1e-16)))
        sol, info = cg(op, rhs, rtol=forcing, atol=0.0, maxiter=opts.cg_iters)
        direction = expand(sol)
        ok = False
        step = 1.0
        for _ in range(30):
            ok, f_new, out = try_step(direction, step)
            if ok:
                break
            step *= 0.5
        if not ok:
            # fall back to plain ascent steps before retrying Newton
            newton_fails += 1
            ok2 = False
            step = alpha
            for _ in range(70):
                ok2, f_new, out = try_step(grad, step)
                if ok2:
                    break
                step *= 0.5
            if not ok2:
                raise _StageFailure(f"line search exhausted at residual {res:.3e} {label}")
            accept(f_new, out)
            continue
        newton_fails = 0
        accept(f_new, out)

    if res > tol:
        raise _StageFailure(f"did not reach tolerance: residual {res:.3e} {label}")
    return fiber


class _StageFailure(Exception):
    pass


def solve_finite(boundary, mesh_opts=None, opts=None, validate_boundary=True):
    """Dirichlet area maximization over the region bounded by the boundary
    polygon, by warm-started continuation from the planar configuration.

    Returns (DiscreteSurface, SolveReport).
    """
    mesh_opts = mesh_opts or MeshOptions()
    opts = opts or SolverOptions()
    if validate_boundary:
        boundary.check_strongly_positive()
    t0 = time.perf_counter()
    mesh = structured_polar_mesh(
        boundary.params_uv, mesh_opts.n_rings, grading=mesh_opts.grading
    )
    kin = _Kinematics(boundary.space, mesh, boundary.frame, 1.0)
    report = SolveReport()

    v = boundary.frame.fiber_basepoint
    fiber = np.tile(v, (mesh.n_nodes, 1))
    t = 0.0
    dt = opts.dt_init
    fiber[mesh.boundary] = continuity_path(boundary, 0.0).fiber
    try:
        fiber = _stage_descend(kin, fiber, opts, report, tol=opts.tol_h, label="(t=0)")
    except _StageFailure as exc:
        raise SolveError(f"initial planar stage failed: {exc}", stage_t=0.0)
    report.continuity_ts.append(0.0)

    while t < 1.0:
        t_next = min(1.0, t + dt)
        tol = opts.tol_h if t_next == 1.0 else max(opts.stage_tol, opts.tol_h)
        trial = fiber.copy()
        if t > 0.0:
            # carry the interior along the contraction isotopy so the warm
            # start tracks the boundary deformation
            try:
                undone = contraction_inverse(fiber, v, 1.0 - t)
                trial = contracted_fiber(undone, v, 1.0 - t_next)
            except ValueError:
                trial = fiber.copy()
        trial[mesh.boundary] = continuity_path(boundary, t_next).fiber
        marks = (len(report.area_trace), len(report.stage_breaks), report.iterations)
        try:
            fiber = _stage_descend(
                kin, trial, opts, report, tol=tol, label=f"(t={t_next:.4f})"
            )
        except _StageFailure as exc:
            del report.area_trace[marks[0]:]
            del report.residual_trace[marks[0]:]
            del report.margin_trace[marks[0]:]
            del report.stage_breaks[marks[1]:]
            report.iterations = marks[2]
            dt *= 0.5
            if dt < opts.dt_floor:
                raise SolveError(
                    f"continuity step underflow at t={t:.6f}: {exc}", stage_t=t
                )
            continue
        t = t_next
        report.continuity_ts.append(t)
        dt = min(opts.dt_init, dt * 2.0)

    surface = DiscreteSurface(boundary.space, mesh, boundary.frame, fiber, 1.0)
    report.final_residual = report.residual_trace[-1]
    report.wall_time = time.perf_counter() - t0
    return surface, report


def solve_flat(space, boundary_uv, boundary_values, mesh_opts=None, opts=None,
               frame=None):
    """Flat-model Dirichlet solve: boundary_values are free R^n vectors over
    the boundary polygon; the ambient is the flat signature (2, n) space."""
    mesh_opts = mesh_opts or MeshOptions()
    opts = opts or SolverOptions()
    frame = frame or PointedPlane.standard(space)
    uv = np.asarray(boundary_uv, dtype=float)
    vals = np.asarray(boundary_values, dtype=float)
    if vals.shape != (uv.shape[0], space.n):
        raise ValueError("boundary value shape mismatch")
    t0 = time.perf_counter()
    mesh = structured_polar_mesh(uv, mesh_opts.n_rings, grading=mesh_opts.grading)
    kin = _Kinematics(space, mesh, frame, 0.0)
    report = SolveReport()

    # affine extension of the boundary data: exact for plane data, and a
    # strong warm start otherwise
    design = np.hstack([uv, np.ones((uv.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    affine = np.hstack([mesh.params, np.ones((mesh.n_nodes, 1))]) @ coef
    trial = affine.copy()
    trial[mesh.boundary] = vals.copy()
    try:
        fiber = _stage_descend(kin, trial, opts, report, tol=opts.tol_h, label="(flat direct)")
        report.continuity_ts.append(1.0)
        surface = DiscreteSurface(space, mesh, frame, fiber, 0.0)
        report.final_residual = report.residual_trace[-1]
        report.wall_time = time.perf_counter() - t0
        return surface, report
    except _StageFailure:
        del report.area_trace[:]
        del report.residual_trace[:]
        del report.margin_trace[:]
        del report.stage_breaks[:]
        report.iterations = 0

    mean = vals.mean(axis=0)
    fiber = np.tile(mean, (mesh.n_nodes, 1))
    t = 0.0
    dt = opts.dt_init
    try:
        fiber = _stage_descend(kin, fiber, opts, report, tol=opts.tol_h, label="(flat t=0)")
    except _StageFailure as exc:
        raise SolveError(f"initial flat stage failed: {exc}", stage_t=0.0)
    report.continuity_ts.append(0.0)
    while t < 1.0:
        t_next = min(1.0, t + dt)
        tol = opts.tol_h if t_next == 1.0 else max(opts.stage_tol, opts.tol_h)
        trial = fiber.copy()
        if t_next == 1.0:
            trial[mesh.boundary] = vals.copy()
        else:
            trial[mesh.boundary] = (1.0 - t_next) * mean + t_next * vals
        marks = (len(report.area_trace), len(report.stage_breaks), report.iterations)
        try:
            fiber = _stage_descend(
                kin, trial, opts, report, tol=tol, label=f"(flat t={t_next:.3f})"
            )
        except _StageFailure as exc:
            del report.area_trace[marks[0]:]
            del report.residual_trace[marks[0]:]
            del report.margin_trace[marks[0]:]
            del report.stage_breaks[marks[1]:]
            report.iterations = marks[2]
            dt *= 0.5
            if dt < opts.dt_floor:
                raise SolveError(
                    f"flat continuity underflow at t={t:.6f}: {exc}", stage_t=t
                )
            continue
        t = t_next
        report.continuity_ts.append(t)
        dt = min(opts.dt_init, dt * 2.0)
    surface = DiscreteSurface(space, mesh, frame, fiber, 0.0)
    report.final_residual = report.residual_trace[-1]
    report.wall_time = time.perf_counter() - t0
    return surface, report


@dataclass
class AsymptoticReport:
    rhos: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    stage_reports: list = field(default_factory=list)
    stabilization: list = field(default_factory=list)
    wall_time: float = 0.0


def _sample_compact(surface, queries):
    """Ambient positions of the graph above the query parameter points (must
    be covered by the mesh)."""
    tri, bary = locate_points(surface.mesh, queries)
    if np.any(tri < 0):
        raise SolveError("stabilization query points left the mesh")
    nodes = surface.mesh.triangles[tri]
    fib = np.einsum("qk,qkb->qb", bary, surface.fiber[nodes])
    if not surface.is_flat:
        fib = fib / np.linalg.norm(fib, axis=1, keepdims=True)
        return psi(surface.frame, queries, fib)
    return np.hstack([queries, fib])


def solve_asymptotic(loop, rho_schedule, p=None, mesh_opts=None, opts=None,
                     compact_radius=0.5, warm_start=True, boundary_h=4.5,
                     max_boundary_samples=3072):
    """Pseudosphere-exhaustion sweep for a strictly contracting loop.

    For each radius in the schedule the radial sweep curve is expressed as a
    graph over the fixed frame through the interior point p and solved; the
    report carries, per consecutive pair of stages, the max ambient
    deviation above the compact parameter disk of the given radius.

    Spacelike triangulations of the exhaustion disks need angular resolution
    growing like sinh(rho), so the loop is resampled per stage at
    ceil(2 pi sinh(rho) / boundary_h) angles (capped), and the ring count
    grows with rho.
    """
    mesh_opts = mesh_opts or MeshOptions()
    opts = opts or SolverOptions()
    if classify_loop(loop).kind is not LoopKind.POSITIVE:
        raise LoopError("asymptotic solve needs a strictly contracting loop")
    rhos = list(rho_schedule)
    if any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("rho schedule must be strictly increasing")
    t0 = time.perf_counter()
    space = loop.space
    if p is None:
        p = interior_point(loop)
    frame = PointedPlane.from_vectors(space, p)
    # orient the frame's positive plane with the loop's winding
    from .loops import lift_samples

    a, _ = frame.coords(lift_samples(loop))
    ang = np.arctan2(a[:, 1], a[:, 0])
    steps = (np.diff(np.concatenate([ang, ang[:1]])) + np.pi) % (2 * np.pi) - np.pi
    if steps.sum() < 0:
        frame = PointedPlane(space, frame.point, frame.u_basis[::-1].copy(),
                             frame.v_basis)

    nq = 12
    qth = 2 * np.pi * np.arange(24) / 24
    qr = compact_radius * (np.arange(1, nq + 1) / nq)
    queries = np.vstack(
        [[0.0, 0.0]]
        + [r * np.stack([np.cos(qth), np.sin(qth)], axis=1) for r in qr]
    )

    report = AsymptoticReport()
    surfaces = []
    prev_samples = None
    prev = None
    from .loops import LoopSpec

    for rho in rhos:
        # structural acceptance of the stage curve at the loop's own sampling
        sp_report = strongly_positive_check(exhaustion_curve(loop, p, rho))
        if not sp_report.ok:
            report.skipped.append((rho, "exhaustion curve not strongly positive"))
            continue
        m_stage = int(
            min(
                max(loop.m, np.ceil(2 * np.pi * np.sinh(rho) / boundary_h)),
                max_boundary_samples,
            )
        )
        if m_stage > loop.m:
            th = 2 * np.pi * np.arange(m_stage) / m_stage
            stage_loop = LoopSpec(space, loop.value_at(th))
        else:
            stage_loop = loop
        curve = exhaustion_curve(stage_loop, p, rho)
        uv, w = psi_inv(frame, curve.points)
        try:
            boundary = BoundaryData(space, frame, uv, w)
            from .meshing import check_star_shaped

            check_star_shaped(uv)
        except (ValueError, MeshError) as exc:
            report.skipped.append((rho, f"not a graph over the frame: {exc}"))
            continue
        stage_rings = max(mesh_opts.n_rings, int(np.ceil(rho / 0.7)))
        stage_mesh_opts = MeshOptions(n_rings=stage_rings, grading=mesh_opts.grading)
        stage_opts = opts
        if warm_start and prev is not None:
            # seed from the previous solution via barycentric transfer
            mesh = structured_polar_mesh(uv, stage_rings, grading=mesh_opts.grading)
            inside = (
                np.linalg.norm(prev.mesh.params[prev.mesh.boundary], axis=1).min()
                * 0.999
            )
            seed = np.tile(frame.fiber_basepoint, (mesh.n_nodes, 1))
            radii = np.linalg.norm(mesh.params, axis=1)
            ok_mask = radii <= inside
            if ok_mask.any():
                tri, bary = locate_points(prev.mesh, mesh.params[ok_mask])
                good = tri >= 0
                nodes = prev.mesh.triangles[tri[good]]
                fib = np.einsum("qk,qkb->qb", bary[good], prev.fiber[nodes])
                fib /= np.linalg.norm(fib, axis=1, keepdims=True)
                rows = np.nonzero(ok_mask)[0][good]
                seed[rows] = fib
            surface, stage_rep = _solve_finite_seeded(
                boundary, mesh, seed, stage_opts
            )
        else:
            surface, stage_rep = solve_finite(
                boundary, stage_mesh_opts, stage_opts, validate_boundary=False
            )
        report.rhos.append(rho)
        report.stage_reports.append(stage_rep)
        surfaces.append(surface)
        samples = _sample_compact(surface, queries)
        if prev_samples is not None:
            dev = float(np.abs(samples - prev_samples).max())
            report.stabilization.append(dev)
        prev_samples = samples
        prev = surface
    report.wall_time = time.perf_counter() - t0
    return surfaces, report


def _solve_finite_seeded(boundary, mesh, seed_fiber, opts):
    """Single-shot solve from an explicit warm start (no continuation)."""
    kin = _Kinematics(boundary.space, mesh, boundary.frame, 1.0)
    report = SolveReport()
    fiber = seed_fiber.copy()
    fiber[mesh.boundary] = boundary.fiber.copy()
    try:
        fiber = _stage_descend(kin, fiber, opts, report, label="(seeded)")
    except _StageFailure:
        # fall back to full continuation
        return solve_finite(boundary, MeshOptions(n_rings=_rings_of(mesh)), opts,
                            validate_boundary=False)
    report.continuity_ts.append(1.0)
    report.final_residual = report.residual_trace[-1]
    surface = DiscreteSurface(boundary.space, mesh, boundary.frame, fiber, 1.0)
    return surface, report


def _rings_of(mesh):
    m = len(mesh.boundary)
    return (mesh.n_nodes - 1) // m
