"""Gaussian-weighted velocity averaging of the susceptibility responses.

The ensemble response at each signal detuning is the velocity integral of
the per-class susceptibility against the Maxwellian weight
``exp(-omega_d^2/Gamma_D^2) / (sqrt(pi) * Gamma_D)``, times ``alpha/4`` (the
natural linewidth is the internal unit, so ``alpha*Gamma/4`` reduces to
``alpha/4``).

The integrand mixes two very different scales: a broad background set by the
Doppler width and features a few linewidths wide -- the excitation of the
two-photon-resonant velocity group near ``omega_d0``, and one-photon
resonances that sweep with ``delta_s``.  The integral therefore uses a
composite Gauss-Legendre rule: panels over the full +-4 Gamma_D support plus
a denser panel window centered on ``omega_d0``, with every panel count
doubled until the result self-converges (or a doubling cap fails, which is a
hard error rather than a silently wrong spectrum).

Since the optical depth only scales the result, responses are computed and
cached per unit depth and multiplied by ``alpha`` on the way out.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernel
from .cache import ResponseCache, canonical_hash
from .obe import solve_zeroth_order_batch
from .params import PhysicalParams
from .spectrum import ComplexSpectrum

#: Default grid: 2 pi x 4 GHz span (in Gamma units) at 2^15 nodes, which puts
#: the time resolution at 0.25 ns and the unaliased window near 8 us.
DEFAULT_SPAN = 2.0 * math.pi * 4.0e9 / (2.0 * math.pi * 6.0e6)
DEFAULT_NODES = 2**15

#: Minimum node count accepted for a production grid.
MIN_GRID_NODES = 2**10


class QuadratureError(RuntimeError):
    """Velocity quadrature failed to self-converge within the doubling cap."""

    def __init__(self, component: str, node_index: int, delta_s: float, err: float, levels: int):
        super().__init__(
            f"velocity quadrature did not converge after {levels} doublings: "
            f"worst component {component!r} at node {node_index} "
            f"(delta_s={delta_s:g} Gamma) still changing by {err:.3g} relative"
        )
        self.component = component
        self.node_index = node_index
        self.delta_s = delta_s
        self.err = err


@dataclass(frozen=True)
class GridSpec:
    """Uniform signal-detuning grid; ``center=None`` means auto-center on the
    coarse-scanned peak of the four-wave-mixing response."""

    span: float = DEFAULT_SPAN
    nodes: int = DEFAULT_NODES
    center: float | None = None

    def __post_init__(self):
        if not self.span > 0.0 or not math.isfinite(self.span):
            raise ValueError(f"span must be finite and > 0, got {self.span}")
        if self.nodes < 2:
            raise ValueError(f"nodes must be >= 2, got {self.nodes}")
        if self.center is not None and not math.isfinite(self.center):
            raise ValueError(f"center must be finite, got {self.center}")

    def build(self, center: float) -> np.ndarray:
        step = self.span / self.nodes
        return center + (np.arange(self.nodes) - self.nodes // 2) * step


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings for the velocity integral."""

    global_panels: int = 64
    window_panels: int = 64
    nodes_per_panel: int = 8
    max_doublings: int = 4
    tol: float = 1.0e-4
    domain_sigmas: float = 4.0

    def __post_init__(self):
        for name in ("global_panels", "window_panels", "nodes_per_panel"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be >= 1")
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.domain_sigmas <= 0.0:
            raise ValueError("domain_sigmas must be > 0")


def window_halfwidth(params: PhysicalParams) -> float:
    """Half-width of the refined velocity window around omega_d0.

    Wide enough for the two-photon feature: a floor of ten linewidths,
    scaled up with the decoherence rate and the two-photon effective Rabi
    frequency when those dominate.
    """
    frame = params.frame
    w = max(10.0, 3.0 * params.gamma_dec)
    if frame.delta_atom != 0.0:
        w = max(w, 3.0 * abs(params.omega_c * params.omega_p / (2.0 * frame.delta_atom)))
    return w


def build_velocity_nodes(params: PhysicalParams, quad: QuadratureSpec, level: int):
    """Velocity nodes and Gaussian-weighted quadrature weights at one
    refinement level (panel counts scale as 2**level), ascending order."""
    gd = params.gamma_doppler
    lo, hi = -quad.domain_sigmas * gd, quad.domain_sigmas * gd
    omega_d0 = params.frame.omega_d0
    w = window_halfwidth(params)
    wlo = min(max(omega_d0 - w, lo), hi)
    whi = min(max(omega_d0 + w, lo), hi)

    mult = 2**level
    segments: list[tuple[float, float, int]] = []
    outer_total = quad.global_panels * mult
    len1 = max(wlo - lo, 0.0)
    len2 = max(hi - whi, 0.0)
    if len1 + len2 > 0.0:
        n1 = int(round(outer_total * len1 / (len1 + len2))) if len1 > 0.0 else 0
        n1 = min(max(n1, 1 if len1 > 0.0 else 0), outer_total - (1 if len2 > 0.0 else 0))
        n2 = outer_total - n1
        if len1 > 0.0:
            segments.append((lo, wlo, n1))
        if whi > wlo:
            segments.append((wlo, whi, quad.window_panels * mult))
        if len2 > 0.0:
            segments.append((whi, hi, n2))
    else:
        segments.append((lo, hi, quad.window_panels * mult))

    gl_x, gl_w = np.polynomial.legendre.leggauss(quad.nodes_per_panel)
    nodes_parts = []
    weights_parts = []
    norm = 1.0 / (math.sqrt(math.pi) * gd)
    for seg_lo, seg_hi, n_panels in segments:
        edges = np.linspace(seg_lo, seg_hi, n_panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        x = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
        wq = (half[:, None] * gl_w[None, :]).ravel() * np.exp(-(x * x) / (gd * gd)) * norm
        nodes_parts.append(x)
        weights_parts.append(wq)
    return np.concatenate(nodes_parts), np.concatenate(weights_parts)


def _unit_response(params, delta_s, quad, level, backend):
    """Per-unit-depth averaged responses at one refinement level."""
    nodes, weights = build_velocity_nodes(params, quad, level)
    zeroth = solve_zeroth_order_batch(params, nodes)
    kappa, zeta, xi = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend)
    return (kappa / 4.0, zeta / 4.0, xi / 4.0), nodes.size


def _convergence_error(prev, new):
    """Scaled sup-norm change between refinement levels.

    Pointwise relative with a floor at 1% of each component's sup so the
    deep wings are compared against a sensible scale.
    """
    worst = (0.0, "", 0)
    for name, p, v in zip(("kappa", "zeta", "xi"), prev, new):
        scale = float(np.max(np.abs(v)))
        if scale == 0.0:
            continue
        denom = np.maximum(np.abs(v), 0.01 * scale)
        rel = np.abs(v - p) / denom
        idx = int(np.argmax(rel))
        if rel[idx] > worst[0]:
            worst = (float(rel[idx]), name, idx)
    return worst


def _coarse_center(params: PhysicalParams, grid: GridSpec, quad: QuadratureSpec, backend) -> float:
    """Locate the four-wave-mixing peak on a cheap wide grid.

    The dominant velocity group emits the signal near ``k_s/k_c * omega_d0``;
    a doubled-span coarse scan around that prior pins the actual maximum.
    """
    prior = params.k_ratio_sc * params.frame.omega_d0
    n = 1024
    step = 2.0 * grid.span / n
    delta_s = prior + (np.arange(n) - n // 2) * step
    (kappa, _, _), _ = _unit_response(params, delta_s, quad, 0, backend)
    mag = np.abs(kappa)
    if float(np.max(mag)) == 0.0:
        return prior
    return float(delta_s[int(np.argmax(mag))])


def averaged_response(
    params: PhysicalParams,
    grid: GridSpec | None = None,
    quad: QuadratureSpec | None = None,
    cache: ResponseCache | None = None,
    backend: str | None = None,
):
    """Ensemble response curves (kappa_bar, zeta_bar, xi_bar) on one grid.

    Refines the velocity quadrature until self-converged (see module notes),
    scales by the optical depth, and returns three spectra sharing a grid
    and provenance metadata.  Raises :class:`QuadratureError` if the doubling
    cap is hit first.
    """
    grid = grid or GridSpec()
    quad = quad or QuadratureSpec()
    if grid.nodes < MIN_GRID_NODES:
        raise ValueError(f"production grids need >= {MIN_GRID_NODES} nodes, got {grid.nodes}")
    backend_name = backend or kernel.active_backend()

    center = grid.center if grid.center is not None else _coarse_center(params, grid, quad, backend_name)
    delta_s = grid.build(center)

    params_dict = params.as_dict()
    alpha = params_dict.pop("alpha")
    ident = {
        "schema": 1,
        "params": params_dict,
        "grid": {"center": center, "span": grid.span, "nodes": grid.nodes},
        "quad": asdict(quad),
        "backend": backend_name,
        "kernel_version": kernel.KERNEL_VERSION,
    }
    cache_key = canonical_hash(ident)
    params_hash = canonical_hash({**ident, "alpha": alpha})

    entry = cache.get(cache_key) if cache is not None else None
    if entry is not None:
        unit = (entry["kappa"], entry["zeta"], entry["xi"])
        meta = dict(entry["meta"])
        meta["from_cache"] = True
    else:
        prev = None
        unit = None
        err_info = (math.inf, "kappa", 0)
        levels_used = 0
        n_nodes = 0
        converged = False
        for level in range(quad.max_doublings + 1):
            current, n_nodes = _unit_response(params, delta_s, quad, level, backend_name)
            levels_used = level
            if prev is not None:
                err_info = _convergence_error(prev, current)
                if err_info[0] < quad.tol:
                    converged = True
                    unit = current
                    break
            prev = current
        if not converged:
            err, component, idx = err_info
            raise QuadratureError(component, idx, float(delta_s[idx]), err, quad.max_doublings)
        meta = {
            "quad_levels": levels_used,
            "quad_error": err_info[0],
            "quad_converged": True,
            "omega_nodes": n_nodes,
            "grid_center": center,
            "grid_span": grid.span,
            "grid_nodes": grid.nodes,
            "backend": backend_name,
            "kernel_version": kernel.KERNEL_VERSION,
            "from_cache": False,
        }
        if cache is not None:
            cache.put(cache_key, delta_s, unit[0], unit[1], unit[2], meta)

    meta.update({"params_hash": params_hash, "cache_key": cache_key, "alpha": alpha})
    spectra = tuple(
        ComplexSpectrum(delta_s, alpha * values, {**meta, "component": name})
        for name, values in zip(("kappa", "zeta", "xi"), unit)
    )
    return spectra
