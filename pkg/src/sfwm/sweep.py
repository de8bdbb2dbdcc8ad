"""Parameter sweeps over operating points of the biphoton source.

Each sweep point fixes a velocity-group frame (omega_d0, delta_atom), an
optical depth (either a constant or the saturating tanh model of depth
versus detuning), and the field/rate parameters, then runs the full
pipeline: velocity-averaged responses -> spectrum -> optional etalon ->
wave packet -> shape fit.  Points run independently in a worker pool and
results are collected in input order, so output is identical for any worker
count; failed points carry their error in the row instead of aborting the
sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cache import ResponseCache
from .doppler import GridSpec, QuadratureSpec, averaged_response
from .fitting import fit_wavepacket, spectral_fwhm
from .params import FrameParams, PhysicalParams
from .spectrum import (
    EtalonModel,
    apply_etalon,
    assemble_spectrum,
    etalon_attenuation,
    rate_proxy,
    synthesize_wavepacket,
)


@dataclass(frozen=True)
class OdModel:
    """Optical depth versus one-photon detuning (all in Gamma units):
    ``od(delta_atom) = base + amplitude * tanh((delta_atom - center)/width)``.

    Optical pumping empties the ground state near small detunings, so the
    depth rises and saturates as the detuning grows.
    """

    base: float
    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if self.width == 0.0 or not math.isfinite(self.width):
            raise ValueError("width must be finite and nonzero")
        for name in ("base", "amplitude", "center"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def od_at(model: OdModel, delta_atom: float) -> float:
    """Evaluate the depth model at one detuning."""
    return model.base + model.amplitude * math.tanh((delta_atom - model.center) / model.width)


#: Default depth model: calibrated so od(2*pi*2.28 GHz) = 420 with a plateau
#: just above; the shape is illustrative, not a measured calibration.
DEFAULT_OD_MODEL = OdModel(
    base=420.0 - 115.0 * math.tanh((380.0 - 100.0) / (250.0 / 3.0)),
    amplitude=115.0,
    center=100.0,
    width=250.0 / 3.0,
)


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep needs; ``od_model=None`` means fixed ``od_fixed``."""

    frames: tuple[FrameParams, ...]
    base_params: PhysicalParams
    od_fixed: float | None = None
    od_model: OdModel | None = None
    etalon_enabled: bool = True
    etalon: EtalonModel = field(default_factory=EtalonModel)
    grid: GridSpec = field(default_factory=GridSpec)
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    window_ns: float | None = 400.0
    rate_proportionality: float = 1.0

    def __post_init__(self):
        if len(self.frames) == 0:
            raise ValueError("sweep needs at least one frame point")
        if (self.od_fixed is None) == (self.od_model is None):
            raise ValueError("exactly one of od_fixed / od_model must be set")

    def resolve_alpha(self, frame: FrameParams) -> float:
        alpha = self.od_fixed if self.od_model is None else od_at(self.od_model, frame.delta_atom)
        if alpha < 0.0:
            raise ValueError(f"depth model yields negative od at delta_atom={frame.delta_atom:g}")
        return float(alpha)

    def params_for(self, frame: FrameParams) -> PhysicalParams:
        return self.base_params.with_frame(frame).replace(alpha=self.resolve_alpha(frame))


@dataclass
class SweepRow:
    """One computed sweep point."""

    omega_d0: float
    delta_atom: float
    alpha: float
    tau_b_ns: float
    spectral_fwhm_mhz: float
    rate_proxy: float
    a_e: float
    quad_converged: bool
    quad_levels: int
    fit_converged: bool
    params_hash: str
    error: str | None = None

    CSV_HEADER = (
        "omega_d0_Gamma,delta_atom_Gamma,alpha,tau_b_ns,spectral_fwhm_MHz,"
        "rate_proxy,a_e,quad_converged,quad_levels,fit_converged,params_hash,error"
    )

    def to_csv_row(self) -> str:
        def num(x):
            return repr(float(x))

        return ",".join(
            [
                num(self.omega_d0),
                num(self.delta_atom),
                num(self.alpha),
                num(self.tau_b_ns),
                num(self.spectral_fwhm_mhz),
                num(self.rate_proxy),
                num(self.a_e),
                str(int(self.quad_converged)),
                str(int(self.quad_levels)),
                str(int(self.fit_converged)),
                self.params_hash,
                "" if self.error is None else self.error.replace(",", ";").replace("\n", " "),
            ]
        )


def compute_point(
    spec: SweepSpec,
    frame: FrameParams,
    cache_dir=None,
    backend: str | None = None,
) -> SweepRow:
    """Run the full pipeline for one frame point."""
    params = spec.params_for(frame)
    cache = ResponseCache(cache_dir) if cache_dir is not None else None
    try:
        kappa, zeta, xi = averaged_response(params, spec.grid, spec.quad, cache, backend)
        f = assemble_spectrum(kappa, zeta, xi)
        a_e = etalon_attenuation(f, spec.etalon)
        rate = spec.rate_proportionality * rate_proxy(f)
        f_used = apply_etalon(f, spec.etalon) if spec.etalon_enabled else f
        fwhm_mhz = spectral_fwhm(f_used.freq_mhz, f_used.power)
        wp = synthesize_wavepacket(f_used, window_ns=spec.window_ns)
        fit = fit_wavepacket(wp.t_ns, wp.values)
        return SweepRow(
            omega_d0=frame.omega_d0,
            delta_atom=frame.delta_atom,
            alpha=params.alpha,
            tau_b_ns=fit.tau_b,
            spectral_fwhm_mhz=fwhm_mhz,
            rate_proxy=rate,
            a_e=a_e,
            quad_converged=bool(kappa.meta.get("quad_converged", False)),
            quad_levels=int(kappa.meta.get("quad_levels", -1)),
            fit_converged=fit.converged,
            params_hash=kappa.meta.get("params_hash", ""),
            error=None,
        )
    except Exception as exc:  # noqa: BLE001 - a failed point must not kill the sweep
        from .cache import canonical_hash

        return SweepRow(
            omega_d0=frame.omega_d0,
            delta_atom=frame.delta_atom,
            alpha=float("nan"),
            tau_b_ns=float("nan"),
            spectral_fwhm_mhz=float("nan"),
            rate_proxy=float("nan"),
            a_e=float("nan"),
            quad_converged=False,
            quad_levels=-1,
            fit_converged=False,
            params_hash=canonical_hash(params.as_dict()),
            error=f"{type(exc).__name__}: {exc}",
        )


def _point_task(args):
    spec, frame, cache_dir, backend = args
    return compute_point(spec, frame, cache_dir, backend)


def run_sweep(
    spec: SweepSpec,
    jobs: int = 1,
    cache_dir=None,
    backend: str | None = None,
) -> list[SweepRow]:
    """Compute all sweep points, optionally in a process pool.

    Rows come back in frame order regardless of ``jobs``; per-point work is
    single-threaded and deterministic, so the output is reproducible.
    """
    tasks = [(spec, frame, cache_dir, backend) for frame in spec.frames]
    if jobs <= 1 or len(tasks) == 1:
        return [_point_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_point_task, tasks, chunksize=1))


def write_sweep_csv(path, rows: list[SweepRow], config_hash: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        fh.write(SweepRow.CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv_row() + "\n")


def rabi_split_equivalence(
    spec: SweepSpec,
    ratio_multipliers=(0.8, 1.0, 1.2),
    jobs: int = 1,
    cache_dir=None,
    backend: str | None = None,
) -> list[dict]:
    """Report how tau_b moves when the coupling/pump ratio changes at fixed
    product.

    For each frame the pump-to-coupling ratio is scaled by each multiplier
    while keeping omega_c * omega_p constant, and the maximum relative
    deviation of tau_b from the unit-multiplier value is reported.  This is
    a similarity report: in the far-detuned regime the response depends on
    the fields mainly through their product, so deviations should be small
    and shrink as delta_atom grows.
    """
    base = spec.base_params
    product = base.omega_c * base.omega_p
    ratio0 = base.omega_p / base.omega_c if base.omega_c > 0 else float("nan")
    multipliers = tuple(ratio_multipliers)
    if 1.0 not in multipliers:
        multipliers = (1.0,) + multipliers

    report = []
    for frame in spec.frames:
        tau_by_mult = {}
        for m in multipliers:
            ratio = ratio0 * m
            fields = base.replace(omega_c=math.sqrt(product / ratio), omega_p=math.sqrt(product * ratio))
            sub = SweepSpec(
                frames=(frame,),
                base_params=fields,
                od_fixed=spec.od_fixed,
                od_model=spec.od_model,
                etalon_enabled=spec.etalon_enabled,
                etalon=spec.etalon,
                grid=spec.grid,
                quad=spec.quad,
                window_ns=spec.window_ns,
                rate_proportionality=spec.rate_proportionality,
            )
            row = run_sweep(sub, jobs=jobs, cache_dir=cache_dir, backend=backend)[0]
            if row.error is not None:
                raise RuntimeError(f"ratio-equivalence point failed: {row.error}")
            tau_by_mult[m] = row.tau_b_ns
        ref = tau_by_mult[1.0]
        max_dev = max(abs(v - ref) / ref for v in tau_by_mult.values())
        report.append(
            {
                "omega_d0": frame.omega_d0,
                "delta_atom": frame.delta_atom,
                "tau_b_by_multiplier": {repr(float(k)): v for k, v in sorted(tau_by_mult.items())},
                "max_rel_deviation": max_dev,
            }
        )
    return report
