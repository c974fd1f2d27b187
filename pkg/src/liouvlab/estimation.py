"""Fitting generators and physical models to measured process matrices.

Two complementary estimators are provided throughout:

* direct: take the principal log of each measured process matrix, average,
  and (optionally) project onto a constrained model by linear least
  squares.  Fast, no iteration, but noise can push the raw estimate off
  the physical set.
* maximum-likelihood (MLE): minimize the cumulative squared Frobenius
  deviation

      cost(L) = sum_n || exp(L t_n) - P_n ||_F^2

  over a constrained parameter set, so physical structure (fixed
  dissipator, Hermitian Hamiltonian, parametric field form) holds by
  construction.  Gradients are exact, using the integral (Frechet)
  representation of the matrix-exponential derivative.

Uncertainty is quantified by a percentile bootstrap over re-simulated
noisy datasets.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import NDArray

from .basis import build_basis, _frozen_array
from .dynamics import ProcessMatrix, TimeGrid, principal_log
from .exceptions import (
    BootstrapError,
    BranchCutError,
    DimensionError,
    SingularProcessError,
    ZeroReferenceError,
)
from .superop import (
    HermitianParams,
    Superoperator,
    dissipator_superop,
    explicit_qutrit_superop,
    hamiltonian_superop,
    params_from_superop,
    spin1_operators,
)
from .tomography import TomographySet, direct_liouvillian, reconstruct_process

__all__ = [
    "RelaxationModel",
    "FitReport",
    "FieldTrack",
    "BootstrapResult",
    "frobenius_distance",
    "mle_liouvillian",
    "fit_relaxation_model",
    "direct_hamiltonian",
    "estimate_fields",
    "bootstrap",
]

CONVERGENCE_RTOL = 1e-10
CONVERGENCE_WINDOW = 5
DEFAULT_MAX_ITERS = 2000
N_RESTARTS = 3

RELAXATION_PARAM_NAMES = (
    "omega_x",
    "omega_y",
    "omega_z",
    "gamma_x",
    "gamma_y",
    "gamma_z",
    "gamma_iso",
)


@dataclass(frozen=True)
class RelaxationModel:
    """Three-channel relaxation model of a spin-1 vapor.

    Residual magnetic fields precess the spin at angular frequencies
    ``omega_residual`` (rad/s); field inhomogeneities dephase each axis via
    jump operators sqrt(gamma_k) F_k; wall and collisional relaxation is
    isotropic at rate ``gamma_iso``.
    """

    omega_residual: NDArray[np.float64]
    gamma_dephase: NDArray[np.float64]
    gamma_iso: float

    def __post_init__(self):
        om = np.asarray(self.omega_residual, dtype=float)
        gk = np.asarray(self.gamma_dephase, dtype=float)
        if om.shape != (3,) or gk.shape != (3,):
            raise DimensionError("omega_residual and gamma_dephase must be 3-vectors")
        if gk.min() < 0 or self.gamma_iso < 0:
            raise ValueError("relaxation rates must be non-negative")
        object.__setattr__(self, "omega_residual", _frozen_array(om))
        object.__setattr__(self, "gamma_dephase", _frozen_array(gk))

    def superoperator(self) -> Superoperator:
        """Effective total relaxation matrix R_T (zero last row).

        The residual-field precession enters with the opposite sign of the
        Hamiltonian generator because R_T is subtracted from the full
        generator: L = -R_T when no controlled field is applied.
        """
        f = spin1_operators()
        basis = build_basis(3)
        h_res = sum(self.omega_residual[k] * f[k] for k in range(3))
        rt = -hamiltonian_superop(h_res, basis).matrix
        for k in range(3):
            rt = rt + self.gamma_dephase[k] * dissipator_superop([f[k]], basis).matrix
        iso = np.eye(9)
        iso[8, 8] = 0.0
        rt = rt + self.gamma_iso * iso
        return Superoperator(dim=3, matrix=rt)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate(
            [self.omega_residual, self.gamma_dephase, [self.gamma_iso]]
        )

    def to_json(self) -> dict:
        return {
            "omega_residual_rad_s": self.omega_residual.tolist(),
            "gamma_dephase_per_s": self.gamma_dephase.tolist(),
            "gamma_iso_per_s": self.gamma_iso,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RelaxationModel":
        return cls(
            omega_residual=np.asarray(obj["omega_residual_rad_s"], dtype=float),
            gamma_dephase=np.asarray(obj["gamma_dephase_per_s"], dtype=float),
            gamma_iso=float(obj["gamma_iso_per_s"]),
        )


@dataclass
class FitReport:
    """Outcome of one fitting procedure.

    ``estimate`` is the model-specific object (Superoperator,
    HermitianParams, RelaxationModel, ...); ``params`` is the flat
    parameter vector behind it; ``ci_low``/``ci_high`` are filled only
    after a bootstrap run.
    """

    model: str
    estimate: object
    params: np.ndarray
    cost: float
    df_per_time: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = True
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    param_names: Optional[tuple] = None
    seed: Optional[int] = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def _estimate_json(est):
            if hasattr(est, "to_json"):
                return est.to_json()
            if isinstance(est, np.ndarray):
                return est.tolist()
            return est

        ci = None
        if self.ci_low is not None and self.ci_high is not None:
            names = self.param_names or tuple(f"p{i}" for i in range(len(self.params)))
            ci = {
                name: [float(lo), float(hi)]
                for name, lo, hi in zip(names, self.ci_low, self.ci_high)
            }
        return {
            "model": self.model,
            "estimate": _estimate_json(self.estimate),
            "params": np.asarray(self.params, dtype=float).tolist(),
            "cost": float(self.cost),
            "df_per_time": None
            if self.df_per_time is None
            else np.asarray(self.df_per_time, dtype=float).tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "ci": ci,
            "seed": self.seed,
        }


def _as_matrix(x) -> np.ndarray:
    return np.asarray(getattr(x, "matrix", x), dtype=float)


def frobenius_distance(a, b) -> float:
    """Normalized Frobenius distance ||a - b||_F / ||b||_F.

    ``b`` is the reference; a measured quantity in ``a`` is thus reported
    as a relative error.

    Raises:
        ZeroReferenceError: when ||b||_F = 0 (the normalization is then
            meaningless -- this happens e.g. at instants of vanishing
            total field).
        DimensionError: on shape mismatch.
    """
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.shape != bm.shape:
        raise DimensionError(f"shape mismatch: {am.shape} vs {bm.shape}")
    ref = np.linalg.norm(bm)
    if ref == 0.0:
        raise ZeroReferenceError("reference operator has zero Frobenius norm")
    return float(np.linalg.norm(am - bm) / ref)


# ---------------------------------------------------------------------------
# MLE over the matrix-exponential cost
# ---------------------------------------------------------------------------


def _normalize_pmeas(pmeas) -> list[tuple[float, np.ndarray]]:
    out = []
    for t, p in pmeas:
        if t <= 0:
            raise ValueError(f"evolution times must be positive, got {t}")
        out.append((float(t), _as_matrix(p)))
    if not out:
        raise ValueError("need at least one measured process matrix")
    return sorted(out, key=lambda tp: tp[0])


def _cost_and_matrix_grad(lmat: np.ndarray, pmeas) -> tuple[float, np.ndarray]:
    """Cost sum_n ||exp(L t_n) - P_n||_F^2 and its gradient w.r.t. L.

    The gradient uses the adjoint of the Frechet derivative of expm:
    grad_L = sum_n 2 t_n D_exp((L t_n)^T)[exp(L t_n) - P_n].
    """
    cost = 0.0
    grad = np.zeros_like(lmat)
    for t, p in pmeas:
        a = lmat * t
        err = scipy.linalg.expm(a) - p
        cost += float((err * err).sum())
        _, fre = scipy.linalg.expm_frechet(a.T, err)
        grad += (2.0 * t) * fre
    return cost, grad


def _hermitian_design() -> np.ndarray:
    cols = [
        explicit_qutrit_superop(HermitianParams(h=np.eye(9)[k])).matrix.ravel()
        for k in range(9)
    ]
    return np.column_stack(cols)


def _field_design(generators: Sequence[Superoperator]) -> np.ndarray:
    return np.column_stack([g.matrix.ravel() for g in generators])


def _spin_generators() -> list[Superoperator]:
    basis = build_basis(3)
    return [hamiltonian_superop(f, basis) for f in spin1_operators()]


def _direct_init(pmeas, rt_mat: np.ndarray | None, dim: int) -> np.ndarray:
    """Generator estimate from the earliest time whose log is admissible."""
    last_err = None
    for t, p in pmeas:
        try:
            log = principal_log(ProcessMatrix(dim=dim, matrix=p, duration_s=t))
            l_est = log.matrix / t
            return l_est + rt_mat if rt_mat is not None else l_est
        except (BranchCutError, SingularProcessError) as err:
            last_err = err
    raise BranchCutError(
        f"no evolution time admits a principal logarithm ({last_err}); "
        "supply an explicit initial guess"
    )


def _run_lbfgs(fun, x0, max_iters):
    history = []
    last = {"f": None}

    def wrapped(x):
        f, g = fun(x)
        last["f"] = f
        return f, g

    def cb(_xk):
        history.append(last["f"])

    res = scipy.optimize.minimize(
        wrapped,
        x0,
        jac=True,
        method="L-BFGS-B",
        callback=cb,
        options={"maxiter": max_iters, "ftol": 1e-16, "gtol": 1e-14},
    )
    return res, history


def _is_converged(res, history, max_iters) -> bool:
    if len(history) > CONVERGENCE_WINDOW:
        prev = history[-(CONVERGENCE_WINDOW + 1)]
        drop = prev - history[-1]
        if drop < CONVERGENCE_RTOL * max(abs(prev), 1e-300):
            return True
    # hitting a flat gradient before the window fills also counts
    return bool(res.success and res.nit < max_iters)


def mle_liouvillian(
    pmeas,
    *,
    dissipator: Superoperator | None = None,
    form: str = "free",
    field_generators: Sequence[Superoperator] | None = None,
    x0: np.ndarray | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> FitReport:
    """Maximum-likelihood generator from process matrices at several times.

    Args:
        pmeas: iterable of (t_n, ProcessMatrix) pairs, t_n > 0.
        dissipator: fixed relaxation matrix R_T.  When given, the fitted
            parameters describe the Hamiltonian generator B and the full
            generator is L = B - R_T; when absent, L itself is fitted.
        form: constraint on B --
            ``"free"``       all d**4 entries free (no physical constraint);
            ``"hermitian"``  B generated by a 3x3 Hermitian operator
                             (9 parameters, Hermitian by construction);
            ``"fields"``     B in the span of ``field_generators``
                             (default: the three spin-1 precession
                             generators, i.e. Larmor frequencies).
        x0: optional initial parameter vector; defaults to the direct
            log-estimate at the earliest admissible time, projected onto
            the parameter space.
        max_iters: optimizer iteration cap.

    Returns:
        FitReport whose ``estimate`` is the fitted generator L; a
        non-converged fit is reported (``converged=False``), never raised.
        Restarts from perturbed initial points are attempted first.
    """
    pmeas = _normalize_pmeas(pmeas)
    n2 = pmeas[0][1].shape[0]
    dim = int(round(np.sqrt(n2)))
    rt_mat = None if dissipator is None else dissipator.matrix

    if form == "free":
        design = None
        n_params = n2 * n2
    elif form == "hermitian":
        if dim != 3:
            raise DimensionError("hermitian form is defined for qutrits only")
        design = _hermitian_design()
        n_params = 9
    elif form == "fields":
        gens = list(field_generators) if field_generators else _spin_generators()
        design = _field_design(gens)
        n_params = design.shape[1]
    else:
        raise ValueError(f"unknown constraint form {form!r}")

    def build(theta):
        b = theta.reshape(n2, n2) if design is None else (design @ theta).reshape(n2, n2)
        return b - rt_mat if rt_mat is not None else b

    def fun(theta):
        cost, grad_l = _cost_and_matrix_grad(build(theta), pmeas)
        grad = grad_l.ravel() if design is None else design.T @ grad_l.ravel()
        return cost, grad

    if x0 is None:
        b0 = _direct_init(pmeas, rt_mat, dim)
        if design is None:
            x0 = b0.ravel()
        else:
            x0, _, _, _ = np.linalg.lstsq(design, b0.ravel(), rcond=None)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n_params,):
        raise DimensionError(f"x0 has shape {x0.shape}, expected ({n_params},)")

    best_res, best_hist = _run_lbfgs(fun, x0, max_iters)
    converged = _is_converged(best_res, best_hist, max_iters)
    attempt = 0
    while not converged and attempt < N_RESTARTS:
        rng = np.random.default_rng([1898, attempt])
        scale = 1e-3 * (np.linalg.norm(x0) + 1.0)
        res, hist = _run_lbfgs(fun, x0 + rng.normal(size=n_params) * scale, max_iters)
        if res.fun < best_res.fun:
            best_res, best_hist = res, hist
        converged = _is_converged(best_res, best_hist, max_iters)
        attempt += 1

    theta = best_res.x
    l_hat = build(theta)
    dfs = np.array(
        [
            frobenius_distance(p, scipy.linalg.expm(l_hat * t))
            for t, p in pmeas
        ]
    )
    extras = {}
    if rt_mat is not None:
        extras["hamiltonian_superop"] = Superoperator(
            dim=dim, matrix=l_hat + rt_mat
        )
    if form == "hermitian":
        extras["hermitian_params"] = HermitianParams(h=theta)
    return FitReport(
        model=f"mle-{form}",
        estimate=Superoperator(dim=dim, matrix=l_hat),
        params=theta,
        cost=float(best_res.fun),
        df_per_time=dfs,
        iterations=int(best_res.nit),
        converged=converged,
        extras=extras,
    )


# ---------------------------------------------------------------------------
# Physical-model decompositions
# ---------------------------------------------------------------------------


def _relaxation_design() -> np.ndarray:
    f = spin1_operators()
    basis = build_basis(3)
    cols = [-hamiltonian_superop(fk, basis).matrix.ravel() for fk in f]
    cols += [dissipator_superop([fk], basis).matrix.ravel() for fk in f]
    iso = np.eye(9)
    iso[8, 8] = 0.0
    cols.append(iso.ravel())
    return np.column_stack(cols)


def fit_relaxation_model(rt: Superoperator) -> FitReport:
    """Decompose a relaxation matrix into the three-channel model.

    Linear least squares over (Omega_x, Omega_y, Omega_z, gamma_x, gamma_y,
    gamma_z, gamma_iso): the model matrix is linear in all seven
    parameters.  Rates are constrained non-negative; the residual norm of
    the non-representable component is reported, never raised.
    """
    if rt.dim != 3:
        raise DimensionError("relaxation model is defined for qutrits only")
    a = _relaxation_design()
    b = rt.matrix.ravel()
    lb = np.array([-np.inf] * 3 + [0.0] * 4)
    ub = np.full(7, np.inf)
    sol = scipy.optimize.lsq_linear(a, b, bounds=(lb, ub))
    residual = float(np.linalg.norm(a @ sol.x - b))
    model = RelaxationModel(
        omega_residual=sol.x[:3], gamma_dephase=sol.x[3:6], gamma_iso=float(sol.x[6])
    )
    return FitReport(
        model="relaxation",
        estimate=model,
        params=sol.x,
        cost=residual**2,
        iterations=int(getattr(sol, "nit", 1) or 1),
        converged=True,
        param_names=RELAXATION_PARAM_NAMES,
        extras={"residual": residual},
    )


def direct_hamiltonian(
    ts: TomographySet, rt: Superoperator, times: Sequence[float]
) -> FitReport:
    """Averaged direct estimate of a static Hamiltonian generator.

    For each admissible time the generator log-estimate is taken, the known
    relaxation matrix is added back (isolating the Hamiltonian part), and
    the per-time estimates are averaged; a final least-squares projection
    onto the Hermitian parametrization enforces physicality.  Times where
    the logarithm hits the branch cut are skipped with a warning.
    """
    per_time = []
    skipped = []
    for t in times:
        try:
            l_est = direct_liouvillian(ts, t)
        except (BranchCutError, SingularProcessError) as err:
            warnings.warn(f"skipping t = {t}: {err}", stacklevel=2)
            skipped.append((float(t), str(err)))
            continue
        per_time.append(l_est.matrix + rt.matrix)
    if not per_time:
        raise BranchCutError("no evolution time admits a principal logarithm")
    mean_superop = Superoperator(dim=ts.dim, matrix=np.mean(per_time, axis=0))
    fit = params_from_superop(mean_superop)
    k_hat = explicit_qutrit_superop(fit.params).matrix
    dfs = []
    for t in times:
        if float(t) not in ts.outputs:
            continue
        # df against the model-predicted propagator at this time
        p_hat = scipy.linalg.expm((k_hat - rt.matrix) * t)
        dfs.append(frobenius_distance(reconstruct_process(ts, t).matrix, p_hat))
    return FitReport(
        model="direct-hamiltonian",
        estimate=fit.params,
        params=fit.params.h,
        cost=fit.residual**2,
        df_per_time=np.array(dfs),
        iterations=1,
        converged=True,
        extras={
            "mean_superop": mean_superop,
            "residual": fit.residual,
            "skipped_times": skipped,
        },
    )


# ---------------------------------------------------------------------------
# Time-resolved multiparameter field estimation
# ---------------------------------------------------------------------------


@dataclass
class FieldTrack:
    """Per-interval field estimates from a stepwise reconstruction.

    ``omegas`` has one row (Omega_x, Omega_y, Omega_z) per interval when
    the field form is known; otherwise ``params`` holds the nine Hermitian
    parameters per interval.  ``times`` are interval midpoints.  Steps
    whose total field magnitude is small are flagged: the normalized error
    metric diverges there, an artifact of the normalization rather than of
    the reconstruction.
    """

    times: np.ndarray
    known_form: bool
    method: str
    report: FitReport
    omegas: Optional[np.ndarray] = None
    params: Optional[np.ndarray] = None
    flagged: Optional[np.ndarray] = None

    def hamiltonian_superops(self) -> list[Superoperator]:
        """Reconstructed Hamiltonian generator per interval."""
        if self.known_form:
            gens = _spin_generators()
            return [
                Superoperator(
                    dim=3, matrix=sum(om[k] * gens[k].matrix for k in range(3))
                )
                for om in self.omegas
            ]
        return [explicit_qutrit_superop(HermitianParams(h=h)) for h in self.params]

    def as_rows(self) -> list[tuple]:
        """(t_n, Omega_x, Omega_y, Omega_z) rows (known form only)."""
        if not self.known_form:
            return [(t, *h) for t, h in zip(self.times, self.params)]
        return [(t, *om) for t, om in zip(self.times, self.omegas)]


def estimate_fields(
    psteps: Sequence[ProcessMatrix],
    grid: TimeGrid,
    rt: Superoperator,
    known_form: bool = True,
    method: str = "direct",
) -> FieldTrack:
    """Track time-dependent fields from per-interval process matrices.

    Args:
        psteps: one process matrix per grid interval (stepwise
            reconstruction output).
        grid: uniform measurement grid; estimates are labelled with the
            interval midpoints.
        rt: fixed relaxation matrix, added back before reading off the
            Hamiltonian part.
        known_form: if True, each interval is reduced to the three Larmor
            frequencies (Omega_x, Omega_y, Omega_z); if False, the full
            nine Hermitian parameters are returned per interval.
        method: ``"direct"`` (log + least-squares projection) or ``"mle"``
            (per-interval cost minimization, Hermitian or field-parametric
            by construction).

    Branch-cut errors propagate per step; steps with nearly vanishing
    total field are flagged in the result.
    """
    if grid.step is None:
        raise ValueError("field estimation expects a uniform time grid")
    if len(psteps) != grid.n_intervals:
        raise DimensionError(
            f"{len(psteps)} process matrices for {grid.n_intervals} intervals"
        )
    if method not in ("direct", "mle"):
        raise ValueError(f"unknown method {method!r}")

    gens = _spin_generators()
    gen_design = _field_design(gens)
    herm_design = _hermitian_design()
    rows = []
    costs = []
    dfs = []
    iterations = 0
    converged = True
    for p in psteps:
        dt = p.duration_s
        log = principal_log(p)
        k_direct = log.matrix / dt + rt.matrix
        if known_form:
            theta0, _, _, _ = np.linalg.lstsq(gen_design, k_direct.ravel(), rcond=None)
            design = gen_design
        else:
            theta0, _, _, _ = np.linalg.lstsq(herm_design, k_direct.ravel(), rcond=None)
            design = herm_design
        if method == "direct":
            theta = theta0
            resid = float(np.linalg.norm(design @ theta - k_direct.ravel()))
            costs.append(resid**2)
        else:
            sub = mle_liouvillian(
                [(dt, p)],
                dissipator=rt,
                form="fields" if known_form else "hermitian",
                field_generators=gens if known_form else None,
                x0=theta0,
            )
            theta = sub.params
            costs.append(sub.cost)
            iterations += sub.iterations
            converged = converged and sub.converged
        rows.append(theta)
        k_hat = (design @ theta).reshape(9, 9)
        dfs.append(
            frobenius_distance(p.matrix, scipy.linalg.expm((k_hat - rt.matrix) * dt))
        )

    rows = np.array(rows)
    if known_form:
        magnitudes = np.linalg.norm(rows, axis=1)
    else:
        magnitudes = np.array(
            [np.linalg.norm((herm_design @ h).reshape(9, 9)) for h in rows]
        )
    if magnitudes.max() > 0:
        flagged = magnitudes < 0.1 * magnitudes.max()
    else:
        flagged = np.ones(len(rows), dtype=bool)
    report = FitReport(
        model=f"fields-{method}-{'known' if known_form else 'unknown'}",
        estimate=rows,
        params=rows.ravel(),
        cost=float(np.sum(costs)),
        df_per_time=np.array(dfs),
        iterations=iterations if method == "mle" else 1,
        converged=converged,
    )
    return FieldTrack(
        times=grid.midpoints,
        known_form=known_form,
        method=method,
        report=report,
        omegas=rows if known_form else None,
        params=None if known_form else rows,
        flagged=flagged,
    )


# ---------------------------------------------------------------------------
# Bootstrap uncertainty quantification
# ---------------------------------------------------------------------------


@dataclass
class BootstrapResult:
    """Percentile bootstrap bounds (16th/84th) per parameter."""

    low: np.ndarray
    high: np.ndarray
    samples: np.ndarray
    n_failed: int
    failures: list

    def contains(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.low <= truth) & (truth <= self.high)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed for draw ``index``."""
    return int(np.random.SeedSequence([seed, index + 1]).generate_state(1)[0])


def bootstrap(
    fit: Callable[[TomographySet], np.ndarray],
    dataset_factory: Callable,
    noise,
    n_draws: int = 1000,
) -> BootstrapResult:
    """Re-run a fit on ``n_draws`` re-simulated noisy datasets.

    Args:
        fit: maps a dataset to a flat parameter vector.
        dataset_factory: maps a NoiseSpec (with a per-draw derived seed) to
            a synthetic dataset.
        noise: base NoiseSpec; its seed anchors the deterministic per-draw
            seeds.
        n_draws: number of bootstrap datasets (>= 2).

    Returns:
        BootstrapResult with asymmetric 16th/84th-percentile bounds, the
        raw samples, and the recorded failures.

    Raises:
        BootstrapError: if more than 10% of draws fail.
    """
    if n_draws < 2:
        raise ValueError("bootstrap needs at least 2 draws")
    samples = []
    failures = []
    for draw in range(n_draws):
        spec = dataclasses.replace(noise, seed=derive_seed(noise.seed, draw))
        try:
            samples.append(np.asarray(fit(dataset_factory(spec)), dtype=float))
        except Exception as err:  # noqa: BLE001 - recorded, bounded below
            failures.append(f"draw {draw}: {err}")
    if len(failures) > 0.1 * n_draws:
        raise BootstrapError(
            f"{len(failures)}/{n_draws} bootstrap draws failed; first: {failures[0]}"
        )
    samples = np.array(samples)
    low, high = np.percentile(samples, [16, 84], axis=0)
    return BootstrapResult(
        low=low, high=high, samples=samples, n_failed=len(failures), failures=failures
    )
