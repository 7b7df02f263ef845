"""Task runners: one function per manifest task, sharing a small state."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import dirac, foliation, poisson
from ..errors import ConfigError, FoliateError
from ..exterior import Form, VolumeForm
from ..expr import ScalarExpr
from ..verify import FAIL, CheckResult, check_zero
from .manifest import Manifest


@dataclass
class State:
    manifest: Manifest
    fol: foliation.FoliationPresentation | None = None
    frame: foliation.DualFrame | None = None
    structure: poisson.PoissonStructure | None = None
    extra: dict = field(default_factory=dict)

    def name(self, ref) -> object:
        return self.manifest.names[ref]

    def scalar(self, ref) -> ScalarExpr:
        v = self.name(ref)
        return v if isinstance(v, ScalarExpr) else v.scalar_part()

    def two_form(self, task) -> Form:
        return self.name(task.get("two_form", self.manifest.two_form))

    def get_frame(self) -> foliation.DualFrame:
        if self.frame is None:
            self.frame = foliation.dual_frame(self.fol)
        return self.frame

    def need_structure(self) -> poisson.PoissonStructure:
        if self.structure is None:
            raise _Unavailable("no Poisson structure is available (build-poisson failed)")
        return self.structure


class _Unavailable(FoliateError):
    pass


def _failure(name: str, exc: Exception) -> CheckResult:
    result = getattr(exc, "result", None)
    note = f"{type(exc).__name__}: {exc}"
    if isinstance(result, CheckResult):
        return CheckResult(result.name, FAIL, result.max_abs_residual, result.magnitude_scale,
                           result.worst_point, result.points_used, result.points_rejected,
                           result.tol_abs, result.tol_rel, note)
    return CheckResult(name, FAIL, float("nan"), float("nan"), None, 0, 0, 0.0, 0.0, note)


def run_check_foliation(state: State, task: dict) -> list[CheckResult]:
    m = state.manifest
    gens = [state.name(g) for g in m.foliation]
    out = [foliation.check_integrability(gens, m.box, m.sampling)]
    if not out[0].passed:
        return out
    frame = state.get_frame()
    out.append(frame.check)
    out.append(foliation.connection_matrix(state.fol, frame).check)
    return out


def run_delta(state: State, task: dict) -> list[CheckResult]:
    delta = foliation.delta_form(state.fol, state.get_frame())
    suite = foliation.delta_wellposedness_suite(state.fol)
    return [delta.structure, delta.closed] + suite.results


def run_obstruction(state: State, task: dict) -> list[CheckResult]:
    cert = foliation.obstruction_certificate(state.fol, state.scalar(task["certificate"]))
    out = [cert.result]
    if cert.closure is not None:
        out.append(cert.closure)
    return out


def run_check_compatible(state: State, task: dict) -> list[CheckResult]:
    return poisson.check_compatible(state.two_form(task), state.fol).results()


def _volume(state: State, ref) -> VolumeForm:
    m = state.manifest
    if ref is None:
        return VolumeForm.standard(m.coords)
    return VolumeForm(state.name(ref), box=m.box, points=m.sampling.points, seed=m.sampling.seed)


def run_build_poisson(state: State, task: dict) -> list[CheckResult]:
    m = state.manifest
    state.structure = None
    if "bivector" in task:
        volume = _volume(state, task.get("volume", m.volume))
        state.structure = poisson.PoissonStructure(
            state.name(task["bivector"]), volume, m.box, m.sampling,
            state.fol, None)
        return []
    state.structure = poisson.poisson_from_compatible(state.fol, state.two_form(task))
    return list(state.structure.construction.results)


def run_jacobi(state: State, task: dict) -> list[CheckResult]:
    return list(poisson.jacobi_routes(state.need_structure()))


def run_modular(state: State, task: dict) -> list[CheckResult]:
    P = state.need_structure()
    volume = _volume(state, task["volume"]) if "volume" in task else None
    out = list(poisson.modular_field(P, volume, strict=False).checks.results)
    if "rescale" in task:
        out.append(poisson.rescale_check(P, state.scalar(task["rescale"]), volume))
    return out


def run_unimodular(state: State, task: dict) -> list[CheckResult]:
    P = state.need_structure()
    return [poisson.unimodular_certificate(P, state.scalar(task["certificate"]), state.fol)]


def run_transversal(state: State, task: dict) -> list[CheckResult]:
    P = state.need_structure()
    frame = state.get_frame()
    omega = state.two_form(task)
    if task.get("normalize", False):
        omega = poisson.normalize_compatible(omega, state.fol, frame)
    return poisson.transversally_constant_check(P, state.fol, frame, omega).results


def run_dirac(state: State, task: dict) -> list[CheckResult]:
    m = state.manifest
    S = dirac.invert_symplectic(state.name(task["symplectic"]), m.box, m.sampling)
    D = dirac.build_dirac(S, [state.scalar(g) for g in task["constraints"]])
    return [S.inverse_check] + dirac.verify_dirac(D).results


def run_custom(state: State, task: dict) -> list[CheckResult]:
    m = state.manifest
    s = m.sampling
    label = task.get("label", task["expression"])
    return [check_zero(state.name(task["expression"]), m.box, s.points, s.seed,
                       s.tol_abs, s.tol_rel, label)]


RUNNERS = {
    "check-foliation": run_check_foliation,
    "delta": run_delta,
    "obstruction-certificate": run_obstruction,
    "check-compatible": run_check_compatible,
    "build-poisson": run_build_poisson,
    "jacobi": run_jacobi,
    "modular": run_modular,
    "unimodular-certificate": run_unimodular,
    "transversally-constant": run_transversal,
    "dirac": run_dirac,
    "custom-zero-check": run_custom,
}


def run_task(state: State, task: dict) -> list[CheckResult]:
    """Run one task; domain errors become a FAIL result rather than escaping."""
    kind = task["task"]
    try:
        return RUNNERS[kind](state, task)
    except ConfigError:
        raise
    except (FoliateError, ValueError) as exc:
        return [_failure(kind, exc)]


def make_state(manifest: Manifest) -> State:
    state = State(manifest)
    if manifest.foliation is not None:
        gens = [manifest.names[g] for g in manifest.foliation]
        state.fol = foliation.FoliationPresentation(gens, manifest.box, manifest.coords,
                                                    manifest.sampling)
    return state
