"""Named experiments: data, solver or oracle, functionals and pass/fail verdicts.

Each recipe takes a :class:`~nlw_morawetz.config.RunConfig` (null fields mean
"recipe default") and returns an :class:`ExperimentReport` holding metric
series and verdicts. Runs are deterministic: same config, same numbers.
"""
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import BOUNDARY_MARGIN, RunConfig
from .free_wave import (DalembertOracle, evolve_mode, evolve_mode_two_sided, mode_data,
                        mode_energy, velocity_data)
from .functionals import (LocalizedAccumulator, ModeAccumulator, MorawetzLedger, VirialLedger,
                          conformal, energy, equipartition_defect, flux, localized_energy,
                          lp_norm, morawetz_boundary, outgoing_defect, pairing)
from .initial_data import (InitialData, Verdict as ThresholdVerdict, compact_bump, gaussian_bump,
                           ground_state_W, ground_state_data, hdot1_rescale, kenig_merle_check,
                           pohozaev_defect)
from .radial_grid import FieldState, integrate_ball, make_grid, radial_derivative
from .solver import SolverConfig, evolve, evolve_two_sided
from .weights import (HypothesisError, audit_weight, cutoff_family, rescale_morawetz,
                      rescale_virial, weight_bracket, weight_smoothed_abs)

log = logging.getLogger(__name__)


# ----------------------------------------------------------------- reports

@dataclass
class Check:
    label: str
    passed: bool
    value: float
    tolerance: float
    metric: str
    note: str = ""

    def as_dict(self):
        return {"label": self.label, "passed": bool(self.passed), "value": _num(self.value),
                "tolerance": _num(self.tolerance), "metric": self.metric, "note": self.note}


@dataclass
class ExperimentReport:
    name: str
    anchor: str
    params: dict
    metrics: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    runtime: float = 0.0
    notes: list = field(default_factory=list)
    blowup_time: float = None

    @property
    def passed(self):
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def series(self, label, points):
        self.metrics[label] = [(float(x), float(y)) for x, y in points]
        return label

    def check(self, label, passed, value, tolerance, metric, note=""):
        if metric not in self.metrics:
            raise KeyError(f"verdict {label!r} refers to missing metric {metric!r}")
        self.verdicts.append(Check(label, bool(passed), float(value), float(tolerance), metric, note))

    def verdict(self, label):
        for v in self.verdicts:
            if v.label == label:
                return v
        raise KeyError(label)

    def as_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "params": self.params,
            "metrics": [{"label": k, "series": [[_num(x), _num(y)] for x, y in s]}
                        for k, s in self.metrics.items()],
            "verdicts": [v.as_dict() for v in self.verdicts],
            "passed": self.passed,
            "runtime": self.runtime,
            "blowup_time": _num(self.blowup_time) if self.blowup_time is not None else None,
            "notes": list(self.notes),
        }


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


class ExperimentBlowUp(RuntimeError):
    def __init__(self, label, blowup):
        super().__init__(f"{label}: blow-up signal at t = {blowup.time:.4g} ({blowup.reason})")
        self.label = label
        self.blowup = blowup


# ------------------------------------------------------------------ helpers

def _pick(value, default):
    return default if value is None else value


def _grid(cfg, dr=None):
    return make_grid(cfg.n_dim, dr or cfg.dr, cfg.r_max)


def _solver(cfg, grid, lam, t_max, default_cfl=0.5):
    return SolverConfig(lam, grid.n_dim, grid.dr, cfg.cfl_for(default_cfl) * grid.dr, t_max)


def _data(cfg, grid, **defaults):
    spec = {k: _pick(getattr(cfg.data, k), defaults.get(k)) for k in
            ("kind", "amplitude", "width", "rho", "mode", "alpha")}
    kind = spec["kind"] or "gaussian"
    mode = spec["mode"] or "displacement"
    if kind == "gaussian":
        return gaussian_bump(_pick(spec["amplitude"], 0.5), _pick(spec["width"], 1.0), mode, grid)
    if kind == "compact":
        return compact_bump(_pick(spec["rho"], 1.0), mode, grid, _pick(spec["amplitude"], 1.0))
    if kind == "ground_state":
        return ground_state_data(grid, _pick(spec["alpha"], 1.0))
    raise ValueError(f"unknown data generator {kind!r}")


def _completed(traj, label):
    for t in traj if isinstance(traj, tuple) else (traj,):
        if t.blowup is not None:
            raise ExperimentBlowUp(label, t.blowup)


def _morawetz_weights(cfg, n):
    w = cfg.weight
    k, R = int(_pick(w.k, 4)), float(_pick(w.R, 10.0))
    options = {
        "bracket": lambda: weight_bracket(n),
        "smoothed_abs": lambda: weight_smoothed_abs(n, _pick(w.eps, 1e-3)),
        "psi": lambda: rescale_morawetz(cutoff_family(k), R, n),
    }
    names = [w.name] if w.name in options else ["bracket", "psi"]
    weights = [options[nm]() for nm in names]
    for wt in weights:
        audit_weight(wt)
    return weights


def _virial_weight(cfg, n, k=1, R=10.0):
    w = cfg.weight
    if w.name == "phi":
        k, R = _pick(w.k, k), _pick(w.R, R)
    wt = rescale_virial(cutoff_family(int(k)), float(R), n)
    audit_weight(wt)
    return wt


def _fit_slope(x, y):
    if len(x) < 2:
        return math.nan
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


TREND_FLOOR = 1e-3


def _monotone_approach(errors, floor=TREND_FLOOR):
    """True when |error| never grows by more than ``floor`` along the sequence.

    Changes below the discretization floor of the identities are not resolved.
    """
    e = np.abs(np.asarray(errors, dtype=float))
    return bool(np.all(np.diff(e) <= floor))


class _Window:
    """Restrict an observer to |t| <= T, with trapezoid end weights at +-T."""

    def __init__(self, obs, T, dt):
        self.obs, self.T, self.dt = obs, T, dt

    def __call__(self, state, w):
        at = abs(state.t)
        if at > self.T + 1e-9 * self.dt:
            return
        if abs(at - self.T) <= 1e-9 * self.dt:
            w = 0.5 * self.dt
        self.obs(state, w)


class _Snapshots:
    """Evaluate ``fn(state)`` at the listed |t| values on both halves of a run."""

    def __init__(self, times, fn, dt):
        self.times = [float(t) for t in times]
        self.fn, self.dt = fn, dt
        self.values = {}

    def __call__(self, state, w):
        for T in self.times:
            if abs(abs(state.t) - T) <= 1e-9 * self.dt:
                self.values[(T, 1 if state.t >= 0 else -1)] = self.fn(state)


def _two_sided_oracle(data, T, dt, observers):
    oracle = DalembertOracle(data, T)
    oracle.trajectory(T, dt, observers)
    return oracle


# ---------------------------------------------------------------- recipes

def exp_energy_conservation(cfg, rep):
    t_max = _pick(cfg.t_max, 50.0)
    lams = [cfg.lam] if cfg.lam is not None else [0.0, 1.0, -1.0]
    grid = _grid(cfg)
    for lam in lams:
        data = _data(cfg, grid, kind="gaussian", amplitude=0.5)
        scfg = _solver(cfg, grid, lam, t_max, default_cfl=0.25)
        # grid measure at t = 0 as well, so the drift compares like with like
        e0 = energy(FieldState(data.f, data.g, 0.0, grid), lam, grid)
        series = []
        stride = scfg.energy_stride

        def obs(state, w, _series=series, _e0=e0, _lam=lam):
            k = int(round(abs(state.t) / scfg.dt))
            if k % stride == 0:
                e = energy(state, _lam, grid).total
                _series.append((state.t, abs(e - _e0.total) / abs(_e0.total)))

        traj = evolve(data, scfg, [obs])
        _completed(traj, f"lambda={lam:g}")
        m = rep.series(f"drift[lambda={lam:g}]", series)
        drift = max(v for _, v in series)
        rep.check(f"relative energy drift <= 1e-4 (lambda={lam:g})", drift <= 1e-4, drift, 1e-4, m,
                  note=f"dt/dr = {scfg.cfl:g}")
        if lam < 0:
            thr = kenig_merle_check(data)
            m = rep.series(f"threshold[lambda={lam:g}]",
                           [(0, thr.energy_lhs), (1, thr.energy_rhs), (2, thr.grad_f), (3, thr.grad_W)])
            rep.check("focusing data is subthreshold", thr.verdict == ThresholdVerdict.SUBTHRESHOLD_GLOBAL,
                      thr.grad_f / thr.grad_W, 1.0, m, note=thr.verdict)


def exp_convergence_study(cfg, rep):
    refine = [float(x) for x in _pick(cfg.refine, [0.04, 0.02, 0.01])]
    t_end = _pick(cfg.t_max, 10.0)
    rho = _pick(cfg.data.rho, 5.0)
    errs = []
    for dr in refine:
        grid = _grid(cfg, dr)
        data = compact_bump(rho, _pick(cfg.data.mode, "displacement"), grid,
                            _pick(cfg.data.amplitude, 1.0))
        scfg = _solver(cfg, grid, 0.0, t_end)
        traj = evolve(data, scfg)
        _completed(traj, f"dr={dr:g}")
        exact = DalembertOracle(data, t_end).state(t_end)
        errs.append(float(np.max(np.abs(traj.final.u - exact.u))))
        if dr == refine[-1]:
            # finite speed of propagation and time reversibility on the finest grid
            outside = grid.r > rho + t_end + 2 * dr
            spill = float(np.max(np.abs(traj.final.u[outside]))) if np.any(outside) else 0.0
            loud = np.nonzero(np.abs(traj.final.u) > 1e-12)[0]
            reach = (grid.r[loud[-1]] - rho - t_end) / dr if len(loud) else 0.0
            back = evolve(_reverse(traj.final, data), scfg)
            e = _energy_norm_diff(back.final, data.state(), grid, flip=True)
            scale = math.sqrt(energy(data.state(), 0.0, grid).total)
    m = rep.series("sup_error", zip(refine, errs))
    order = _fit_slope(refine, errs)
    pair = [math.log(errs[i] / errs[i + 1]) / math.log(refine[i] / refine[i + 1])
            for i in range(len(errs) - 1)]
    rep.series("pairwise_order", zip(refine[1:], pair))
    ok = 1.8 <= order <= 2.2 and all(1.8 <= p <= 2.2 for p in pair)
    rep.check("solver/oracle sup-error order in [1.8, 2.2]", ok, order, 2.0, m,
              note="pairwise " + ", ".join(f"{p:.3f}" for p in pair))
    m = rep.series("finite_speed_spill", [(t_end, spill)])
    rep.check("no signal beyond rho + t + 2 dr", spill <= 1e-12, spill, 1e-12, m)
    rep.series("precursor_cells_above_1e-12", [(refine[-1], reach)])
    rel = e / scale
    m = rep.series("reversibility_error", [(refine[-1], rel)])
    tol = 10 * refine[-1] ** 2
    rep.check("forward-back evolution recovers data", rel <= tol, rel, tol, m)


def _reverse(state, data):
    return InitialData(state.u.copy(), -state.ut, data.grid, math.inf, data.name, {})


def _energy_norm_diff(a, b, grid, flip=False):
    du = radial_derivative(a.u - b.u, grid.dr)
    dut = (-a.ut if flip else a.ut) - b.ut
    return math.sqrt(integrate_ball(du * du + dut * dut, grid))


def _identity_refinement(cfg, rep, kind):
    refine = [float(x) for x in _pick(cfg.refine, [0.04, 0.02, 0.01])]
    T = _pick(cfg.t_max, 20.0)
    lams = [cfg.lam] if cfg.lam is not None else [0.0, 1.0, -1.0]
    n = cfg.n_dim
    weights = _morawetz_weights(cfg, n) if kind == "morawetz" else [_virial_weight(cfg, n)]
    table = {}
    for lam in lams:
        for dr in refine:
            grid = _grid(cfg, dr)
            data = _data(cfg, grid, kind="gaussian", amplitude=0.5)
            scfg = _solver(cfg, grid, lam, T)
            ledgers = [(MorawetzLedger if kind == "morawetz" else VirialLedger)(w, lam, grid)
                       for w in weights]
            traj = evolve_two_sided(data, scfg, ledgers)
            _completed(traj, f"lambda={lam:g}, dr={dr:g}")
            e0 = energy(data.state(), lam, grid).total
            for w, led in zip(weights, ledgers):
                led.close(traj[0].final, traj[1].final)
                scale = e0 * (w.d1_at_infinity if kind == "morawetz" else 1.0)
                table.setdefault((lam, w.name), []).append(abs(led.residual) / abs(scale))
    for (lam, wname), res in table.items():
        m = rep.series(f"{kind}_residual[lambda={lam:g},weight={wname}]", zip(refine, res))
        rep.check(f"{kind} residual <= 1e-3 at dr={refine[-1]:g} (lambda={lam:g}, {wname})",
                  res[-1] <= 1e-3, res[-1], 1e-3, m)
        order = _fit_slope(refine, res)
        rep.check(f"{kind} residual order >= 1.8 (lambda={lam:g}, {wname})", order >= 1.8,
                  order, 1.8, m)


def _boundary_limit(cfg, rep):
    times = [float(t) for t in _pick(cfg.schedule.times, [10.0, 20.0, 30.0, 50.0])]
    T = max(times)
    n = cfg.n_dim
    weights = _morawetz_weights(cfg, n)
    grid = _grid(cfg)
    dt = cfg.cfl_for(0.5) * grid.dr

    def run(label, lam, data, tol, use_oracle):
        e0 = energy(data.state(), lam, grid).total
        snaps = [_Snapshots(times, lambda s, _w=w: _boundary_pair(s, _w, grid), dt) for w in weights]
        if use_oracle:
            oracle = DalembertOracle(data, T)
            for t in times:
                for sgn in (1, -1):
                    st = oracle.state(sgn * t)
                    for sn in snaps:
                        sn(st, 0.0)
        else:
            traj = evolve_two_sided(data, _solver(cfg, grid, lam, T), snaps)
            _completed(traj, label)
        for w, sn in zip(weights, snaps):
            ratios = [(sn.values[(t, 1)][0] + sn.values[(t, -1)][1]) / (w.d1_at_infinity * e0)
                      for t in times]
            m = rep.series(f"boundary_ratio[{label},weight={w.name}]", zip(times, ratios))
            err = abs(ratios[-1] - 1.0)
            rep.check(f"boundary sum within {tol:.0%} of psi'(inf) E at T={T:g} ({label}, {w.name})",
                      err <= tol, err, tol, m)
            rep.check(f"boundary sum approaches psi'(inf) E monotonically ({label}, {w.name})",
                      _monotone_approach([r - 1 for r in ratios]), err, TREND_FLOOR, m,
                      note="|error| may not grow by more than the floor")

    if n == 3:
        run("free oracle", 0.0, compact_bump(_pick(cfg.data.rho, 1.0), "displacement", grid), 0.05, True)
    lams = [cfg.lam] if cfg.lam is not None else [1.0, -1.0]
    for lam in lams:
        if lam == 0 and n == 3:
            continue
        data = _data(cfg, grid, kind="gaussian", amplitude=0.5)
        run(f"lambda={lam:g}", lam, data, 0.08, False)


def _boundary_pair(state, weight, grid):
    return (morawetz_boundary(state, weight, grid, +1), morawetz_boundary(state, weight, grid, -1))


def exp_morawetz_identity(cfg, rep):
    _identity_refinement(cfg, rep, "morawetz")
    _boundary_limit(cfg, rep)


def _radii(cfg, default=(5.0, 10.0, 20.0, 40.0)):
    return [float(R) for R in _pick(cfg.schedule.radii, list(default))]


def _windowed(make, radii, margin, dt):
    accs = {R: make() for R in radii}
    return accs, [_Window(accs[R], R + margin, dt) for R in radii]


def _free_localized(cfg, grid, radii, margin):
    data = compact_bump(_pick(cfg.data.rho, 1.0), _pick(cfg.data.mode, "displacement"), grid)
    dt = cfg.cfl_for(0.5) * grid.dr
    accs, obs = _windowed(lambda: LocalizedAccumulator(grid, 0.0), radii, margin, dt)
    _two_sided_oracle(data, max(radii) + margin, dt, obs)
    return data, accs


def exp_localized_limits(cfg, rep):
    radii = _radii(cfg)
    margin = cfg.schedule.margin
    grid = _grid(cfg)
    if grid.n_dim != 3:
        raise ValueError("localized_limits uses the 3D oracle; set n_dim = 3")
    data, accs = _free_localized(cfg, grid, radii, margin)
    e0 = energy(data.state(), 0.0, grid).total
    rg = [localized_energy(accs[R], R, "radial_grad") / e0 for R in radii]
    m = rep.series("radial_grad_over_E", zip(radii, rg))
    R0 = 20.0 if 20.0 in radii else radii[len(radii) // 2]
    err = abs(rg[radii.index(R0)] - 1.0)
    rep.check(f"(1/R) radial gradient integral within 5% of E at R={R0:g}", err <= 0.05, err, 0.05, m,
              note=f"T = R + {margin:g}")
    rep.check("radial localized energy non-decreasing in R",
              all(localized_energy(accs[R], R, "radial_grad") * R <=
                  localized_energy(accs[S], S, "radial_grad") * S * (1 + 1e-12)
                  for R, S in zip(radii, radii[1:])), 0.0, 0.0, m, note="un-normalized integrals")
    l2 = [localized_energy(accs[R], R, "l2star") for R in radii]
    m = rep.series("l2star", zip(radii, l2))
    ratio = l2[-1] / l2[0]
    rep.check(f"l2star at R={radii[-1]:g} <= 25% of R={radii[0]:g}", ratio <= 0.25, ratio, 0.25, m)

    ell = 1
    mode = mode_data(ell, grid, rho=_pick(cfg.data.rho, 1.0))
    dt = cfg.cfl_for(0.5) * grid.dr
    maccs, mobs = _windowed(lambda: ModeAccumulator(grid, ell), radii, margin, dt)
    evolve_mode_two_sided(mode, max(radii) + margin, _solver(cfg, grid, 0.0, max(radii) + margin), mobs)
    tg = [localized_energy(maccs[R], R, "tangential_grad") for R in radii]
    m = rep.series("tangential_grad[l=1]", zip(radii, tg))
    ratio = tg[-1] / tg[0]
    rep.check(f"l=1 tangential localized energy at R={radii[-1]:g} <= 25% of R={radii[0]:g}",
              ratio <= 0.25, ratio, 0.25, m)


def exp_equipartition(cfg, rep):
    _identity_refinement(cfg, rep, "virial")
    radii = _radii(cfg, (5.0, 10.0, 20.0, 40.0))
    margin = cfg.schedule.margin
    R0 = 20.0 if 20.0 in radii else radii[len(radii) // 2]
    grid = _grid(cfg)
    dt = cfg.cfl_for(0.5) * grid.dr
    cases = []
    if grid.n_dim == 3:
        data, accs = _free_localized(cfg, grid, radii, margin)
        cases.append(("free oracle", 0.0, data, accs, 0.05, 0.08))
    lams = [cfg.lam] if cfg.lam is not None else [1.0, -1.0]
    for lam in lams:
        data = _data(cfg, grid, kind="gaussian", amplitude=0.5)
        accs, obs = _windowed(lambda: LocalizedAccumulator(grid, lam), radii, margin, dt)
        traj = evolve_two_sided(data, _solver(cfg, grid, lam, max(radii) + margin), obs)
        _completed(traj, f"lambda={lam:g}")
        cases.append((f"lambda={lam:g}", lam, data, accs, 0.05, 0.08))
    for label, lam, data, accs, tol_d, tol_f in cases:
        e0 = energy(data.state(), lam, grid).total
        defect = [localized_energy(accs[R], R, "lagrangian") / e0 for R in radii]
        m = rep.series(f"localized_defect_over_E[{label}]", zip(radii, defect))
        d = abs(defect[radii.index(R0)])
        rep.check(f"|(1/R) int int (u_t^2 - |grad u|^2)| <= 5% E at R={R0:g} ({label})",
                  d <= tol_d, d, tol_d, m)
        full = [localized_energy(accs[R], R, "spacetime_full") / (2 * e0) for R in radii]
        m = rep.series(f"full_over_2E[{label}]", zip(radii, full))
        err = abs(full[radii.index(R0)] - 1.0)
        rep.check(f"(1/R) int int energy density within 8% of 2E at R={R0:g} ({label})",
                  err <= tol_f, err, tol_f, m)


def exp_free_asymptotics(cfg, rep):
    times = [float(t) for t in _pick(cfg.schedule.times, [5.0, 10.0, 20.0, 40.0])]
    grid = _grid(cfg)
    if grid.n_dim != 3:
        raise ValueError("free_asymptotics uses the 3D oracle; set n_dim = 3")
    rho = _pick(cfg.data.rho, 1.0)
    data = compact_bump(rho, _pick(cfg.data.mode, "displacement"), grid)
    oracle = DalembertOracle(data, max(times))
    e0 = energy(data.state(), 0.0, grid).total
    rows = {k: [] for k in ("defect", "outgoing", "interior", "Q", "cap", "waves", "interior_cap")}
    for t in times:
        st = oracle.state(t)
        rep_c = conformal(st, data, grid)
        rows["defect"].append((t, abs(equipartition_defect(st, grid)) / e0))
        rows["outgoing"].append((t, outgoing_defect(st, grid) / e0))
        rows["interior"].append((t, rep_c.interior))
        rows["Q"].append((t, rep_c.Q))
        rows["cap"].append((t, rep_c.rhs_cap))
        rows["waves"].append((t, rep_c.plus_wave + rep_c.minus_wave))
        rows["interior_cap"].append((t, 16 * rep_c.rhs_cap / t ** 2))
    post = [(t, v) for t, v in rows["defect"] if t > 2 * rho]
    m = rep.series("defect_over_E", rows["defect"])
    worst = max(v for _, v in post)
    rep.check("post-Huygens |equipartition defect| <= 1e-6 E", worst <= 1e-6, worst, 1e-6, m)
    m = rep.series("outgoing_over_E", rows["outgoing"])
    worst = max(v for t, v in rows["outgoing"] if t > 2 * rho)
    rep.check("post-Huygens int |u_t + u_r|^2 <= 1e-6 E", worst <= 1e-6, worst, 1e-6, m)
    slope = _fit_slope(*zip(*rows["outgoing"]))
    rep.check("int |u_t + u_r|^2 decays like t^-2", abs(slope + 2) <= 0.2, slope, -2.0, m,
              note="fitted log-log slope")
    m = rep.series("interior_energy", rows["interior"])
    worst = max(v for t, v in rows["interior"] if t > 2 * rho)
    rep.check("post-Huygens interior-cone energy <= 1e-10", worst <= 1e-10, worst, 1e-10, m)
    mq = rep.series("conformal_Q", rows["Q"])
    rep.series("conformal_cap", rows["cap"])
    mw = rep.series("plus_minus_waves", rows["waves"])
    rep.series("interior_bound", rows["interior_cap"])
    tol = 1e-9
    ok_q = all(q <= c * (1 + tol) for (_, q), (_, c) in zip(rows["Q"], rows["cap"]))
    ok_w = all(w <= 4 * c * (1 + tol) for (_, w), (_, c) in zip(rows["waves"], rows["cap"]))
    ok_i = all(i <= b * (1 + tol) + tol for (_, i), (_, b) in zip(rows["interior"], rows["interior_cap"]))
    rep.check("conformal chain: Q <= rhs_cap at every T", ok_q, max(q / c for (_, q), (_, c) in
              zip(rows["Q"], rows["cap"])), 1.0, mq)
    rep.check("conformal chain: plus + minus waves <= 4 rhs_cap at every T", ok_w,
              max(w / c for (_, w), (_, c) in zip(rows["waves"], rows["cap"])), 4.0, mw)
    rep.check("conformal chain: interior <= 16 rhs_cap / T^2 at every T", ok_i,
              max(i for _, i in rows["interior"]), 0.0, "interior_energy")

    # slow (non-compact) data: the norm of u_t + u_r decays like 1/t
    gdata = gaussian_bump(1.0, 1.0, "displacement", grid)
    gor = DalembertOracle(gdata, 80.0)
    ts = [10.0, 20.0, 40.0, 80.0]
    vals = [math.sqrt(outgoing_defect(gor.state(t), grid)) for t in ts]
    m = rep.series("outgoing_norm[gaussian]", zip(ts, vals))
    slope = _fit_slope(ts, vals)
    rep.check("||u_t + u_r||_2 slope -1 for Gaussian data", abs(slope + 1) <= 0.1, slope, -1.0, m)

    # tangential decay of an l = 1 mode
    mode = mode_data(1, grid, rho=rho)
    t_end = 40.0
    e_start = mode_energy(mode)
    final, _ = evolve_mode(mode, t_end, _solver(cfg, grid, 0.0, t_end))
    e_end = mode_energy(final)
    m = rep.series("mode_tangential[l=1]", [(0.0, e_start["tangential"]), (t_end, e_end["tangential"])])
    ratio = e_end["tangential"] / e_start["tangential"]
    rep.check("l=1 tangential energy at t=40 <= 5% of t=0", ratio <= 0.05, ratio, 0.05, m)


def exp_flux_pairing_limits(cfg, rep):
    times = [float(t) for t in _pick(cfg.schedule.times, [10.0, 20.0, 30.0, 40.0, 50.0])]
    grid = _grid(cfg)
    n = grid.n_dim
    psi = weight_bracket(n)
    audit_weight(psi)
    phi = _virial_weight(cfg, n, k=1, R=1.0)
    T = max(times)

    def report(label, lam, data, tol, states):
        e0 = energy(data.state(), lam, grid).total
        fl = [flux(states[(t, 1)], psi, grid) / e0 for t in times]
        fb = [flux(states[(t, -1)], psi, grid) / e0 for t in times]
        pr = [max(abs(pairing(states[(t, s)], phi, grid)) for s in (1, -1)) / e0 for t in times]
        m = rep.series(f"flux_over_E[{label}]", zip(times, fl))
        rep.series(f"flux_backward_over_E[{label}]", zip(times, fb))
        err = max(abs(fl[-1] + 0.5), abs(fb[-1] - 0.5))
        rep.check(f"flux(+-T) -> -+E/2 within {tol:.0%} at T={T:g} ({label})", err <= tol, err, tol, m)
        m = rep.series(f"pairing_over_E[{label}]", zip(times, pr))
        late = max(p for t, p in zip(times, pr) if t >= 40) if any(t >= 40 for t in times) else pr[-1]
        rep.check(f"|pairing(T)| <= 0.02 E for T >= 40 ({label})", late <= 0.02, late, 0.02, m)

    if n == 3:
        data = compact_bump(_pick(cfg.data.rho, 1.0), "displacement", grid)
        oracle = DalembertOracle(data, T)
        states = {(t, s): oracle.state(s * t) for t in times for s in (1, -1)}
        report("free oracle", 0.0, data, 0.05, states)
    lams = [cfg.lam] if cfg.lam is not None else [1.0, -1.0]
    dt = cfg.cfl_for(0.5) * grid.dr
    for lam in lams:
        if lam == 0 and n == 3:
            continue
        data = _data(cfg, grid, kind="gaussian", amplitude=0.5)
        snap = _Snapshots(times, lambda s: s.copy(), dt)
        traj = evolve_two_sided(data, _solver(cfg, grid, lam, T), [snap])
        _completed(traj, f"lambda={lam:g}")
        report(f"lambda={lam:g}", lam, data, 0.08, snap.values)


def exp_l2star_decay(cfg, rep):
    times = [float(t) for t in _pick(cfg.schedule.times, [10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0])]
    grid = _grid(cfg)
    if grid.n_dim != 3:
        raise ValueError("l2star_decay uses the 3D oracle; set n_dim = 3")
    data = compact_bump(_pick(cfg.data.rho, 1.0), _pick(cfg.data.mode, "displacement"), grid)
    oracle = DalembertOracle(data, max(times))
    norms = [lp_norm(oracle.state(t), grid, 6.0) for t in times]
    m = rep.series("L6_norm", zip(times, norms))
    slope = _fit_slope(times, norms)
    rep.check("L^6 log-log slope within 0.1 of -2/3", abs(slope + 2 / 3) <= 0.1, slope, -2 / 3, m)
    rep.check("L^6 norm decreasing", all(b < a for a, b in zip(norms, norms[1:])), norms[-1], 0.0, m)


def exp_no_rate_scaling(cfg, rep):
    scales = [float(e) for e in _pick(cfg.scales, [0.5, 0.25])]
    grid = _grid(cfg)
    if grid.n_dim != 3:
        raise ValueError("no_rate_scaling uses the 3D oracle; set n_dim = 3")
    width = _pick(cfg.data.width, 1.0)
    amp = _pick(cfg.data.amplitude, 1.0)
    base = velocity_data(lambda r: amp * np.exp(-(np.asarray(r) / width) ** 2),
                         lambda r: -2 * np.asarray(r) / width ** 2 * amp * np.exp(-(np.asarray(r) / width) ** 2),
                         grid, "gaussian_velocity", {"width": width, "amplitude": amp})
    ref = lp_norm(DalembertOracle(base, 1.0).state(1.0), grid, 6.0)
    ratios = []
    for eps in scales:
        scaled = hdot1_rescale(base, eps)
        val = lp_norm(DalembertOracle(scaled, 1.0 / eps).state(1.0 / eps), grid, 6.0)
        ratios.append(val / ref)
    m = rep.series("scaling_ratio", zip(scales, ratios))
    for eps, r in zip(scales, ratios):
        rep.check(f"||S(1/eps) h_eps||_6 / ||S(1) h||_6 within 1% of 1 (eps={eps:g})",
                  abs(r - 1) <= 0.01, r, 0.01, m)


def exp_kenig_merle_dichotomy(cfg, rep):
    alphas = [float(a) for a in _pick(cfg.alphas, [0.9, 1.1])]
    t_end = _pick(cfg.t_max, 20.0)
    grid = _grid(cfg)
    lam = -1.0
    w = ground_state_W(grid)
    dW = radial_derivative(w, grid.dr)
    grad = integrate_ball(dW ** 2, grid)
    pot = integrate_ball(w ** (2 * grid.n_dim / (grid.n_dim - 2)), grid)
    rep.series("pohozaev_truncated", [(grid.r_max, abs(grad - pot) / grad)])
    poho = pohozaev_defect(grid)
    m = rep.series("pohozaev", [(grid.r_max, poho)])
    rep.check("Pohozaev |int |grad W|^2 - int W^2*| / int |grad W|^2 <= 1e-2", poho <= 1e-2, poho, 1e-2, m,
              note="grid quadrature plus analytic exterior tails")

    # W is static: check a short run away from the boundary light cone
    scfg = SolverConfig(lam, grid.n_dim, grid.dr, cfg.cfl_for(0.5) * grid.dr, 1.0)
    worst = [0.0]

    def static(state, wt):
        inner = grid.r < grid.r_max - abs(state.t) - BOUNDARY_MARGIN
        worst[0] = max(worst[0], float(np.max(np.abs(state.u[inner] - w[inner]))))

    evolve(ground_state_data(grid), scfg, [static], strict_domain=False)
    m = rep.series("W_static_error", [(1.0, worst[0])])
    rep.check("(W, 0) stays within 1e-2 of W on [0, 1]", worst[0] <= 1e-2, worst[0], 1e-2, m)

    sup_w = float(np.max(w))
    for alpha in alphas:
        data = ground_state_data(grid, alpha)
        thr = kenig_merle_check(data)
        expected = (ThresholdVerdict.SUBTHRESHOLD_GLOBAL if alpha < 1 else
                    ThresholdVerdict.SUPERTHRESHOLD_BLOWUP if alpha > 1 else ThresholdVerdict.INDETERMINATE)
        scfg = SolverConfig(lam, grid.n_dim, grid.dr, cfg.cfl_for(0.5) * grid.dr, t_end)
        peaks = []
        traj = evolve(data, scfg, [lambda s, wt: peaks.append((s.t, float(np.max(np.abs(s.u)))))
                                   if int(round(s.t / scfg.dt)) % 50 == 0 else None],
                      strict_domain=False)
        m = rep.series(f"sup_u[alpha={alpha:g}]", peaks)
        rep.series(f"threshold[alpha={alpha:g}]",
                   [(0, thr.energy_lhs), (1, thr.energy_rhs), (2, thr.grad_f), (3, thr.grad_W)])
        rep.check(f"threshold verdict for alpha={alpha:g} is {expected}", thr.verdict == expected,
                  thr.grad_f / thr.grad_W, 1.0, m, note=thr.verdict)
        if alpha < 1:
            bounded = traj.blowup is None and traj.max_amplitude <= 2 * sup_w
            rep.check(f"alpha={alpha:g}: bounded, sup|u| <= 2 sup W on [0, {t_end:g}]", bounded,
                      traj.max_amplitude, 2 * sup_w, m)
        elif alpha > 1:
            hit = traj.blowup is not None and traj.blowup.time < t_end
            bt = traj.blowup.time if traj.blowup else math.inf
            if traj.blowup:
                rep.blowup_time = bt
            rep.check(f"alpha={alpha:g}: blow-up expected: observed before t={t_end:g}", hit, bt, t_end, m,
                      note=traj.blowup.reason if traj.blowup else "no signal")


def exp_scattering_profile(cfg, rep):
    times = [float(t) for t in _pick(cfg.schedule.times, [10.0, 20.0, 40.0])]
    lam = _pick(cfg.lam, 1.0)
    grid = _grid(cfg)
    data = _data(cfg, grid, kind="gaussian", amplitude=_pick(cfg.data.amplitude, 1.0))
    T = max(times)
    dt = cfg.cfl_for(0.5) * grid.dr
    late = sorted({T / 2 + k * T / 8 for k in range(5)} | set(times))
    snap = _Snapshots(late, lambda s: s.copy(), dt)
    traj = evolve(data, _solver(cfg, grid, lam, T), [snap])
    _completed(traj, f"lambda={lam:g}")
    # free pull-back of u(T) to t = 0 for each T
    profiles = {t: _free_shift(snap.values[(t, 1)], -t, cfg, grid) for t in times}
    diffs = [(t2, _energy_norm_diff(profiles[t2], profiles[t1], grid)) for t1, t2 in zip(times, times[1:])]
    m = rep.series("profile_increment", diffs)
    ok = all(b < a for (_, a), (_, b) in zip(diffs, diffs[1:])) if len(diffs) > 1 else True
    rep.check("free pull-backs form a Cauchy sequence (increments decrease)", ok, diffs[-1][1],
              diffs[0][1], m)
    # distance between u(t) and the free wave through u(T), on [T/2, T]
    dist = []
    for t in [x for x in late if x >= T / 2]:
        free = _free_shift(snap.values[(T, 1)], t - T, cfg, grid)
        dist.append((t, _energy_norm_diff(snap.values[(t, 1)], free, grid)))
    m = rep.series("distance_to_free", dist)
    ok = all(b <= a for (_, a), (_, b) in zip(dist, dist[1:]))
    rep.check("||u(t) - u+(t)|| decreases on [T/2, T]", ok, dist[0][1], 0.0, m)


def _free_shift(state, s, cfg, grid):
    """Free evolution of a grid state by time s (either sign)."""
    sign = 1.0 if s >= 0 else -1.0
    data = InitialData(state.u.copy(), sign * state.ut, grid, math.inf, "state", {})
    traj = evolve(data, _solver(cfg, grid, 0.0, abs(s)), strict_domain=False)
    out = traj.final
    return FieldState(out.u, sign * out.ut, state.t + s, grid)


# ----------------------------------------------------------------- registry

@dataclass(frozen=True)
class Recipe:
    fn: object
    anchor: str


REGISTRY = {
    "energy_conservation": Recipe(exp_energy_conservation,
                                  "conserved energy of the critical wave flow"),
    "morawetz_identity": Recipe(exp_morawetz_identity,
                                "finite-time Morawetz identity with boundary terms, and its long-time limit"),
    "localized_limits": Recipe(exp_localized_limits,
                               "limits of (1/R) times space-time integrals over balls: radial, tangential, critical norm"),
    "equipartition": Recipe(exp_equipartition,
                            "virial identity, localized equipartition and the factor-two energy identity"),
    "free_asymptotics": Recipe(exp_free_asymptotics,
                               "free-wave asymptotics: outgoing/incoming decay, interior cone, conformal chain"),
    "flux_pairing_limits": Recipe(exp_flux_pairing_limits,
                                  "limits of the Morawetz flux and the virial pairing"),
    "l2star_decay": Recipe(exp_l2star_decay, "decay of the critical Lebesgue norm of free waves"),
    "no_rate_scaling": Recipe(exp_no_rate_scaling,
                              "scaling invariance ruling out a uniform decay rate"),
    "kenig_merle_dichotomy": Recipe(exp_kenig_merle_dichotomy,
                                    "ground-state threshold dichotomy: global versus blow-up"),
    "scattering_profile": Recipe(exp_scattering_profile,
                                 "asymptotically free behaviour of small defocusing solutions"),
    "convergence_study": Recipe(exp_convergence_study,
                                "numerical convergence of the solver against the exact free propagator"),
}


class UnknownExperiment(KeyError):
    def __str__(self):
        return self.args[0]


def run(name, cfg=None):
    """Run the registered experiment ``name`` and return its report."""
    if name not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {name!r}; registered: {', '.join(REGISTRY)}")
    cfg = cfg or RunConfig(experiment=name)
    recipe = REGISTRY[name]
    rep = ExperimentReport(name, recipe.anchor, cfg.to_flat())
    start = time.perf_counter()
    try:
        recipe.fn(cfg, rep)
    except HypothesisError as exc:
        m = rep.series("hypothesis_audit", [(0, 1.0)])
        rep.check("weight passes the hypothesis audit", False, 1.0, 0.0, m, note=str(exc))
    except ExperimentBlowUp as exc:
        rep.blowup_time = exc.blowup.time
        m = rep.series("blowup", [(exc.blowup.time, exc.blowup.value)])
        rep.check(f"run completes without blow-up ({exc.label})", False, exc.blowup.time, math.inf, m,
                  note=exc.blowup.reason)
    rep.runtime = time.perf_counter() - start
    log.info("%s: %s in %.1fs", name, "pass" if rep.passed else "FAIL", rep.runtime)
    return rep
